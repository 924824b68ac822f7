#include "medevac/world_map.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>

namespace medevac {
namespace {

constexpr int kRingPolygonSides = 32;
constexpr double kInf = std::numeric_limits<double>::infinity();

Vec2 lerp(Vec2 a, Vec2 b, double f) { return a + (b - a) * f; }

Json vec_json(Vec2 v) { return Json::array({v.x, v.y}); }
Vec2 vec_from(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

bool on_network(const MapNode& n, RouteMode mode) {
  return mode == RouteMode::Sea ? n.kind != NodeKind::Land : n.kind != NodeKind::Water;
}

const std::vector<MapEdge>& edges_of(const WorldMap& map, RouteMode mode) {
  return mode == RouteMode::Sea ? map.sea_lanes : map.roads;
}

bool any_hit(Vec2 a, Vec2 b, std::span<const ThreatRing> rings) {
  return std::any_of(rings.begin(), rings.end(), [&](const ThreatRing& r) { return segment_hits_ring(a, b, r); });
}

struct Endpoint {
  // (graph node, cost, partial segment geometry) links from a virtual point
  struct Link {
    std::size_t node;
    Km length;
    Vec2 from;
    Vec2 to;
    std::size_t edge;
    bool reversed;
    Km offset0;
  };
  std::optional<std::size_t> node;
  std::vector<Link> links;
};

std::size_t node_of_edge_end(const WorldMap& map, const MapEdge& e, bool b_end) {
  auto idx = map.node_index(b_end ? e.b : e.a);
  if (!idx) throw std::invalid_argument("edge references unknown node");
  return *idx;
}

Endpoint graph_endpoint(const WorldMap& map, const MapPosition& p, RouteMode mode, std::span<const ThreatRing> rings,
                        bool outbound) {
  Endpoint ep;
  if (p.node) {
    if (*p.node >= map.nodes.size()) throw std::invalid_argument("position references unknown node");
    ep.node = *p.node;
    return ep;
  }
  if (!p.on_edge) throw std::invalid_argument("ground/sea routing needs a node or edge position");
  const auto& edges = edges_of(map, mode);
  if (p.on_edge->network != mode) return ep;  // wrong network: no links, unreachable
  if (p.on_edge->edge >= edges.size()) throw std::invalid_argument("position references unknown edge");
  const MapEdge& e = edges[p.on_edge->edge];
  const std::size_t a = node_of_edge_end(map, e, false);
  const std::size_t b = node_of_edge_end(map, e, true);
  const Km off = std::clamp(p.on_edge->offset, 0.0, e.length);
  const Vec2 pa = map.nodes[a].pos;
  const Vec2 pb = map.nodes[b].pos;
  if (!any_hit(p.pos, pa, rings)) {
    if (outbound) ep.links.push_back({a, off, p.pos, pa, p.on_edge->edge, true, off});
    else ep.links.push_back({a, off, pa, p.pos, p.on_edge->edge, false, 0.0});
  }
  if (!any_hit(p.pos, pb, rings)) {
    if (outbound) ep.links.push_back({b, e.length - off, p.pos, pb, p.on_edge->edge, false, off});
    else ep.links.push_back({b, e.length - off, pb, p.pos, p.on_edge->edge, true, e.length});
  }
  return ep;
}

std::optional<Route> plan_graph_route(const WorldMap& map, RouteMode mode, const PlatformSpec& platform,
                                      const MapPosition& from, const MapPosition& to,
                                      std::span<const ThreatRing> rings) {
  const auto& edges = edges_of(map, mode);
  const std::size_t n = map.nodes.size();
  Endpoint src = graph_endpoint(map, from, mode, rings, true);
  Endpoint dst = graph_endpoint(map, to, mode, rings, false);
  if (src.node && !on_network(map.nodes[*src.node], mode)) return std::nullopt;
  if (dst.node && !on_network(map.nodes[*dst.node], mode)) return std::nullopt;

  Route route;
  route.mode = mode;
  route.origin = from;
  route.destination = to;

  // Both points on the same edge: travel directly along it when clear.
  std::optional<Km> direct;
  if (from.on_edge && to.on_edge && from.on_edge->network == mode && to.on_edge->network == mode &&
      from.on_edge->edge == to.on_edge->edge && !any_hit(from.pos, to.pos, rings)) {
    direct = std::fabs(to.on_edge->offset - from.on_edge->offset);
  }

  if (src.node && dst.node && *src.node == *dst.node) return route;

  struct Adj {
    std::size_t to;
    std::size_t edge;
    bool reversed;
  };
  std::vector<std::vector<Adj>> adj(n);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const MapEdge& e = edges[i];
    if (mode == RouteMode::Road && !e.ground_passable) continue;
    const std::size_t a = node_of_edge_end(map, e, false);
    const std::size_t b = node_of_edge_end(map, e, true);
    if (any_hit(map.nodes[a].pos, map.nodes[b].pos, rings)) continue;
    adj[a].push_back({b, i, false});
    adj[b].push_back({a, i, true});
  }

  // Dijkstra over nodes plus the virtual source (index n).
  const std::size_t vsrc = n;
  std::vector<double> dist(n + 1, kInf);
  struct Prev {
    std::size_t node = SIZE_MAX;
    std::size_t edge = SIZE_MAX;
    bool reversed = false;
    int link = -1;  // index into src.links when coming from the virtual source
  };
  std::vector<Prev> prev(n + 1);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  if (src.node) {
    dist[*src.node] = 0.0;
    pq.push({0.0, *src.node});
  } else {
    dist[vsrc] = 0.0;
    for (std::size_t li = 0; li < src.links.size(); ++li) {
      const auto& l = src.links[li];
      if (l.length < dist[l.node]) {
        dist[l.node] = l.length;
        prev[l.node] = {vsrc, l.edge, l.reversed, static_cast<int>(li)};
        pq.push({l.length, l.node});
      }
    }
  }
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (const Adj& a : adj[u]) {
      const double nd = d + edges[a.edge].length;
      if (nd < dist[a.to]) {
        dist[a.to] = nd;
        prev[a.to] = {u, a.edge, a.reversed, -1};
        pq.push({nd, a.to});
      }
    }
  }

  // Resolve the best arrival at the destination.
  double best = kInf;
  std::optional<std::size_t> last_node;
  int dst_link = -1;
  if (dst.node) {
    best = dist[*dst.node];
    last_node = *dst.node;
  } else {
    for (std::size_t li = 0; li < dst.links.size(); ++li) {
      const auto& l = dst.links[li];
      if (dist[l.node] + l.length < best) {
        best = dist[l.node] + l.length;
        last_node = l.node;
        dst_link = static_cast<int>(li);
      }
    }
  }
  if (direct && *direct <= best) {
    RouteLeg leg{from.pos, to.pos, *direct, std::nullopt, from.on_edge->edge,
                 to.on_edge->offset < from.on_edge->offset, from.on_edge->offset};
    route.legs.push_back(leg);
    route.total_distance = *direct;
    route.eta = route.total_distance / platform.cruise_speed_kmh * 60.0;
    return route;
  }
  if (!std::isfinite(best) || !last_node) return std::nullopt;

  std::vector<RouteLeg> rev;
  if (dst_link >= 0) {
    const auto& l = dst.links[static_cast<std::size_t>(dst_link)];
    rev.push_back({l.from, l.to, l.length, std::nullopt, l.edge, l.reversed, l.offset0});
  }
  std::size_t cur = *last_node;
  while (!(src.node && cur == *src.node)) {
    const Prev& p = prev[cur];
    if (p.link >= 0) {
      const auto& l = src.links[static_cast<std::size_t>(p.link)];
      rev.push_back({l.from, l.to, l.length, cur, l.edge, l.reversed, l.offset0});
      break;
    }
    if (p.node == SIZE_MAX) return std::nullopt;
    const MapEdge& e = edges[p.edge];
    rev.push_back({map.nodes[p.node].pos, map.nodes[cur].pos, e.length, cur, p.edge, p.reversed,
                   p.reversed ? e.length : 0.0});
    cur = p.node;
  }
  route.legs.assign(rev.rbegin(), rev.rend());
  for (const auto& leg : route.legs) route.total_distance += leg.length;
  route.eta = route.total_distance / platform.cruise_speed_kmh * 60.0;
  return route;
}

std::optional<Route> plan_air_route(const PlatformSpec& platform, const MapPosition& from, const MapPosition& to,
                                    std::span<const ThreatRing> rings) {
  for (const auto& r : rings) {
    if (point_in_ring(from.pos, r) || point_in_ring(to.pos, r)) return std::nullopt;
  }
  Route route;
  route.mode = RouteMode::Air;
  route.origin = from;
  route.destination = to;
  auto finish = [&](const std::vector<Vec2>& pts) {
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      RouteLeg leg;
      leg.from = pts[i];
      leg.to = pts[i + 1];
      leg.length = distance(pts[i], pts[i + 1]);
      if (i + 2 == pts.size()) leg.end_node = to.node;
      route.legs.push_back(leg);
      route.total_distance += leg.length;
    }
    route.eta = route.total_distance / platform.cruise_speed_kmh * 60.0;
    return route;
  };
  if (from.pos == to.pos) return route;
  if (!any_hit(from.pos, to.pos, rings)) return finish({from.pos, to.pos});

  // Visibility graph over circumscribed ring polygons.
  std::vector<Vec2> verts{from.pos, to.pos};
  const double inflate = 1.0 / std::cos(std::numbers::pi / kRingPolygonSides) * (1.0 + 1e-7);
  for (const auto& r : rings) {
    for (int k = 0; k < kRingPolygonSides; ++k) {
      const double th = 2.0 * std::numbers::pi * k / kRingPolygonSides;
      Vec2 v{r.center.x + r.radius * inflate * std::cos(th), r.center.y + r.radius * inflate * std::sin(th)};
      bool inside = std::any_of(rings.begin(), rings.end(), [&](const ThreatRing& o) { return point_in_ring(v, o); });
      if (!inside) verts.push_back(v);
    }
  }
  const std::size_t n = verts.size();
  std::vector<double> dist(n, kInf);
  std::vector<std::size_t> prev(n, SIZE_MAX);
  std::vector<bool> done(n, false);
  dist[0] = 0.0;
  for (;;) {
    std::size_t u = SIZE_MAX;
    for (std::size_t i = 0; i < n; ++i) {
      if (!done[i] && std::isfinite(dist[i]) && (u == SIZE_MAX || dist[i] < dist[u])) u = i;
    }
    if (u == SIZE_MAX || u == 1) break;
    done[u] = true;
    for (std::size_t v = 0; v < n; ++v) {
      if (done[v] || v == u) continue;
      const double nd = dist[u] + distance(verts[u], verts[v]);
      if (nd >= dist[v]) continue;
      if (any_hit(verts[u], verts[v], rings)) continue;
      dist[v] = nd;
      prev[v] = u;
    }
  }
  if (!std::isfinite(dist[1])) return std::nullopt;
  std::vector<Vec2> pts;
  for (std::size_t v = 1; v != SIZE_MAX; v = prev[v]) pts.push_back(verts[v]);
  std::reverse(pts.begin(), pts.end());
  pts.front() = from.pos;
  pts.back() = to.pos;
  return finish(pts);
}

}  // namespace

std::string_view to_string(RouteMode m) {
  switch (m) {
    case RouteMode::Road: return "road";
    case RouteMode::Sea: return "sea";
    case RouteMode::Air: return "air";
  }
  return "?";
}

std::optional<RouteMode> parse_route_mode(std::string_view s) {
  if (s == "road") return RouteMode::Road;
  if (s == "sea") return RouteMode::Sea;
  if (s == "air") return RouteMode::Air;
  return std::nullopt;
}

RouteMode route_mode_for(PlatformClass c) {
  switch (c) {
    case PlatformClass::GroundVehicle: return RouteMode::Road;
    case PlatformClass::Ship: return RouteMode::Sea;
    default: return RouteMode::Air;
  }
}

MapPosition MapPosition::at_node(const WorldMap& map, std::size_t node) {
  if (node >= map.nodes.size()) throw std::invalid_argument("MapPosition::at_node: unknown node");
  return {map.nodes[node].pos, node, std::nullopt};
}

MapPosition Route::position_at(const WorldMap& map, Km traveled) const {
  (void)map;
  if (legs.empty() || traveled >= total_distance) return destination;
  if (traveled <= 0.0) return origin;
  Km remaining = traveled;
  for (const auto& leg : legs) {
    if (remaining < leg.length) {
      MapPosition p;
      p.pos = leg.length > 0.0 ? lerp(leg.from, leg.to, remaining / leg.length) : leg.to;
      if (leg.edge) {
        const Km off = leg.reversed ? leg.edge_offset0 - remaining : leg.edge_offset0 + remaining;
        p.on_edge = EdgePoint{mode, *leg.edge, off};
      }
      return p;
    }
    remaining -= leg.length;
    if (remaining == 0.0) {
      MapPosition p = MapPosition::free(leg.to);
      p.node = leg.end_node;
      return p;
    }
  }
  return destination;
}

Json to_json(const MapPosition& p) {
  Json j{{"pos", vec_json(p.pos)}};
  if (p.node) j["node"] = *p.node;
  if (p.on_edge) {
    j["edge"] = {{"network", to_string(p.on_edge->network)}, {"index", p.on_edge->edge}, {"offset", p.on_edge->offset}};
  }
  return j;
}

MapPosition position_from_json(const Json& j) {
  MapPosition p;
  p.pos = vec_from(j.at("pos"));
  if (j.contains("node")) p.node = j.at("node").get<std::size_t>();
  if (j.contains("edge")) {
    const Json& e = j.at("edge");
    p.on_edge = EdgePoint{parse_route_mode(e.at("network").get<std::string>()).value_or(RouteMode::Road),
                          e.at("index").get<std::size_t>(), e.at("offset").get<double>()};
  }
  return p;
}

Json to_json(const Route& r) {
  Json legs = Json::array();
  for (const auto& l : r.legs) {
    Json j{{"from", vec_json(l.from)}, {"to", vec_json(l.to)}, {"length_km", l.length}};
    if (l.end_node) j["end_node"] = *l.end_node;
    if (l.edge) {
      j["edge"] = *l.edge;
      j["reversed"] = l.reversed;
      j["edge_offset0"] = l.edge_offset0;
    }
    legs.push_back(std::move(j));
  }
  return Json{{"mode", to_string(r.mode)},
              {"origin", to_json(r.origin)},
              {"destination", to_json(r.destination)},
              {"legs", legs},
              {"total_km", r.total_distance},
              {"eta_min", r.eta}};
}

Route route_from_json(const Json& j) {
  Route r;
  r.mode = parse_route_mode(j.at("mode").get<std::string>()).value_or(RouteMode::Air);
  r.origin = position_from_json(j.at("origin"));
  r.destination = position_from_json(j.at("destination"));
  for (const auto& l : j.at("legs")) {
    RouteLeg leg;
    leg.from = vec_from(l.at("from"));
    leg.to = vec_from(l.at("to"));
    leg.length = l.at("length_km").get<double>();
    if (l.contains("end_node")) leg.end_node = l.at("end_node").get<std::size_t>();
    if (l.contains("edge")) {
      leg.edge = l.at("edge").get<std::size_t>();
      leg.reversed = l.at("reversed").get<bool>();
      leg.edge_offset0 = l.at("edge_offset0").get<double>();
    }
    r.legs.push_back(leg);
  }
  r.total_distance = j.at("total_km").get<double>();
  r.eta = j.at("eta_min").get<double>();
  return r;
}

double segment_point_distance(Vec2 a, Vec2 b, Vec2 p) {
  const Vec2 ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  if (len2 == 0.0) return distance(a, p);
  const Vec2 ap = p - a;
  const double t = std::clamp((ap.x * ab.x + ap.y * ab.y) / len2, 0.0, 1.0);
  return distance(a + ab * t, p);
}

bool segment_hits_ring(Vec2 a, Vec2 b, const ThreatRing& ring) {
  return segment_point_distance(a, b, ring.center) < ring.radius;
}

bool point_in_ring(Vec2 p, const ThreatRing& ring) { return distance(p, ring.center) < ring.radius; }

std::vector<ThreatRing> rings_affecting(std::span<const ThreatRing> rings, PlatformClass cls, Minutes now) {
  std::vector<ThreatRing> out;
  for (const auto& r : rings) {
    if (r.active_at(now) && r.affects_class(cls)) out.push_back(r);
  }
  return out;
}

std::optional<Route> plan_route(const WorldMap& map, const PlatformSpec& platform, const MapPosition& from,
                                const MapPosition& to, std::span<const ThreatRing> rings, Minutes now) {
  if (from.node && *from.node >= map.nodes.size()) throw std::invalid_argument("plan_route: unknown origin node");
  if (to.node && *to.node >= map.nodes.size()) throw std::invalid_argument("plan_route: unknown destination node");
  const auto active = rings_affecting(rings, platform.cls, now);
  const RouteMode mode = route_mode_for(platform.cls);
  if (mode == RouteMode::Air) return plan_air_route(platform, from, to, active);
  return plan_graph_route(map, mode, platform, from, to, active);
}

bool remaining_route_blocked(const WorldMap& map, const Route& route, Km traveled,
                             std::span<const ThreatRing> rings, PlatformClass cls, Minutes now) {
  const auto active = rings_affecting(rings, cls, now);
  if (active.empty() || route.legs.empty() || traveled >= route.total_distance) return false;
  const Vec2 here = route.position_at(map, traveled).pos;
  Km acc = 0.0;
  bool started = false;
  for (const auto& leg : route.legs) {
    const Km leg_end = acc + leg.length;
    if (!started && traveled < leg_end) {
      started = true;
      if (any_hit(here, leg.to, active)) return true;
    } else if (started) {
      if (any_hit(leg.from, leg.to, active)) return true;
    }
    acc = leg_end;
  }
  return false;
}

AdvanceResult advance_platform(const WorldMap& map, const Route& route, Km traveled, double speed_kmh, Minutes dt,
                               std::span<const ThreatRing> rings, PlatformClass cls, Minutes now) {
  AdvanceResult r;
  r.traveled = traveled;
  if (remaining_route_blocked(map, route, traveled, rings, cls, now)) {
    r.halted = true;
    r.position = route.position_at(map, traveled);
    return r;
  }
  r.traveled = std::min(route.total_distance, traveled + speed_kmh * dt / 60.0);
  r.arrived = r.traveled >= route.total_distance;
  r.position = r.arrived ? route.destination : route.position_at(map, r.traveled);
  return r;
}

ThreatRing draw_ring(const AdversaryParams& params, RngStream& rng, Minutes at, std::string id) {
  ThreatRing ring;
  ring.id = std::move(id);
  const Corridor& c = params.corridors[rng.index(params.corridors.size())];
  const double t = rng.uniform01();
  const double off = rng.uniform(-c.half_width, c.half_width);
  const Vec2 axis = c.b - c.a;
  const double len = axis.norm();
  Vec2 normal{0.0, 0.0};
  if (len > 0.0) {
    normal = {-axis.y / len, axis.x / len};
  } else {
    const double th = rng.uniform(0.0, 2.0 * std::numbers::pi);
    normal = {std::cos(th), std::sin(th)};
  }
  ring.center = c.a + axis * t + normal * off;
  ring.radius = rng.uniform(params.radius_min, params.radius_max);
  const Minutes dur = rng.uniform(params.duration_min, params.duration_max);
  ring.window = {at, at + dur};
  ring.affects = params.affects;
  return ring;
}

bool inside_corridors(const AdversaryParams& params, Vec2 p, double tolerance) {
  return std::any_of(params.corridors.begin(), params.corridors.end(), [&](const Corridor& c) {
    return segment_point_distance(c.a, c.b, p) <= c.half_width + tolerance;
  });
}

ThreatSpawner::ThreatSpawner(const AdversaryParams& params, std::uint64_t seed) : rng_(seed, "adversary") {
  next_time_ = params.enabled ? params.first_after + rng_.exponential(params.mean_interval) : kInf;
}

std::vector<ThreatRing> ThreatSpawner::spawn_until(const AdversaryParams& params, Minutes until) {
  std::vector<ThreatRing> out;
  if (!params.enabled || params.corridors.empty()) return out;
  while (next_time_ < until) {
    out.push_back(draw_ring(params, rng_, next_time_, "R" + std::to_string(++counter_)));
    next_time_ += rng_.exponential(params.mean_interval);
  }
  return out;
}

Json ThreatSpawner::to_json() const {
  return Json{{"rng", rng_.state()},
              {"next_time", std::isfinite(next_time_) ? Json(next_time_) : Json(nullptr)},
              {"counter", counter_}};
}

void ThreatSpawner::restore(const Json& j) {
  rng_.set_state(j.at("rng").get<std::string>());
  next_time_ = j.at("next_time").is_null() ? kInf : j.at("next_time").get<double>();
  counter_ = j.at("counter").get<long>();
}

}  // namespace medevac
