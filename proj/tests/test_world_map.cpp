#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <random>

#include "medevac/world_map.h"
#include "test_support.h"

using namespace medevac;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PlatformSpec spec_of(PlatformClass cls, double speed) {
  PlatformSpec s;
  s.id = "probe";
  s.cls = cls;
  s.cruise_speed_kmh = speed;
  s.litter_capacity = 2;
  s.ambulatory_capacity = 4;
  return s;
}

ThreatRing ring(Vec2 c, double r, std::vector<PlatformClass> affects = {PlatformClass::GroundVehicle,
                                                                         PlatformClass::RotaryWing}) {
  ThreatRing t;
  t.id = "T";
  t.center = c;
  t.radius = r;
  t.affects = std::move(affects);
  t.window = {0.0, 1000.0};
  return t;
}

MapPosition at(const WorldMap& m, const std::string& id) { return MapPosition::at_node(m, *m.node_index(id)); }

WorldMap two_nodes() {
  WorldMap m;
  m.nodes = {{"a", {0, 0}, NodeKind::Land}, {"b", {12, 0}, NodeKind::Land}, {"c", {30, 30}, NodeKind::Land}};
  m.roads = {{"a", "b", 12.0, true}};
  m.reindex();
  return m;
}

// Any-angle grid oracle: Dijkstra over a lattice with 32 move directions,
// skipping moves whose segment enters a ring.
double grid_shortest(Vec2 from, Vec2 to, const std::vector<ThreatRing>& rings, double lo, double hi, double h) {
  const int n = static_cast<int>(std::round((hi - lo) / h)) + 1;
  auto idx = [n](int i, int j) { return i * n + j; };
  auto pt = [&](int i, int j) { return Vec2{lo + i * h, lo + j * h}; };
  auto clear = [&](Vec2 a, Vec2 b) {
    for (const auto& r : rings) {
      if (segment_hits_ring(a, b, r)) return false;
    }
    return true;
  };
  std::vector<std::pair<int, int>> moves;
  for (int dx = -3; dx <= 3; ++dx) {
    for (int dy = -3; dy <= 3; ++dy) {
      if ((dx || dy) && std::gcd(std::abs(dx), std::abs(dy)) == 1) moves.push_back({dx, dy});
    }
  }
  auto snap = [&](Vec2 p) { return std::pair{static_cast<int>(std::round((p.x - lo) / h)), static_cast<int>(std::round((p.y - lo) / h))}; };
  const auto [si, sj] = snap(from);
  const auto [ti, tj] = snap(to);
  std::vector<double> dist(static_cast<std::size_t>(n) * n, kInf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[idx(si, sj)] = 0.0;
  pq.push({0.0, idx(si, sj)});
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    const int i = u / n, j = u % n;
    if (i == ti && j == tj) return d;
    for (const auto& [dx, dy] : moves) {
      const int a = i + dx, b = j + dy;
      if (a < 0 || b < 0 || a >= n || b >= n) continue;
      const double nd = d + h * std::hypot(dx, dy);
      if (nd >= dist[idx(a, b)]) continue;
      if (!clear(pt(i, j), pt(a, b))) continue;
      dist[idx(a, b)] = nd;
      pq.push({nd, idx(a, b)});
    }
  }
  return kInf;
}

// Exhaustive simple-path enumeration over passable, ring-free edges.
double brute_shortest(const WorldMap& m, std::size_t from, std::size_t to, const std::vector<ThreatRing>& rings) {
  const std::size_t n = m.nodes.size();
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (const auto& e : m.roads) {
    if (!e.ground_passable) continue;
    const auto a = *m.node_index(e.a), b = *m.node_index(e.b);
    bool blocked = false;
    for (const auto& r : rings) blocked |= segment_hits_ring(m.nodes[a].pos, m.nodes[b].pos, r);
    if (blocked) continue;
    adj[a].push_back({b, e.length});
    adj[b].push_back({a, e.length});
  }
  double best = kInf;
  std::vector<bool> seen(n, false);
  std::function<void(std::size_t, double)> dfs = [&](std::size_t u, double d) {
    if (d >= best) return;
    if (u == to) {
      best = d;
      return;
    }
    seen[u] = true;
    for (const auto& [v, w] : adj[u]) {
      if (!seen[v]) dfs(v, d + w);
    }
    seen[u] = false;
  };
  dfs(from, 0.0);
  return best;
}

WorldMap random_graph(std::mt19937_64& gen, int nodes) {
  std::uniform_real_distribution<double> coord(0.0, 50.0), stretch(1.0, 1.6), unit(0.0, 1.0);
  WorldMap m;
  for (int i = 0; i < nodes; ++i) m.nodes.push_back({"n" + std::to_string(i), {coord(gen), coord(gen)}, NodeKind::Land});
  for (int i = 0; i < nodes; ++i) {
    for (int j = i + 1; j < nodes; ++j) {
      if (unit(gen) < 0.3) {
        const double d = distance(m.nodes[i].pos, m.nodes[j].pos);
        m.roads.push_back({m.nodes[i].id, m.nodes[j].id, d * stretch(gen), unit(gen) < 0.9});
      }
    }
  }
  m.reindex();
  return m;
}

}  // namespace

TEST(PlanRoute, SingleRoadEta) {
  const WorldMap m = two_nodes();
  const auto r = plan_route(m, spec_of(PlatformClass::GroundVehicle, 60.0), at(m, "a"), at(m, "b"), {}, 0.0);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->mode, RouteMode::Road);
  EXPECT_DOUBLE_EQ(r->total_distance, 12.0);
  EXPECT_DOUBLE_EQ(r->eta, 12.0);
}

TEST(PlanRoute, RingDeniesRoadButNotClearSky) {
  const WorldMap m = two_nodes();
  const std::vector<ThreatRing> rings{ring({6, 0}, 2.0, {PlatformClass::GroundVehicle})};
  EXPECT_FALSE(plan_route(m, spec_of(PlatformClass::GroundVehicle, 60.0), at(m, "a"), at(m, "b"), rings, 10.0));
  const auto air = plan_route(m, spec_of(PlatformClass::RotaryWing, 240.0), at(m, "a"), at(m, "b"), rings, 10.0);
  ASSERT_TRUE(air);
  EXPECT_DOUBLE_EQ(air->total_distance, 12.0);
}

TEST(PlanRoute, NoRoadIsUnreachable) {
  const WorldMap m = two_nodes();
  EXPECT_FALSE(plan_route(m, spec_of(PlatformClass::GroundVehicle, 60.0), at(m, "a"), at(m, "c"), {}, 0.0));
}

TEST(PlanRoute, InactiveRingIgnored) {
  const WorldMap m = two_nodes();
  ThreatRing late = ring({6, 0}, 2.0);
  late.window = {50.0, 60.0};
  EXPECT_TRUE(plan_route(m, spec_of(PlatformClass::GroundVehicle, 60.0), at(m, "a"), at(m, "b"), std::span(&late, 1), 10.0));
  EXPECT_FALSE(plan_route(m, spec_of(PlatformClass::GroundVehicle, 60.0), at(m, "a"), at(m, "b"), std::span(&late, 1), 55.0));
}

TEST(PlanRoute, UnknownNodeThrows) {
  const WorldMap m = two_nodes();
  MapPosition bogus{{0, 0}, 99, std::nullopt};
  EXPECT_THROW(plan_route(m, spec_of(PlatformClass::GroundVehicle, 60.0), bogus, at(m, "b"), {}, 0.0),
               std::invalid_argument);
}

TEST(PlanRoute, AirDetourMatchesGridOracle) {
  WorldMap m;
  const Vec2 from{0, 0}, to{20, 0};
  const std::vector<ThreatRing> rings{ring({10, 0}, 4.0)};
  const auto r = plan_route(m, spec_of(PlatformClass::RotaryWing, 240.0), MapPosition::free(from),
                            MapPosition::free(to), rings, 0.0);
  ASSERT_TRUE(r);
  EXPECT_GT(r->total_distance, 20.0);
  // Analytic tangent-arc length as a second witness.
  const double tangent = std::sqrt(10.0 * 10.0 - 4.0 * 4.0);
  const double arc = 4.0 * (std::numbers::pi - 2.0 * std::acos(4.0 / 10.0));
  const double exact = 2.0 * tangent + arc;
  EXPECT_NEAR(r->total_distance, exact, exact * 0.01);
  const double grid = grid_shortest(from, to, rings, -10.0, 30.0, 0.1);
  EXPECT_NEAR(r->total_distance, grid, grid * 0.02);
  for (const auto& leg : r->legs) EXPECT_FALSE(segment_hits_ring(leg.from, leg.to, rings[0]));
}

TEST(PlanRoute, AirDetourAroundTwoRingsMatchesGridOracle) {
  WorldMap m;
  const Vec2 from{0, 0}, to{24, 4};
  const std::vector<ThreatRing> rings{ring({8, 1}, 3.0), ring({16, 3}, 2.5)};
  const auto r = plan_route(m, spec_of(PlatformClass::RotaryWing, 400.0), MapPosition::free(from),
                            MapPosition::free(to), rings, 0.0);
  ASSERT_TRUE(r);
  const double grid = grid_shortest(from, to, rings, -8.0, 32.0, 0.1);
  EXPECT_NEAR(r->total_distance, grid, grid * 0.02);
}

TEST(PlanRoute, ExhaustiveOracleOnSmallGraphs) {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> coord(0.0, 50.0), rad(2.0, 6.0);
  int compared = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const WorldMap m = random_graph(gen, 6 + trial % 7);
    std::vector<ThreatRing> rings;
    if (trial % 2) rings.push_back(ring({coord(gen), coord(gen)}, rad(gen)));
    const std::size_t a = 0, b = m.nodes.size() - 1;
    bool endpoint_inside = false;
    for (const auto& r : rings) endpoint_inside |= point_in_ring(m.nodes[a].pos, r) || point_in_ring(m.nodes[b].pos, r);
    if (endpoint_inside) continue;
    const double oracle = brute_shortest(m, a, b, rings);
    const auto r = plan_route(m, spec_of(PlatformClass::GroundVehicle, 50.0), MapPosition::at_node(m, a),
                              MapPosition::at_node(m, b), rings, 1.0);
    if (!std::isfinite(oracle)) {
      EXPECT_FALSE(r) << "trial " << trial;
      continue;
    }
    ASSERT_TRUE(r) << "trial " << trial;
    EXPECT_NEAR(r->total_distance, oracle, 1e-9) << "trial " << trial;
    ++compared;
  }
  EXPECT_GT(compared, 50);
}

TEST(PlanRoute, EtaAdditiveAndRingsNeverShorten) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> coord(0.0, 50.0), rad(1.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const WorldMap m = random_graph(gen, 9);
    const std::vector<ThreatRing> rings{ring({coord(gen), coord(gen)}, rad(gen))};
    for (auto cls : {PlatformClass::GroundVehicle, PlatformClass::RotaryWing}) {
      const auto spec = spec_of(cls, cls == PlatformClass::GroundVehicle ? 50.0 : 250.0);
      const auto clear = plan_route(m, spec, MapPosition::at_node(m, 0), MapPosition::at_node(m, 8), {}, 0.0);
      const auto ringed = plan_route(m, spec, MapPosition::at_node(m, 0), MapPosition::at_node(m, 8), rings, 0.0);
      if (!ringed) continue;
      ASSERT_TRUE(clear);
      EXPECT_LE(clear->total_distance, ringed->total_distance + 1e-9);
      double sum = 0.0;
      for (const auto& leg : ringed->legs) {
        EXPECT_GE(leg.length, 0.0);
        sum += leg.length;
      }
      EXPECT_NEAR(sum, ringed->total_distance, 1e-9);
      EXPECT_NEAR(ringed->eta, ringed->total_distance / spec.cruise_speed_kmh * 60.0, 1e-9);
    }
  }
}

TEST(AdvancePlatform, ExactRemainingDistanceArrives) {
  const WorldMap m = two_nodes();
  const auto r = plan_route(m, spec_of(PlatformClass::GroundVehicle, 60.0), at(m, "a"), at(m, "b"), {}, 0.0);
  ASSERT_TRUE(r);
  const AdvanceResult res = advance_platform(m, *r, 4.0, 60.0, 8.0, {}, PlatformClass::GroundVehicle, 8.0);
  EXPECT_TRUE(res.arrived);
  EXPECT_EQ(res.position.pos, (Vec2{12, 0}));
  EXPECT_DOUBLE_EQ(res.traveled, 12.0);
}

TEST(AdvancePlatform, ZeroStepIsIdentity) {
  const WorldMap m = two_nodes();
  const auto r = plan_route(m, spec_of(PlatformClass::GroundVehicle, 60.0), at(m, "a"), at(m, "b"), {}, 0.0);
  const AdvanceResult res = advance_platform(m, *r, 5.0, 60.0, 0.0, {}, PlatformClass::GroundVehicle, 0.0);
  EXPECT_FALSE(res.arrived);
  EXPECT_FALSE(res.halted);
  EXPECT_DOUBLE_EQ(res.traveled, 5.0);
  EXPECT_EQ(res.position, r->position_at(m, 5.0));
}

TEST(AdvancePlatform, RingOnRemainderHalts) {
  const WorldMap m = two_nodes();
  const auto r = plan_route(m, spec_of(PlatformClass::GroundVehicle, 60.0), at(m, "a"), at(m, "b"), {}, 0.0);
  const std::vector<ThreatRing> rings{ring({10, 0}, 1.0)};
  const AdvanceResult res = advance_platform(m, *r, 2.0, 60.0, 1.0, rings, PlatformClass::GroundVehicle, 5.0);
  EXPECT_TRUE(res.halted);
  EXPECT_FALSE(res.arrived);
  EXPECT_LE(res.traveled, 2.0 + 1e-12);
  EXPECT_TRUE(remaining_route_blocked(m, *r, 2.0, rings, PlatformClass::GroundVehicle, 5.0));
  EXPECT_FALSE(remaining_route_blocked(m, *r, 11.5, rings, PlatformClass::GroundVehicle, 5.0));
}

TEST(ThreatSpawnerTest, DisabledNeverSpawns) {
  AdversaryParams p;
  p.enabled = false;
  p.corridors = {{{0, 0}, {10, 0}, 2.0}};
  ThreatSpawner s(p, 1);
  EXPECT_TRUE(s.spawn_until(p, 1e7).empty());
}

TEST(ThreatSpawnerTest, SeededAndInsideCorridors) {
  AdversaryParams p;
  p.enabled = true;
  p.first_after = 10.0;
  p.mean_interval = 5.0;
  p.corridors = {{{0, 0}, {40, 10}, 3.0}, {{-20, 50}, {-20, 80}, 1.5}};
  ThreatSpawner a(p, 77), b(p, 77);
  const auto ra = a.spawn_until(p, 10000.0);
  const auto rb = b.spawn_until(p, 10000.0);
  ASSERT_GE(ra.size(), 1000u);
  EXPECT_EQ(ra, rb);
  Minutes prev = 0.0;
  for (const auto& r : ra) {
    EXPECT_TRUE(inside_corridors(p, r.center, 1e-9)) << r.id;
    EXPECT_GE(r.radius, p.radius_min);
    EXPECT_LE(r.radius, p.radius_max);
    const Minutes len = r.window.end - r.window.start;
    EXPECT_GE(len, p.duration_min);
    EXPECT_LE(len, p.duration_max);
    EXPECT_GE(r.window.start, prev);
    EXPECT_GE(r.window.start, p.first_after);
    prev = r.window.start;
  }
}

TEST(ThreatSpawnerTest, CheckpointResumesStream) {
  AdversaryParams p;
  p.enabled = true;
  p.mean_interval = 20.0;
  p.corridors = {{{0, 0}, {10, 0}, 2.0}};
  ThreatSpawner a(p, 3);
  a.spawn_until(p, 100.0);
  ThreatSpawner b;
  b.restore(a.to_json());
  EXPECT_EQ(a.spawn_until(p, 500.0), b.spawn_until(p, 500.0));
}

TEST(Geometry, SegmentRingPredicates) {
  const ThreatRing r = ring({0, 0}, 1.0);
  EXPECT_TRUE(segment_hits_ring({-2, 0}, {2, 0}, r));
  EXPECT_FALSE(segment_hits_ring({-2, 1.5}, {2, 1.5}, r));
  EXPECT_FALSE(segment_hits_ring({-2, 1.0}, {2, 1.0}, r));  // tangent touches the closed boundary only
  EXPECT_TRUE(point_in_ring({0.5, 0.5}, r));
  EXPECT_DOUBLE_EQ(segment_point_distance({0, 0}, {10, 0}, {5, 3}), 3.0);
}
