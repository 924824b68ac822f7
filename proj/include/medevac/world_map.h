#pragma once

// Spatial model: road and sea-lane graphs, free-flight air routing around
// threat rings, and movement along planned routes.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "medevac/random.h"
#include "medevac/scenario.h"

namespace medevac {

enum class RouteMode { Road, Sea, Air };

std::string_view to_string(RouteMode m);
std::optional<RouteMode> parse_route_mode(std::string_view s);
RouteMode route_mode_for(PlatformClass c);

/// A point part-way along a road or sea-lane edge, `offset` km from edge.a.
struct EdgePoint {
  RouteMode network = RouteMode::Road;
  std::size_t edge = 0;
  Km offset = 0.0;
  friend bool operator==(const EdgePoint&, const EdgePoint&) = default;
};

/// Continuous position, optionally pinned to a graph node or edge.
struct MapPosition {
  Vec2 pos;
  std::optional<std::size_t> node;
  std::optional<EdgePoint> on_edge;

  static MapPosition at_node(const WorldMap& map, std::size_t node);
  static MapPosition free(Vec2 p) { return {p, std::nullopt, std::nullopt}; }
  friend bool operator==(const MapPosition&, const MapPosition&) = default;
};

struct RouteLeg {
  Vec2 from;
  Vec2 to;
  Km length = 0.0;
  /// Graph anchor at the end of the leg, if any.
  std::optional<std::size_t> end_node;
  /// Edge the leg runs along (road/sea only); reversed when travelling b->a.
  std::optional<std::size_t> edge;
  bool reversed = false;
  /// Offset along `edge` (from edge.a) where the leg starts.
  Km edge_offset0 = 0.0;
  friend bool operator==(const RouteLeg&, const RouteLeg&) = default;
};

struct Route {
  RouteMode mode = RouteMode::Air;
  MapPosition origin;
  MapPosition destination;
  std::vector<RouteLeg> legs;
  Km total_distance = 0.0;
  /// Minutes at cruise speed.
  Minutes eta = 0.0;

  /// Position after travelling `traveled` km (clamped to the route).
  MapPosition position_at(const WorldMap& map, Km traveled) const;
  friend bool operator==(const Route&, const Route&) = default;
};

Json to_json(const Route& r);
Route route_from_json(const Json& j);
Json to_json(const MapPosition& p);
MapPosition position_from_json(const Json& j);

/// True when the closed segment a-b meets the open disk of `ring`.
bool segment_hits_ring(Vec2 a, Vec2 b, const ThreatRing& ring);
bool point_in_ring(Vec2 p, const ThreatRing& ring);
double segment_point_distance(Vec2 a, Vec2 b, Vec2 p);

/// Rings active at `now` that affect platform class `cls`.
std::vector<ThreatRing> rings_affecting(std::span<const ThreatRing> rings, PlatformClass cls, Minutes now);

/// Shortest legal route or nullopt (Unreachable). Road/sea platforms use
/// the passable graph minus edges touching an active ring; air platforms fly
/// straight or detour around rings treated as hard no-fly disks. Throws
/// std::invalid_argument for positions that reference unknown nodes/edges.
std::optional<Route> plan_route(const WorldMap& map, const PlatformSpec& platform, const MapPosition& from,
                                const MapPosition& to, std::span<const ThreatRing> rings, Minutes now);

/// True when the not-yet-travelled remainder of `route` meets an active ring.
bool remaining_route_blocked(const WorldMap& map, const Route& route, Km traveled,
                             std::span<const ThreatRing> rings, PlatformClass cls, Minutes now);

struct AdvanceResult {
  Km traveled = 0.0;
  MapPosition position;
  bool arrived = false;
  bool halted = false;  // a ring now blocks the remaining route; re-plan requested
};

/// Moves `dt` minutes along the route at `speed_kmh`, halting in place when
/// a ring active at `now` blocks the remainder.
AdvanceResult advance_platform(const WorldMap& map, const Route& route, Km traveled, double speed_kmh, Minutes dt,
                               std::span<const ThreatRing> rings, PlatformClass cls, Minutes now);

/// Scripted adversary: rings appear after exponential gaps, centred inside
/// the configured corridors.
class ThreatSpawner {
 public:
  ThreatSpawner() = default;
  ThreatSpawner(const AdversaryParams& params, std::uint64_t seed);

  /// All rings whose appearance time falls in [.., until). Empty when disabled.
  std::vector<ThreatRing> spawn_until(const AdversaryParams& params, Minutes until);
  Minutes next_time() const { return next_time_; }

  Json to_json() const;
  void restore(const Json& j);

 private:
  RngStream rng_;
  Minutes next_time_ = 0.0;
  long counter_ = 0;
};

ThreatRing draw_ring(const AdversaryParams& params, RngStream& rng, Minutes at, std::string id);

/// True when p lies within half_width of some corridor centre line.
bool inside_corridors(const AdversaryParams& params, Vec2 p, double tolerance = 1e-9);

}  // namespace medevac
