#include "medevac/engine.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

#include "medevac/checker.h"
#include "medevac/projection.h"

namespace medevac {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::array<std::string_view, 7> kInjectNames{"ccp_set_active", "mascal",       "comm_blackout", "grant_casevac",
                                                       "deny_casevac",   "spawn_ring",   "despawn_ring"};
constexpr std::array<std::string_view, 4> kDayPhaseNames{"day", "dusk", "night", "dawn"};

Json waypoints(const Route& r) {
  Json pts = Json::array();
  pts.push_back({r.origin.pos.x, r.origin.pos.y});
  for (const auto& leg : r.legs) pts.push_back({leg.to.x, leg.to.y});
  return pts;
}

Json pos_json(const MapPosition& p) { return Json::array({p.pos.x, p.pos.y}); }

Json ids_json(const std::vector<PatientId>& ids) { return Json(ids); }

Minutes load_time(const RulesConfig& rules, PatientKind k) {
  return k == PatientKind::Litter ? rules.load_litter : rules.load_ambulatory;
}

Minutes dwell_for(const RulesConfig& rules, int level) {
  return level == 1 ? rules.dwell_role1 : rules.dwell_role2;
}

double fmod_pos(double a, double m) {
  double r = std::fmod(a, m);
  return r < 0 ? r + m : r;
}

}  // namespace

std::string_view to_string(InjectKind k) { return kInjectNames[static_cast<std::size_t>(k)]; }

std::optional<InjectKind> parse_inject_kind(std::string_view s) {
  for (std::size_t i = 0; i < kInjectNames.size(); ++i) {
    if (kInjectNames[i] == s) return static_cast<InjectKind>(i);
  }
  return std::nullopt;
}

Json to_json(const Inject& i) {
  Json j{{"kind", std::string(to_string(i.kind))}};
  switch (i.kind) {
    case InjectKind::CcpSetActive:
      j["ccp"] = i.ccp;
      j["active"] = i.active;
      break;
    case InjectKind::Mascal:
      j["ccp"] = i.ccp;
      j["count"] = i.count;
      break;
    case InjectKind::CommBlackout:
      j["window"] = {i.window.start, i.window.end};
      break;
    case InjectKind::GrantCasevac:
    case InjectKind::DenyCasevac:
      j["request"] = i.request;
      break;
    case InjectKind::SpawnRing:
      j["ring"] = i.ring ? to_json(*i.ring) : Json(nullptr);
      break;
    case InjectKind::DespawnRing:
      j["ring_id"] = i.ring_id;
      break;
  }
  return j;
}

Inject inject_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("inject must be an object");
  Inject i;
  try {
    const auto kind = parse_inject_kind(j.at("kind").get<std::string>());
    if (!kind) throw std::invalid_argument("unknown inject kind '" + j.at("kind").get<std::string>() + "'");
    i.kind = *kind;
    i.ccp = j.value("ccp", std::string{});
    i.active = j.value("active", true);
    i.count = j.value("count", 0L);
    if (j.contains("window")) i.window = {j.at("window").at(0).get<double>(), j.at("window").at(1).get<double>()};
    i.request = j.value("request", std::string{});
    if (j.contains("ring") && !j.at("ring").is_null()) i.ring = ring_from_json(j.at("ring"));
    i.ring_id = j.value("ring_id", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed inject: ") + e.what());
  } catch (const ScenarioError& e) {
    throw std::invalid_argument(std::string("malformed inject ring: ") + e.what());
  }
  return i;
}

std::string_view to_string(DayPhase p) { return kDayPhaseNames[static_cast<std::size_t>(p)]; }

DayNightState day_night_phase(const DayNightConfig& cfg, Minutes t) {
  const double tod = fmod_pos(cfg.start_time_of_day + t, cfg.cycle);
  const double since_dawn = fmod_pos(tod - cfg.dawn, cfg.cycle);
  const double since_dusk = fmod_pos(tod - cfg.dusk, cfg.cycle);
  const double nv = cfg.night_visibility;
  if (since_dawn < cfg.transition) return {DayPhase::Dawn, nv + (1.0 - nv) * since_dawn / cfg.transition};
  if (since_dawn < cfg.dusk - cfg.dawn) return {DayPhase::Day, 1.0};
  if (since_dusk < cfg.transition) return {DayPhase::Dusk, 1.0 - (1.0 - nv) * since_dusk / cfg.transition};
  return {DayPhase::Night, nv};
}

Minutes next_phase_boundary(const DayNightConfig& cfg, Minutes t) {
  Minutes best = kInf;
  for (double b : {cfg.dawn, cfg.dawn + cfg.transition, cfg.dusk, cfg.dusk + cfg.transition}) {
    // Absolute times of this boundary are k*cycle + b - start_time_of_day.
    const double k = std::floor((t + cfg.start_time_of_day - b) / cfg.cycle) + 1.0;
    double at = k * cfg.cycle + b - cfg.start_time_of_day;
    // t + start_time_of_day can round up onto the boundary itself.
    if (at - cfg.cycle > t) at -= cfg.cycle;
    if (at <= t) at += cfg.cycle;
    best = std::min(best, at);
  }
  return best;
}

// ---------------------------------------------------------------------------

Engine::Engine(std::shared_ptr<const Scenario> scenario, EngineOptions opts) : opts_(opts) {
  if (!scenario) throw std::invalid_argument("engine needs a scenario");
  const Scenario& sc = *scenario;
  world_.scenario = scenario;
  world_.tick_seconds = opts.tick_seconds.value_or(sc.tick_seconds);
  if (world_.tick_seconds <= 0 || 60 % world_.tick_seconds != 0) {
    throw std::invalid_argument("tick_seconds must divide 60");
  }
  seed_ = opts.seed.value_or(sc.rng_seed);
  scoring_ = opts.scoring.value_or(sc.scoring);
  mortality_ = MortalityParams::from_config(sc.mortality);

  for (const auto& f : sc.facilities) {
    FacilityState fs;
    fs.id = f.id;
    fs.role = f.role;
    fs.active = f.active;
    fs.position = MapPosition::at_node(sc.map, *sc.map.node_index(f.node));
    world_.facilities.push_back(std::move(fs));
  }
  for (const auto& inst : sc.platforms) {
    PlatformState p;
    p.id = inst.id;
    p.spec = *sc.spec_index(inst.spec);
    p.owner = inst.owner;
    p.site = inst.start;
    p.position = world_.find_facility(inst.start)->position;
    const Facility& start = *sc.find_facility(inst.start);
    if (pad_applies(start, sc.platform_specs[p.spec])) {
      if (!pad_arrive(world_.find_facility(inst.start)->pad, start.pad_slots, p.id, 0.0).granted) {
        p.phase = PlatformPhase::Queued;
      }
    }
    world_.platforms.push_back(std::move(p));
  }
  for (std::size_t i = 0; i < sc.ccp_streams.size(); ++i) {
    const auto& stream = sc.ccp_streams[i];
    CcpState c;
    c.ccp = stream.ccp;
    c.stream = i;
    c.rng = CasualtyRng(seed_, stream.ccp, "ccp");
    c.mascal_rng = CasualtyRng(seed_, stream.ccp, "mascal");
    world_.ccps.push_back(std::move(c));
  }
  for (auto& c : world_.ccps) {
    c.active = ccp_active_at(c, 0.0);
    if (c.active) refresh_ccp_schedule(c, 0.0);
  }
  for (const auto& r : sc.scheduled_rings) world_.rings.push_back({r, false, false});
  world_.spawner = ThreatSpawner(sc.adversary, seed_);

  Json platforms = Json::array();
  for (const auto& p : world_.platforms) {
    platforms.push_back({{"id", p.id},
                         {"owner", p.owner},
                         {"spec", sc.platform_specs[p.spec].id},
                         {"site", p.site},
                         {"phase", std::string(to_string(p.phase))},
                         {"position", pos_json(p.position)}});
  }
  Json ccps = Json::object();
  for (const auto& c : world_.ccps) ccps[c.ccp] = c.active;
  Json facilities = Json::array();
  for (const auto& f : world_.facilities) {
    facilities.push_back({{"id", f.id}, {"role", std::string(to_string(f.role))}, {"position", pos_json(f.position)}});
  }
  const auto dn = day_night();
  emit(0.0, ev::RunStarted, "engine",
       {{"schema", kEventSchema},
        {"engine_version", kEngineVersion},
        {"scenario", sc.name},
        {"fingerprint", std::to_string(scenario_fingerprint(sc))},
        {"seed", std::to_string(seed_)},
        {"tick_seconds", world_.tick_seconds},
        {"duration", sc.duration},
        {"scoring", {{"mode", std::string(to_string(scoring_.kind))}, {"clamp_floor", scoring_.clamp_floor}}},
        {"precedence",
         {{"urgent", {{"p_max", sc.precedence.urgent.p_max}, {"e_s", sc.precedence.urgent.e_s}}},
          {"priority", {{"p_max", sc.precedence.priority.p_max}, {"e_s", sc.precedence.priority.e_s}}}}},
        {"day_phase", std::string(to_string(dn.phase))},
        {"platforms", platforms},
        {"facilities", facilities},
        {"ccps", ccps}});
}

long Engine::end_tick() const {
  return static_cast<long>(std::ceil(scenario().duration * 60.0 / world_.tick_seconds - 1e-9));
}

bool Engine::at_end() const { return world_.tick >= end_tick(); }

Json Engine::manifest() const {
  return {{"engine_version", kEngineVersion},
          {"seed", std::to_string(seed_)},
          {"tick", world_.tick},
          {"tick_seconds", world_.tick_seconds},
          {"scoring", {{"mode", std::string(to_string(scoring_.kind))}, {"clamp_floor", scoring_.clamp_floor}}},
          {"scenario", scenario().name},
          {"fingerprint", std::to_string(scenario_fingerprint(scenario()))}};
}

void Engine::emit(Minutes t, std::string_view kind, std::string actor, Json data) {
  SimEvent e;
  e.seq = static_cast<long>(events_.size());
  e.tick = world_.tick;
  e.time = t;
  e.kind = std::string(kind);
  e.actor = std::move(actor);
  e.data = std::move(data);
  events_.push_back(std::move(e));
}

Intake Engine::record_input(InputRecord::Kind kind, const std::string& issuer, Json payload) {
  InputRecord r;
  r.seq = next_input_seq_++;
  r.tick = world_.tick;
  r.kind = kind;
  r.issuer = issuer;
  r.payload = std::move(payload);
  inputs_.push_back(r);
  return {true, r.seq, {}};
}

Intake Engine::enqueue_action(const ActionRequest& a) {
  if (ended_) return {false, -1, "run ended"};
  Intake in = record_input(InputRecord::Kind::Action, a.actor, to_json(a));
  const Verdict v = check_action(world_, a);
  if (!v) {
    emit(world_.now(), ev::ActionRejected, a.actor,
         {{"input", in.seq}, {"action", to_json(a)}, {"reason", v.reason}, {"stage", "intake"}});
    return {false, in.seq, v.reason};
  }
  queue_.push_back({in.seq, a.actor, a, std::nullopt});
  return in;
}

Verdict Engine::check_inject(const Inject& i, const std::string& issuer) const {
  const RoleAssignment* role = scenario().find_role(issuer);
  if (!role || !role->permissions.can_inject) return Verdict::reject("permission");
  switch (i.kind) {
    case InjectKind::CcpSetActive:
      if (!world_.find_ccp(i.ccp)) return Verdict::reject("unknown ccp " + i.ccp);
      break;
    case InjectKind::Mascal: {
      const CcpState* c = world_.find_ccp(i.ccp);
      if (!c) return Verdict::reject("unknown ccp " + i.ccp);
      if (i.count < 1) return Verdict::reject("mascal size must be at least 1");
      if (!c->active) return Verdict::reject("ccp " + i.ccp + " is inactive");
      break;
    }
    case InjectKind::CommBlackout:
      if (!(i.window.end > i.window.start)) return Verdict::reject("blackout window must have end > start");
      break;
    case InjectKind::GrantCasevac:
    case InjectKind::DenyCasevac: {
      auto it = std::find_if(world_.casevac_requests.begin(), world_.casevac_requests.end(),
                             [&](const CasevacRequest& r) { return r.id == i.request; });
      if (it == world_.casevac_requests.end()) return Verdict::reject("unknown casevac request " + i.request);
      if (it->status != CasevacRequest::Status::Pending) return Verdict::reject("request " + i.request + " already decided");
      if (i.kind == InjectKind::GrantCasevac && !scenario().find_spec(scenario().casevac.spec)) {
        return Verdict::reject("casevac unavailable in this scenario");
      }
      break;
    }
    case InjectKind::SpawnRing: {
      if (!i.ring) return Verdict::reject("ring missing");
      if (!(i.ring->radius > 0)) return Verdict::reject("ring radius must be > 0");
      if (!(i.ring->window.end > i.ring->window.start)) return Verdict::reject("ring window must have end > start");
      if (i.ring->window.end <= world_.now()) return Verdict::reject("ring window already over");
      if (!i.ring->id.empty()) {
        for (const auto& r : world_.rings) {
          if (r.ring.id == i.ring->id) return Verdict::reject("duplicate ring id " + i.ring->id);
        }
      }
      break;
    }
    case InjectKind::DespawnRing: {
      auto it = std::find_if(world_.rings.begin(), world_.rings.end(),
                             [&](const RingRecord& r) { return r.ring.id == i.ring_id; });
      if (it == world_.rings.end() || it->expired) return Verdict::reject("no live ring " + i.ring_id);
      break;
    }
  }
  return Verdict::ok();
}

Intake Engine::enqueue_inject(const Inject& i, const std::string& issuer) {
  if (ended_) return {false, -1, "run ended"};
  Intake in = record_input(InputRecord::Kind::Inject, issuer, to_json(i));
  const Verdict v = check_inject(i, issuer);
  if (!v) {
    emit(world_.now(), ev::InjectRejected, issuer,
         {{"input", in.seq}, {"inject", to_json(i)}, {"reason", v.reason}, {"stage", "intake"}});
    return {false, in.seq, v.reason};
  }
  queue_.push_back({in.seq, issuer, std::nullopt, i});
  return in;
}

void Engine::step(long ticks) {
  for (long i = 0; i < ticks; ++i) {
    if (paused_ || ended_) return;
    step_one();
  }
}

void Engine::run_to_end() {
  while (!ended_ && !paused_ && !at_end()) step_one();
  if (!paused_) finish();
}

void Engine::finish() {
  if (ended_) return;
  int alive = 0;
  int dead = 0;
  int delivered = 0;
  for (const auto& p : world_.patients) {
    if (p.dead()) ++dead;
    else if (p.location == PatientLocation::Delivered) ++delivered;
    else ++alive;
  }
  emit(world_.now(), ev::RunEnded, "engine",
       {{"tick", world_.tick},
        {"spawned", world_.patients.size()},
        {"dead", dead},
        {"delivered", delivered},
        {"in_network", alive}});
  ended_ = true;
}

void Engine::step_one() {
  const Minutes ts = world_.now();
  const Minutes te = world_.time_at_tick(world_.tick + 1);

  phase_day_night(ts, te);

  std::vector<Queued> queue;
  queue.swap(queue_);
  for (const auto& q : queue) {
    if (q.inject) apply_inject(q, ts);
  }
  for (const auto& q : queue) {
    if (q.action) apply_action(q, ts);
  }
  // Expired casevac platforms whose holds or manifests cleared at this boundary.
  for (auto& p : world_.platforms) {
    if (p.casevac && p.active() && p.casevac_expiry && *p.casevac_expiry <= ts) try_despawn(p, ts);
  }

  phase_rings(ts, te);
  phase_waves(ts, te);
  phase_movement(ts, te);
  phase_resolution(ts, te);
  phase_mortality(te);

  ++world_.tick;

  if (opts_.checker && events_.size() > checked_events_) run_checks();
  checked_events_ = events_.size();
  if (opts_.fold_check_every > 0 && world_.tick % opts_.fold_check_every == 0) {
    const Json folded = fold_events(events_);
    const Json live = live_projection(world_);
    if (folded != live) {
      breaches_.push_back("tick " + std::to_string(world_.tick) + ": event fold diverged from live state");
    }
  }
}

void Engine::run_checks() {
  for (auto& b : check_invariants(world_)) {
    breaches_.push_back("tick " + std::to_string(world_.tick) + ": " + b);
  }
  terminal_seen_.resize(world_.patients.size(), 0);
  for (std::size_t i = 0; i < world_.patients.size(); ++i) {
    const auto& p = world_.patients[i];
    const std::uint8_t now = p.dead() ? 1 : p.location == PatientLocation::Delivered ? 2 : 0;
    if (terminal_seen_[i] != 0 && now != terminal_seen_[i]) {
      breaches_.push_back("tick " + std::to_string(world_.tick) + ": patient " + std::to_string(p.id) +
                          " left a terminal state");
    }
    terminal_seen_[i] = now;
  }
}

// ---------------------------------------------------------------------------
// Phases

void Engine::phase_day_night(Minutes ts, Minutes te) {
  const auto& cfg = scenario().day_night;
  Minutes t = ts;
  // A boundary exactly at ts belongs to this tick.
  Minutes b = next_phase_boundary(cfg, std::nextafter(ts, -kInf));
  while (b < te) {
    const auto dn = day_night_phase(cfg, b);
    emit(b, ev::DayPhaseChanged, "engine", {{"phase", std::string(to_string(dn.phase))}, {"visibility", dn.visibility}});
    t = b;
    b = next_phase_boundary(cfg, t);
  }
}

void Engine::phase_rings(Minutes ts, Minutes te) {
  for (auto& r : world_.spawner.spawn_until(scenario().adversary, te)) world_.rings.push_back({std::move(r), false, false});
  std::vector<std::size_t> spawn;
  std::vector<std::size_t> expire;
  for (std::size_t i = 0; i < world_.rings.size(); ++i) {
    auto& r = world_.rings[i];
    if (!r.announced && r.ring.window.start < te) spawn.push_back(i);
  }
  auto by_start = [&](std::size_t a, std::size_t b) {
    const auto& ra = world_.rings[a].ring;
    const auto& rb = world_.rings[b].ring;
    return std::tie(ra.window.start, ra.id) < std::tie(rb.window.start, rb.id);
  };
  std::sort(spawn.begin(), spawn.end(), by_start);
  for (std::size_t i : spawn) {
    auto& r = world_.rings[i];
    r.announced = true;
    if (r.ring.window.start < ts) r.ring.window.start = ts;
    emit(r.ring.window.start, ev::RingSpawned, "adversary", to_json(r.ring));
  }
  for (std::size_t i = 0; i < world_.rings.size(); ++i) {
    auto& r = world_.rings[i];
    if (r.announced && !r.expired && r.ring.window.end < te) expire.push_back(i);
  }
  std::sort(expire.begin(), expire.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = world_.rings[a].ring;
    const auto& rb = world_.rings[b].ring;
    return std::tie(ra.window.end, ra.id) < std::tie(rb.window.end, rb.id);
  });
  for (std::size_t i : expire) {
    auto& r = world_.rings[i];
    r.expired = true;
    emit(r.ring.window.end, ev::RingExpired, "adversary", {{"id", r.ring.id}});
  }
}

bool Engine::ccp_active_at(const CcpState& c, Minutes t) const {
  if (c.override_active) return *c.override_active;
  const Facility* f = scenario().find_facility(c.ccp);
  return f && f->active && stream_active_at(scenario().ccp_streams[c.stream], t);
}

void Engine::refresh_ccp_schedule(CcpState& c, Minutes t) {
  const auto& stream = scenario().ccp_streams[c.stream];
  const Minutes gap = draw_wave_gap(stream, c.rng.waves);
  c.pending = draw_wave(stream, mortality_, c.rng, t + gap);
}

void Engine::phase_waves(Minutes ts, Minutes te) {
  struct Spawn {
    Minutes time;
    std::size_t ccp;
    Wave wave;
  };
  std::vector<Spawn> spawns;
  for (std::size_t ci = 0; ci < world_.ccps.size(); ++ci) {
    CcpState& c = world_.ccps[ci];
    const auto& stream = scenario().ccp_streams[c.stream];
    const Facility* fac = scenario().find_facility(c.ccp);
    std::vector<std::pair<Minutes, bool>> bounds;
    if (!c.override_active && fac && fac->active) {
      for (const auto& w : stream.activation_windows) {
        if (w.start >= ts && w.start < te) bounds.emplace_back(w.start, true);
        if (w.end >= ts && w.end < te) bounds.emplace_back(w.end, false);
      }
      std::sort(bounds.begin(), bounds.end());
    }
    std::size_t bi = 0;
    while (true) {
      const Minutes wt = c.pending ? c.pending->time : kInf;
      const Minutes bt = bi < bounds.size() ? bounds[bi].first : kInf;
      if (std::min(wt, bt) >= te) break;
      if (bt <= wt) {
        const bool active = bounds[bi].second;
        ++bi;
        if (active == c.active) continue;
        c.active = active;
        if (active) refresh_ccp_schedule(c, bt);
        else c.pending.reset();
        emit(bt, ev::CcpStateChanged, "engine", {{"ccp", c.ccp}, {"active", active}, {"cause", "schedule"}});
      } else {
        Wave w = std::move(*c.pending);
        c.pending.reset();
        refresh_ccp_schedule(c, w.time);
        spawns.push_back({w.time, ci, std::move(w)});
      }
    }
  }
  std::stable_sort(spawns.begin(), spawns.end(),
                   [](const Spawn& a, const Spawn& b) { return std::tie(a.time, a.ccp) < std::tie(b.time, b.ccp); });
  for (auto& s : spawns) spawn_patients(world_.ccps[s.ccp].ccp, s.wave.patients, s.time, s.wave.raw_size, "engine");
}

void Engine::spawn_patients(const std::string& ccp, const std::vector<PatientDraft>& drafts, Minutes t,
                            std::optional<long> raw_size, const std::string& actor) {
  const bool mascal = !raw_size;
  EvacRequest req;
  req.id = world_.next_request_id++;
  req.ccp = ccp;
  req.at = t;
  const PatientId first = static_cast<PatientId>(world_.patients.size() + 1);
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    const auto& d = drafts[i];
    req.patients.push_back(first + static_cast<PatientId>(i));
    (d.precedence == Precedence::Urgent ? req.urgent : req.priority) += 1;
    (d.kind == PatientKind::Litter ? req.litter : req.ambulatory) += 1;
  }
  emit(t, ev::WaveSpawned, actor,
       {{"ccp", ccp},
        {"request", req.id},
        {"size", drafts.size()},
        {"raw_size", raw_size ? Json(*raw_size) : Json(nullptr)},
        {"mascal", mascal},
        {"patients", req.patients},
        {"urgent", req.urgent},
        {"priority", req.priority},
        {"litter", req.litter},
        {"ambulatory", req.ambulatory}});
  for (const auto& d : drafts) {
    Patient p;
    p.id = static_cast<PatientId>(world_.patients.size() + 1);
    p.precedence = d.precedence;
    p.kind = d.kind;
    p.origin_ccp = ccp;
    p.t0 = t;
    p.death = d.death;
    p.location = PatientLocation::AtCCP;
    p.where = ccp;
    p.waiting_since = t;
    Json death = p.death ? Json{{"t_death1", p.death->t_death1}, {"t_death2", p.death->t_death2}} : Json(nullptr);
    emit(t, ev::PatientSpawned, actor,
         {{"patient", p.id},
          {"ccp", ccp},
          {"precedence", std::string(to_string(p.precedence))},
          {"kind", std::string(to_string(p.kind))},
          {"t0", t},
          {"death", death},
          {"mascal", mascal}});
    world_.patients.push_back(std::move(p));
  }
  world_.evac_requests.push_back(std::move(req));
}

MapPosition Engine::mover_position(const Route& r, Minutes depart, double speed, Minutes t) const {
  return r.position_at(scenario().map, speed * (t - depart) / 60.0);
}

MapPosition Engine::facility_position_at(const FacilityState& f, Minutes t) const {
  if (!f.route) return f.position;
  const Facility* cfg = scenario().find_facility(f.id);
  return mover_position(*f.route, f.depart_time, cfg->speed_kmh, t);
}

Minutes Engine::platform_speed(const PlatformState& p, Minutes t) const {
  const PlatformSpec& spec = world_.spec_of(p);
  double v = spec.cruise_speed_kmh;
  if (is_air(spec.cls) && day_night_phase(scenario().day_night, t).phase == DayPhase::Night) {
    v *= scenario().day_night.night_air_speed_factor;
  }
  return v;
}

void Engine::phase_movement(Minutes ts, Minutes te) {
  struct Happening {
    Minutes time;
    int order;  // 0 facility halt, 1 facility arrival, 2 platform halt, 3 platform arrival
    std::size_t index;
    std::string ring;
  };
  auto first_block = [&](const Route& route, Minutes depart, double speed, PlatformClass cls,
                         Minutes arrival) -> std::optional<std::pair<Minutes, std::string>> {
    std::vector<const ThreatRing*> fresh;
    for (const auto& r : world_.rings) {
      const auto& ring = r.ring;
      if (!r.announced || r.expired) continue;
      if (ring.window.start < std::max(ts, depart) || ring.window.start >= te) continue;
      if (!ring.affects_class(cls)) continue;
      fresh.push_back(&ring);
    }
    std::sort(fresh.begin(), fresh.end(), [](const ThreatRing* a, const ThreatRing* b) {
      return std::tie(a->window.start, a->id) < std::tie(b->window.start, b->id);
    });
    for (const ThreatRing* ring : fresh) {
      const Minutes rt = ring->window.start;
      if (arrival <= rt) continue;
      const Km traveled = speed * (rt - depart) / 60.0;
      const std::array<ThreatRing, 1> one{*ring};
      if (remaining_route_blocked(scenario().map, route, traveled, one, cls, rt)) return std::make_pair(rt, ring->id);
    }
    return std::nullopt;
  };
  auto arrival_time = [](const Route& r, Minutes depart, double speed) {
    if (r.total_distance <= 0.0) return depart;
    return depart + r.total_distance / speed * 60.0;
  };

  for (int iteration = 0; iteration < 8; ++iteration) {
    std::vector<Happening> hs;
    for (std::size_t i = 0; i < world_.facilities.size(); ++i) {
      const auto& f = world_.facilities[i];
      if (!f.route) continue;
      const double speed = scenario().facilities[i].speed_kmh;
      const Minutes ta = arrival_time(*f.route, f.depart_time, speed);
      if (auto block = first_block(*f.route, f.depart_time, speed, PlatformClass::Ship, ta)) {
        hs.push_back({block->first, 0, i, block->second});
      } else if (ta < te) {
        hs.push_back({ta, 1, i, {}});
      }
    }
    for (std::size_t i = 0; i < world_.platforms.size(); ++i) {
      const auto& p = world_.platforms[i];
      if (p.phase != PlatformPhase::EnRoute || !p.route) continue;
      const Minutes ta = arrival_time(*p.route, p.depart_time, p.speed_kmh);
      if (auto block = first_block(*p.route, p.depart_time, p.speed_kmh, world_.spec_of(p).cls, ta)) {
        hs.push_back({block->first, 2, i, block->second});
      } else if (ta < te) {
        hs.push_back({ta, 3, i, {}});
      }
    }
    if (hs.empty()) break;
    std::sort(hs.begin(), hs.end(), [](const Happening& a, const Happening& b) {
      return std::tie(a.time, a.order, a.index) < std::tie(b.time, b.order, b.index);
    });
    for (const auto& h : hs) {
      if (h.order <= 1) {
        auto& f = world_.facilities[h.index];
        if (h.order == 0) {
          f.position = facility_position_at(f, h.time);
          f.route.reset();
          emit(h.time, ev::Halted, "engine",
               {{"facility", f.id}, {"position", pos_json(f.position)}, {"ring", h.ring}, {"replan_requested", true}});
        } else {
          f.position = f.route->destination;
          f.route.reset();
          emit(h.time, ev::FacilityArrived, "engine", {{"facility", f.id}, {"position", pos_json(f.position)}});
        }
        continue;
      }
      auto& p = world_.platforms[h.index];
      if (h.order == 2) {
        p.position = mover_position(*p.route, p.depart_time, p.speed_kmh, h.time);
        p.route.reset();
        p.phase = PlatformPhase::Stationary;
        p.site.clear();
        p.halted = true;
        emit(h.time, ev::Halted, p.owner,
             {{"platform", p.id}, {"position", pos_json(p.position)}, {"ring", h.ring}, {"replan_requested", true}});
      } else {
        arrive(p, h.time, iteration);
      }
    }
  }

  for (auto& f : world_.facilities) {
    if (f.route) f.position = facility_position_at(f, te);
  }
  for (auto& p : world_.platforms) {
    if (p.phase == PlatformPhase::EnRoute && p.route) p.position = mover_position(*p.route, p.depart_time, p.speed_kmh, te);
  }
}

void Engine::arrive(PlatformState& p, Minutes t, int depth) {
  const Facility* fac = scenario().find_facility(p.destination);
  FacilityState* fs = world_.find_facility(p.destination);
  if (fac && fs && fs->route && depth < 6) {
    // The destination is a ship under way: chase its current position.
    const MapPosition target = facility_position_at(*fs, t);
    if (distance(target.pos, p.route->destination.pos) > 1e-6) {
      std::optional<Route> chase;
      try {
        const auto rings = world_.active_rings(t);
        chase = plan_route(scenario().map, world_.spec_of(p), p.route->destination, target, rings, t);
      } catch (const std::invalid_argument&) {
        chase.reset();
      }
      if (chase) {
        p.route = std::move(chase);
        p.depart_time = t;
        p.position = p.route->origin;
        emit(t, ev::Departed, p.owner,
             {{"platform", p.id},
              {"from", ""},
              {"destination", p.destination},
              {"mode", std::string(to_string(p.route->mode))},
              {"distance", p.route->total_distance},
              {"speed", p.speed_kmh},
              {"waypoints", waypoints(*p.route)},
              {"retarget", true}});
        return;
      }
    }
  }
  p.phase = PlatformPhase::Stationary;
  p.halted = false;
  if (fac && fs) {
    p.site = fac->id;
    p.position = facility_position_at(*fs, t);
  } else {
    p.site.clear();
    p.position = p.route->destination;
  }
  p.route.reset();
  emit(t, ev::Arrived, p.owner, {{"platform", p.id}, {"site", p.site}, {"destination", p.destination},
                                  {"position", pos_json(p.position)}});
  if (fac && fs && pad_applies(*fac, world_.spec_of(p))) {
    const PadArrival a = pad_arrive(fs->pad, fac->pad_slots, p.id, t);
    if (a.granted) {
      emit(t, ev::PadGranted, "engine", {{"platform", p.id}, {"site", fac->id}, {"waited", 0.0}});
    } else {
      p.phase = PlatformPhase::Queued;
      emit(t, ev::PadQueued, "engine", {{"platform", p.id}, {"site", fac->id}, {"position", a.position}});
    }
  }
  remove_dead(p, t);
  try_despawn(p, t);
}

void Engine::phase_resolution(Minutes ts, Minutes te) {
  (void)ts;
  struct Happening {
    Minutes time;
    int order;  // 0 unload completion, 1 dwell completion, 2 casevac expiry
    std::size_t index;
  };
  std::vector<Happening> hs;
  for (std::size_t i = 0; i < world_.platforms.size(); ++i) {
    const auto& p = world_.platforms[i];
    if (p.unloading && p.unloading->completes_at < te) hs.push_back({p.unloading->completes_at, 0, i});
    if (p.casevac && p.active() && p.casevac_expiry && *p.casevac_expiry >= ts && *p.casevac_expiry < te) {
      hs.push_back({*p.casevac_expiry, 2, i});
    }
  }
  for (std::size_t i = 0; i < world_.patients.size(); ++i) {
    const auto& p = world_.patients[i];
    if (p.location == PatientLocation::AtFacility && !p.treated_at_current_facility && p.ready_at && *p.ready_at < te) {
      hs.push_back({*p.ready_at, 1, i});
    }
  }
  std::sort(hs.begin(), hs.end(), [](const Happening& a, const Happening& b) {
    return std::tie(a.time, a.order, a.index) < std::tie(b.time, b.order, b.index);
  });
  const auto& rules = scenario().rules;
  for (const auto& h : hs) {
    if (h.order == 1) {
      Patient& pt = world_.patients[h.index];
      if (settle(pt, h.time)) continue;
      pt.treated_at_current_facility = true;
      pt.waiting_since = h.time;
      emit(h.time, ev::Treated, "engine", {{"patient", pt.id}, {"site", pt.where}});
      continue;
    }
    PlatformState& p = world_.platforms[h.index];
    if (h.order == 2) {
      try_despawn(p, h.time);
      continue;
    }
    const PendingUnload u = *p.unloading;
    p.unloading.reset();
    const Facility& fac = *scenario().find_facility(u.site);
    const int level = care_level(fac.role);
    std::vector<PatientId> moved;
    for (PatientId id : u.patients) {
      Patient& pt = *world_.find_patient(id);
      if (settle(pt, h.time) || pt.dead()) continue;
      std::erase(p.manifest, id);
      moved.push_back(id);
      pt.where = u.site;
      pt.treated_at_current_facility = false;
      pt.waiting_since.reset();
      pt.ready_at.reset();
      if (is_exchange_point(fac.role)) {
        pt.location = PatientLocation::AtExchangePoint;
        pt.attending_platform = p.id;
        continue;
      }
      if (level == 1) pt.t1 = h.time;
      if (level == 2) pt.t2 = h.time;
      if (level == 3) {
        pt.t3 = h.time;
        pt.location = PatientLocation::Delivered;
      } else {
        pt.location = PatientLocation::AtFacility;
        pt.ready_at = h.time + dwell_for(rules, level);
      }
    }
    emit(h.time, ev::Unloaded, p.owner,
         {{"platform", p.id}, {"site", u.site}, {"role", std::string(to_string(fac.role))}, {"patients", ids_json(moved)}});
    if (level == 3) {
      for (PatientId id : moved) emit(h.time, ev::DeliveredRole3, "engine", {{"patient", id}, {"site", u.site}});
    }
    remove_dead(p, h.time);
    try_despawn(p, h.time);
  }
}

void Engine::phase_mortality(Minutes te) {
  std::vector<std::pair<Minutes, std::size_t>> deaths;
  for (std::size_t i = 0; i < world_.patients.size(); ++i) {
    const Patient& p = world_.patients[i];
    if (!p.death || p.dead() || p.t2) continue;
    const auto out = check_mortality(p, te);
    if (out.died()) deaths.emplace_back(out.at, i);
  }
  std::sort(deaths.begin(), deaths.end());
  for (const auto& [at, i] : deaths) kill(world_.patients[i], at);
}

bool Engine::settle(Patient& p, Minutes t) {
  if (!p.death || p.dead() || p.t2) return false;
  const auto out = check_mortality(p, t);
  if (!out.died()) return false;
  kill(p, out.at);
  return true;
}

void Engine::kill(Patient& p, Minutes at) {
  const PatientLocation was = p.location;
  p.location = PatientLocation::Dead;
  p.died_at = at;
  p.waiting_since.reset();
  p.ready_at.reset();
  emit(at, ev::Died, "engine",
       {{"patient", p.id},
        {"location", std::string(to_string(was))},
        {"where", p.where},
        {"precedence", std::string(to_string(p.precedence))},
        {"before_role", p.t1 ? 2 : 1}});
}

void Engine::remove_dead(PlatformState& p, Minutes t) {
  if (p.site.empty()) return;
  std::vector<PatientId> dead;
  for (PatientId id : p.manifest) {
    if (world_.find_patient(id)->dead()) dead.push_back(id);
  }
  if (dead.empty()) return;
  for (PatientId id : dead) std::erase(p.manifest, id);
  emit(t, ev::DeadRemoved, "engine", {{"platform", p.id}, {"site", p.site}, {"patients", ids_json(dead)}});
}

void Engine::release_pad(PlatformState& p, Minutes t) {
  if (p.site.empty()) return;
  const Facility* fac = scenario().find_facility(p.site);
  FacilityState* fs = world_.find_facility(p.site);
  if (!fac || !fs || !pad_applies(*fac, world_.spec_of(p))) return;
  const bool queued = p.phase == PlatformPhase::Queued;
  const auto promoted = pad_depart(fs->pad, fac->pad_slots, p.id, t);
  emit(t, ev::PadReleased, "engine", {{"platform", p.id}, {"site", fac->id}, {"queued", queued}});
  for (const auto& pr : promoted) {
    if (PlatformState* q = world_.find_platform(pr.platform)) q->phase = PlatformPhase::Stationary;
    emit(t, ev::PadGranted, "engine", {{"platform", pr.platform}, {"site", fac->id}, {"waited", pr.waited}});
  }
}

void Engine::try_despawn(PlatformState& p, Minutes t) {
  if (!p.casevac || !p.active() || !p.casevac_expiry || t < *p.casevac_expiry) return;
  if (!p.manifest.empty() || p.unloading || world_.bound_by_hold(p.id)) return;
  release_pad(p, t);
  p.phase = PlatformPhase::Despawned;
  p.site.clear();
  p.route.reset();
  emit(t, ev::PlatformDespawned, "engine", {{"platform", p.id}});
}

// ---------------------------------------------------------------------------
// Inputs

void Engine::apply_inject(const Queued& q, Minutes t) {
  const Inject& i = *q.inject;
  const Verdict v = check_inject(i, q.issuer);
  if (!v) {
    emit(t, ev::InjectRejected, q.issuer, {{"input", q.seq}, {"inject", to_json(i)}, {"reason", v.reason}, {"stage", "apply"}});
    return;
  }
  switch (i.kind) {
    case InjectKind::CcpSetActive: {
      CcpState& c = *world_.find_ccp(i.ccp);
      c.override_active = i.active;
      emit(t, ev::InjectApplied, q.issuer, {{"input", q.seq}, {"inject", to_json(i)}});
      if (c.active != i.active) {
        c.active = i.active;
        if (i.active) refresh_ccp_schedule(c, t);
        else c.pending.reset();
        emit(t, ev::CcpStateChanged, q.issuer, {{"ccp", c.ccp}, {"active", i.active}, {"cause", "inject"}});
      }
      break;
    }
    case InjectKind::Mascal: {
      CcpState& c = *world_.find_ccp(i.ccp);
      auto burst = mascal_burst(scenario().ccp_streams[c.stream], mortality_, c.active, i.count, c.mascal_rng, t);
      if (!burst.verdict) {
        emit(t, ev::InjectRejected, q.issuer,
             {{"input", q.seq}, {"inject", to_json(i)}, {"reason", burst.verdict.reason}, {"stage", "apply"}});
        return;
      }
      emit(t, ev::InjectApplied, q.issuer, {{"input", q.seq}, {"inject", to_json(i)}});
      spawn_patients(c.ccp, burst.patients, t, std::nullopt, q.issuer);
      break;
    }
    case InjectKind::CommBlackout:
      world_.blackouts.push_back(i.window);
      emit(t, ev::InjectApplied, q.issuer, {{"input", q.seq}, {"inject", to_json(i)}});
      break;
    case InjectKind::GrantCasevac: {
      auto& req = *std::find_if(world_.casevac_requests.begin(), world_.casevac_requests.end(),
                                [&](const CasevacRequest& r) { return r.id == i.request; });
      const auto& cfg = scenario().casevac;
      const std::size_t spec = *scenario().spec_index(cfg.spec);
      const PlatformSpec& ps = scenario().platform_specs[spec];
      PlatformState p;
      const std::string prefix = ps.callsign_prefix.empty() ? std::string("CASEVAC") : ps.callsign_prefix;
      do {
        p.id = prefix + "-" + std::to_string(++world_.casevac_counter);
      } while (world_.find_platform(p.id));
      p.spec = spec;
      p.owner = req.role;
      p.site = cfg.staging;
      p.position = world_.find_facility(cfg.staging)->position;
      p.casevac = true;
      p.casevac_expiry = t + cfg.window;
      req.status = CasevacRequest::Status::Granted;
      req.platform = p.id;
      emit(t, ev::InjectApplied, q.issuer, {{"input", q.seq}, {"inject", to_json(i)}});
      emit(t, ev::CasevacGranted, q.issuer,
           {{"request", req.id},
            {"platform", p.id},
            {"spec", ps.id},
            {"owner", p.owner},
            {"staging", cfg.staging},
            {"expires_at", *p.casevac_expiry},
            {"position", pos_json(p.position)}});
      const Facility& staging = *scenario().find_facility(cfg.staging);
      world_.platforms.push_back(std::move(p));
      PlatformState& added = world_.platforms.back();
      if (pad_applies(staging, ps)) {
        const PadArrival a = pad_arrive(world_.find_facility(cfg.staging)->pad, staging.pad_slots, added.id, t);
        if (a.granted) {
          emit(t, ev::PadGranted, "engine", {{"platform", added.id}, {"site", staging.id}, {"waited", 0.0}});
        } else {
          added.phase = PlatformPhase::Queued;
          emit(t, ev::PadQueued, "engine", {{"platform", added.id}, {"site", staging.id}, {"position", a.position}});
        }
      }
      break;
    }
    case InjectKind::DenyCasevac: {
      auto& req = *std::find_if(world_.casevac_requests.begin(), world_.casevac_requests.end(),
                                [&](const CasevacRequest& r) { return r.id == i.request; });
      req.status = CasevacRequest::Status::Denied;
      emit(t, ev::InjectApplied, q.issuer, {{"input", q.seq}, {"inject", to_json(i)}});
      emit(t, ev::CasevacDenied, q.issuer, {{"request", req.id}, {"role", req.role}});
      break;
    }
    case InjectKind::SpawnRing: {
      ThreatRing ring = *i.ring;
      if (ring.id.empty()) ring.id = "I" + std::to_string(world_.rings.size() + 1);
      if (ring.window.start < t) ring.window.start = t;
      world_.rings.push_back({ring, false, false});
      emit(t, ev::InjectApplied, q.issuer, {{"input", q.seq}, {"inject", to_json(i)}});
      break;
    }
    case InjectKind::DespawnRing: {
      auto& r = *std::find_if(world_.rings.begin(), world_.rings.end(),
                              [&](const RingRecord& rr) { return rr.ring.id == i.ring_id; });
      emit(t, ev::InjectApplied, q.issuer, {{"input", q.seq}, {"inject", to_json(i)}});
      if (!r.announced && r.ring.window.start >= t) {
        // Never appeared: retire silently.
        r.announced = true;
        r.expired = true;
      } else {
        r.ring.window.end = t;
      }
      break;
    }
  }
}

void Engine::apply_action(const Queued& q, Minutes t) {
  const ActionRequest& a = *q.action;
  const Verdict v = check_action(world_, a);
  if (!v) {
    emit(t, ev::ActionRejected, a.actor, {{"input", q.seq}, {"action", to_json(a)}, {"reason", v.reason}, {"stage", "apply"}});
    return;
  }
  const auto& rules = scenario().rules;
  if (a.verb == Verb::RequestCasevac) {
    CasevacRequest r;
    r.id = "CR" + std::to_string(++world_.casevac_request_counter);
    r.role = a.actor;
    r.details = a.details;
    r.at = t;
    emit(t, ev::CasevacRequested, a.actor, {{"request", r.id}, {"role", r.role}, {"details", r.details}});
    world_.casevac_requests.push_back(std::move(r));
    return;
  }
  PlatformState* p = world_.find_platform(a.platform);
  if (!p) {
    std::optional<Route> route;
    check_relocate(world_, a.actor, a.platform, a.target, &route);
    apply_relocate(a.actor, a.platform, a.target, std::move(*route), t);
    return;
  }
  switch (a.verb) {
    case Verb::Dispatch: {
      std::optional<Route> route;
      check_dispatch(world_, *p, a.target, &route);
      apply_dispatch(*p, a.actor, a.target, std::move(*route), t);
      break;
    }
    case Verb::Load: {
      Minutes duration = 0.0;
      Json loaded = Json::array();
      const Facility* fac = scenario().find_facility(p->site);
      for (PatientId id : a.patients) {
        Patient& pt = *world_.find_patient(id);
        const bool exchange = pt.location == PatientLocation::AtExchangePoint;
        Json waited = (!exchange && pt.waiting_since) ? Json(t - *pt.waiting_since) : Json(nullptr);
        loaded.push_back({{"patient", id}, {"waited", waited}, {"precedence", std::string(to_string(pt.precedence))}});
        pt.location = PatientLocation::Onboard;
        pt.where = p->id;
        pt.attending_platform.clear();
        pt.treated_at_current_facility = false;
        pt.waiting_since.reset();
        pt.ready_at.reset();
        p->manifest.push_back(id);
        duration += load_time(rules, pt.kind);
      }
      p->busy_until = t + duration;
      emit(t, ev::Loaded, a.actor,
           {{"platform", p->id},
            {"site", p->site},
            {"site_role", fac ? std::string(to_string(fac->role)) : std::string()},
            {"patients", loaded},
            {"until", p->busy_until}});
      break;
    }
    case Verb::Unload: {
      Minutes duration = 0.0;
      for (PatientId id : a.patients) duration += load_time(rules, world_.find_patient(id)->kind);
      p->unloading = PendingUnload{a.patients, p->site, t + duration};
      p->busy_until = t + duration;
      emit(t, ev::UnloadStarted, a.actor,
           {{"platform", p->id}, {"site", p->site}, {"patients", ids_json(a.patients)}, {"completes_at", t + duration}});
      break;
    }
    case Verb::TransferTo: {
      PlatformState& to = *world_.find_platform(a.target);
      for (PatientId id : a.patients) {
        Patient& pt = *world_.find_patient(id);
        std::erase(p->manifest, id);
        pt.location = PatientLocation::Onboard;
        pt.where = to.id;
        pt.attending_platform.clear();
        to.manifest.push_back(id);
      }
      const Minutes until = t + rules.transfer_per_patient * static_cast<double>(a.patients.size());
      p->busy_until = std::max(p->busy_until, until);
      to.busy_until = std::max(to.busy_until, until);
      emit(t, ev::Transferred, a.actor,
           {{"from", p->id}, {"to", to.id}, {"site", p->site}, {"patients", ids_json(a.patients)}, {"until", until}});
      break;
    }
    case Verb::Wait:
    case Verb::RequestCasevac:
      break;
  }
}

void Engine::apply_dispatch(PlatformState& p, const std::string& actor, const std::string& destination, Route route,
                            Minutes t) {
  const std::string from = p.site;
  if (p.phase == PlatformPhase::EnRoute && p.route) {
    p.position = mover_position(*p.route, p.depart_time, p.speed_kmh, t);
  } else {
    p.position = world_.platform_position(p);
  }
  release_pad(p, t);
  p.phase = PlatformPhase::EnRoute;
  p.site.clear();
  p.route = std::move(route);
  p.depart_time = t;
  p.speed_kmh = platform_speed(p, t);
  p.destination = destination;
  p.halted = false;
  emit(t, ev::Departed, actor,
       {{"platform", p.id},
        {"from", from},
        {"destination", destination},
        {"mode", std::string(to_string(p.route->mode))},
        {"distance", p.route->total_distance},
        {"speed", p.speed_kmh},
        {"waypoints", waypoints(*p.route)},
        {"retarget", false}});
}

void Engine::apply_relocate(const std::string& actor, const std::string& facility, const std::string& node, Route route,
                            Minutes t) {
  FacilityState& f = *world_.find_facility(facility);
  f.route = std::move(route);
  f.depart_time = t;
  emit(t, ev::FacilityDeparted, actor,
       {{"facility", f.id},
        {"destination", node},
        {"distance", f.route->total_distance},
        {"speed", scenario().find_facility(facility)->speed_kmh},
        {"waypoints", waypoints(*f.route)}});
}

// ---------------------------------------------------------------------------
// Checkpoint and replay

Json Engine::checkpoint() const {
  Json queue = Json::array();
  for (const auto& q : queue_) {
    queue.push_back({{"seq", q.seq},
                     {"issuer", q.issuer},
                     {"action", q.action ? to_json(*q.action) : Json(nullptr)},
                     {"inject", q.inject ? to_json(*q.inject) : Json(nullptr)}});
  }
  Json events = Json::array();
  for (const auto& e : events_) events.push_back(to_json(e));
  Json inputs = Json::array();
  for (const auto& r : inputs_) inputs.push_back(to_json(r));
  return {{"manifest", manifest()},
          {"options",
           {{"tick_seconds", world_.tick_seconds},
            {"checker", opts_.checker},
            {"fold_check_every", opts_.fold_check_every}}},
          {"world", world_to_json(world_)},
          {"queue", queue},
          {"events", events},
          {"inputs", inputs},
          {"next_input_seq", next_input_seq_},
          {"paused", paused_},
          {"ended", ended_},
          {"breaches", breaches_}};
}

Engine Engine::restore(std::shared_ptr<const Scenario> scenario, const Json& cp) {
  const Json& m = cp.at("manifest");
  if (m.at("engine_version").get<std::string>() != kEngineVersion) throw std::invalid_argument("engine version mismatch");
  if (m.at("fingerprint").get<std::string>() != std::to_string(scenario_fingerprint(*scenario))) {
    throw std::invalid_argument("scenario fingerprint mismatch");
  }
  EngineOptions opts;
  opts.tick_seconds = cp.at("options").at("tick_seconds").get<int>();
  opts.checker = cp.at("options").at("checker").get<bool>();
  opts.fold_check_every = cp.at("options").at("fold_check_every").get<long>();
  opts.seed = std::stoull(m.at("seed").get<std::string>());
  const auto mode = parse_scoring_mode(m.at("scoring").at("mode").get<std::string>());
  if (!mode) throw std::invalid_argument("unknown scoring mode in checkpoint");
  opts.scoring = ScoringMode{*mode, m.at("scoring").at("clamp_floor").get<double>()};
  Engine e(std::move(scenario), opts);
  world_from_json(e.world_, cp.at("world"));
  e.queue_.clear();
  for (const auto& q : cp.at("queue")) {
    Queued item;
    item.seq = q.at("seq").get<long>();
    item.issuer = q.at("issuer").get<std::string>();
    if (!q.at("action").is_null()) item.action = action_from_json(q.at("action"));
    if (!q.at("inject").is_null()) item.inject = inject_from_json(q.at("inject"));
    e.queue_.push_back(std::move(item));
  }
  e.events_.clear();
  for (const auto& ev : cp.at("events")) e.events_.push_back(event_from_json(ev));
  e.inputs_.clear();
  for (const auto& r : cp.at("inputs")) e.inputs_.push_back(input_from_json(r));
  e.next_input_seq_ = cp.at("next_input_seq").get<long>();
  e.paused_ = cp.at("paused").get<bool>();
  e.ended_ = cp.at("ended").get<bool>();
  e.breaches_ = cp.at("breaches").get<std::vector<std::string>>();
  e.checked_events_ = e.events_.size();
  return e;
}

Engine Engine::replay(std::shared_ptr<const Scenario> scenario, EngineOptions opts,
                      const std::vector<InputRecord>& inputs, std::optional<long> until_tick, bool finish_run) {
  Engine e(std::move(scenario), opts);
  std::size_t next = 0;
  while (true) {
    while (next < inputs.size() && inputs[next].tick <= e.world_.tick) {
      const InputRecord& r = inputs[next];
      if (r.tick < e.world_.tick) throw std::invalid_argument("input log is not ordered by tick");
      if (until_tick && r.tick >= *until_tick && !finish_run) break;
      ++next;
      const Intake in = r.kind == InputRecord::Kind::Action ? e.enqueue_action(action_from_json(r.payload))
                                                            : e.enqueue_inject(inject_from_json(r.payload), r.issuer);
      if (in.seq != r.seq) throw std::invalid_argument("input log diverged at seq " + std::to_string(r.seq));
    }
    if ((until_tick && e.world_.tick >= *until_tick) || e.at_end()) break;
    e.step_one();
  }
  if (finish_run || !until_tick) e.finish();
  return e;
}

}  // namespace medevac
