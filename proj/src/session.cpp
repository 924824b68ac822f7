#include "medevac/session.h"

#include <algorithm>
#include <filesystem>
#include <set>

#include <openssl/rand.h>

#include "medevac/headless.h"
#include "medevac/observation.h"
#include "medevac/scoring.h"

namespace medevac {
namespace {

std::string random_token() {
  unsigned char buf[16];
  if (RAND_bytes(buf, sizeof buf) != 1) throw std::runtime_error("RAND_bytes failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char b : buf) {
    out += kHex[b >> 4];
    out += kHex[b & 15];
  }
  return out;
}

bool has_road(const Scenario& sc, const std::string& node) {
  return std::any_of(sc.map.roads.begin(), sc.map.roads.end(),
                     [&](const MapEdge& e) { return e.ground_passable && (e.a == node || e.b == node); });
}

bool sea_based(const Scenario& sc, const Facility& f) {
  const MapNode* n = sc.map.find_node(f.node);
  return f.mobile || (n && n->kind == NodeKind::Water);
}

bool is_feed(const Json& m) {
  const auto t = m.value("type", "");
  return t == "delta" || t == "snapshot";
}

}  // namespace

std::string_view to_string(SessionPhase p) {
  switch (p) {
    case SessionPhase::Planning: return "planning";
    case SessionPhase::Execution: return "execution";
    case SessionPhase::Debrief: return "debrief";
  }
  return "?";
}

Json to_json(const Placement& p) {
  Json j{{"site", p.site}, {"node", p.node}};
  if (p.kind) j["kind"] = std::string(to_string(*p.kind));
  return j;
}

Placement placement_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("placement must be an object");
  Placement p;
  if (!j.contains("site") || !j["site"].is_string()) throw std::invalid_argument("placement.site must be a string");
  if (!j.contains("node") || !j["node"].is_string()) throw std::invalid_argument("placement.node must be a string");
  p.site = j["site"].get<std::string>();
  p.node = j["node"].get<std::string>();
  if (j.contains("kind") && !j["kind"].is_null()) {
    if (!j["kind"].is_string()) throw std::invalid_argument("placement.kind must be a string");
    p.kind = parse_facility_role(j["kind"].get<std::string>());
    if (!p.kind) throw std::invalid_argument("unknown site kind '" + j["kind"].get<std::string>() + "'");
  }
  return p;
}

Verdict check_placement(const Scenario& sc, const Placement& p) {
  const MapNode* node = sc.map.find_node(p.node);
  if (!node) return Verdict::reject("unknown node " + p.node);
  const Facility* existing = sc.find_facility(p.site);
  if (!existing) {
    if (!p.kind) return Verdict::reject("unknown site " + p.site);
    if (!is_exchange_point(*p.kind)) return Verdict::reject("only exchange points can be added during planning");
    if (sc.map.find_node(p.site) || sc.find_spec(p.site)) return Verdict::reject("site id " + p.site + " is taken");
    for (const auto& pi : sc.platforms) {
      if (pi.id == p.site) return Verdict::reject("site id " + p.site + " is taken");
    }
  } else if (p.kind && *p.kind != existing->role) {
    return Verdict::reject("site " + p.site + " is a " + std::string(to_string(existing->role)));
  }
  const FacilityRole kind = existing ? existing->role : *p.kind;
  if (kind == FacilityRole::CCP) return Verdict::reject("collection points are fixed");
  const bool ship = existing && sea_based(sc, *existing);
  if (ship) {
    if (node->kind != NodeKind::Water) return Verdict::reject(p.site + " is a ship and needs a water node");
    return Verdict::ok();
  }
  if (node->kind == NodeKind::Water) return Verdict::reject(p.site + " needs a land or port node");
  if (kind == FacilityRole::AXP && !has_road(sc, p.node)) return Verdict::reject("an AXP needs a road node");
  return Verdict::ok();
}

Scenario apply_placements(const Scenario& sc, const std::vector<Placement>& placements) {
  Scenario out = sc;
  for (const auto& p : placements) {
    if (const Verdict v = check_placement(out, p); !v) {
      throw ScenarioError(ScenarioError::Kind::Invariant, "placements", v.reason);
    }
    auto it = std::find_if(out.facilities.begin(), out.facilities.end(),
                           [&](const Facility& f) { return f.id == p.site; });
    if (it != out.facilities.end()) {
      it->node = p.node;
      continue;
    }
    Facility f;
    f.id = p.site;
    f.role = *p.kind;
    f.node = p.node;
    out.facilities.push_back(f);
  }
  const auto violations = validate_scenario(out);
  if (!violations.empty()) {
    throw ScenarioError(ScenarioError::Kind::Invariant, violations.front().field, violations.front().message);
  }
  return out;
}

Session::Session(std::string id, std::shared_ptr<const Scenario> scenario, std::vector<TeamRoster> roster,
                 SessionOptions opts)
    : id_(std::move(id)), scenario_(std::move(scenario)), roster_(std::move(roster)), opts_(std::move(opts)),
      token_(random_token()) {
  for (const auto& r : scenario_->roles) {
    if (r.permissions.can_inject) {
      instructor_ = r.name;
      break;
    }
  }
  if (instructor_.empty()) throw SessionError("scenario has no instructor role");
  if (roster_.empty() || roster_.size() > 2) throw SessionError("a session has one or two teams");
  std::set<std::string> names;
  for (const auto& t : roster_) {
    if (t.name.empty()) throw SessionError("team name must not be empty");
    if (!names.insert(t.name).second) throw SessionError("duplicate team " + t.name);
    std::set<std::string> seen;
    for (const auto& role : t.roles) {
      const RoleAssignment* r = scenario_->find_role(role);
      if (!r) throw SessionError("unknown role " + role);
      if (role == instructor_) throw SessionError("the instructor is not a team role");
      if (!seen.insert(role).second) throw SessionError("duplicate role binding " + role + " in team " + t.name);
    }
  }
  for (const auto& t : roster_) {
    Team team;
    team.roster = t;
    team.engine = std::make_unique<Engine>(scenario_, opts_.engine);
    teams_.push_back(std::move(team));
  }
}

SessionPhase Session::phase() const {
  std::lock_guard lock(mu_);
  return phase_;
}

std::vector<std::string> Session::team_names() const {
  std::vector<std::string> out;
  for (const auto& t : roster_) out.push_back(t.name);
  return out;
}

Session::Team* Session::find_team(const std::string& name) {
  for (auto& t : teams_) {
    if (t.roster.name == name) return &t;
  }
  return nullptr;
}

Session::Team& Session::team_ref(const std::string& name) {
  Team* t = find_team(name);
  if (!t) throw SessionError("unknown team " + name);
  return *t;
}

const Session::Team& Session::team_ref(const std::string& name) const {
  return const_cast<Session*>(this)->team_ref(name);
}

Session::Client* Session::find_client(const std::string& id) {
  for (auto& c : clients_) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

const Session::Client* Session::find_client(const std::string& id) const {
  return const_cast<Session*>(this)->find_client(id);
}

bool Session::is_instructor(const Client& c) const { return c.binding && c.binding->role == instructor_; }

std::vector<std::string> Session::followed_teams(const Client& c) const {
  if (!c.binding) return {};
  if (is_instructor(c)) return team_names();
  return {c.binding->team};
}

std::string Session::connect() {
  std::lock_guard lock(mu_);
  Client c;
  c.id = random_token();
  clients_.push_back(std::move(c));
  return clients_.back().id;
}

void Session::disconnect(const std::string& client) {
  std::lock_guard lock(mu_);
  if (Client* c = find_client(client)) c->connected = false;
}

bool Session::connected(const std::string& client) const {
  std::lock_guard lock(mu_);
  const Client* c = find_client(client);
  return c && c->connected;
}

bool Session::known(const std::string& client) const {
  std::lock_guard lock(mu_);
  return find_client(client) != nullptr;
}

Verdict Session::bind(const std::string& client, const std::string& team, const std::string& role) {
  std::lock_guard lock(mu_);
  Client* c = find_client(client);
  if (!c) return Verdict::reject("unknown client");
  if (c->binding) return Verdict::reject("client already bound to " + c->binding->role);
  if (role == instructor_) {
    c->binding = Binding{"", role};
  } else {
    Team* t = find_team(team);
    if (!t) return Verdict::reject("unknown team " + team);
    if (std::find(t->roster.roles.begin(), t->roster.roles.end(), role) == t->roster.roles.end()) {
      return Verdict::reject("role " + role + " is not on team " + team);
    }
    c->binding = Binding{team, role};
  }
  c->connected = true;
  for (const auto& name : followed_teams(*c)) {
    const Engine& e = *team_ref(name).engine;
    Cursor& cur = c->cursors[name];
    cur.sent = static_cast<long>(e.events().size()) - 1;
    cur.acked = -1;
    post_locked(*c, snapshot_msg(*c, name));
  }
  return Verdict::ok();
}

Verdict Session::resume(const std::string& client, const std::map<std::string, long>& last_seq) {
  std::lock_guard lock(mu_);
  Client* c = find_client(client);
  if (!c) return Verdict::reject("unknown client");
  c->connected = true;
  c->outbox.clear();
  for (const auto& name : followed_teams(*c)) {
    const Engine& e = *team_ref(name).engine;
    const long last = static_cast<long>(e.events().size()) - 1;
    Cursor& cur = c->cursors[name];
    auto it = last_seq.find(name);
    long from = (it != last_seq.end() ? it->second : cur.acked) + 1;
    from = std::clamp(from, 0L, last + 1);
    if (from <= last) post_locked(*c, delta_msg(*c, name, from, last));
    cur.sent = last;
    cur.acked = from - 1;
    post_locked(*c, snapshot_msg(*c, name));
  }
  return Verdict::ok();
}

void Session::ack(const std::string& client, const std::string& team, long seq) {
  std::lock_guard lock(mu_);
  Client* c = find_client(client);
  if (!c) return;
  auto it = c->cursors.find(team);
  if (it == c->cursors.end()) return;
  it->second.acked = std::clamp(seq, it->second.acked, it->second.sent);
}

std::optional<Session::Binding> Session::binding(const std::string& client) const {
  std::lock_guard lock(mu_);
  const Client* c = find_client(client);
  if (!c) return std::nullopt;
  return c->binding;
}

Verdict Session::propose_placement(const std::string& client, const Placement& p) {
  std::lock_guard lock(mu_);
  if (phase_ != SessionPhase::Planning) return Verdict::reject("phase");
  const Client* c = find_client(client);
  if (!c || !c->binding) return Verdict::reject("not bound");
  if (is_instructor(*c)) return Verdict::reject("the instructor places sites through commit");
  const RoleAssignment* r = scenario_->find_role(c->binding->role);
  if (!r || !r->permissions.can_place_sites) return Verdict::reject("permission");
  Team& t = team_ref(c->binding->team);
  // Checked against the plan so far, so an added exchange point can be moved again.
  std::vector<Placement> plan = t.placements;
  plan.push_back(p);
  try {
    apply_placements(*scenario_, plan);
  } catch (const ScenarioError& e) {
    return Verdict::reject(e.what());
  }
  t.placements = std::move(plan);
  return Verdict::ok();
}

std::vector<Placement> Session::placements(const std::string& team) const {
  std::lock_guard lock(mu_);
  return team_ref(team).placements;
}

Verdict Session::commit_planning(const std::string& client) {
  std::lock_guard lock(mu_);
  const Client* c = find_client(client);
  if (!c || !c->binding || !is_instructor(*c)) return Verdict::reject("permission");
  return commit_locked();
}

Verdict Session::instructor_commit() {
  std::lock_guard lock(mu_);
  return commit_locked();
}

Verdict Session::commit_locked() {
  if (phase_ != SessionPhase::Planning) return Verdict::reject("phase");
  std::vector<std::shared_ptr<const Scenario>> committed;
  for (const auto& t : teams_) {
    try {
      committed.push_back(std::make_shared<const Scenario>(apply_placements(*scenario_, t.placements)));
    } catch (const ScenarioError& e) {
      return Verdict::reject("team " + t.roster.name + ": " + e.what());
    }
  }
  for (std::size_t i = 0; i < teams_.size(); ++i) {
    teams_[i].engine = std::make_unique<Engine>(committed[i], opts_.engine);
  }
  phase_ = SessionPhase::Execution;
  for (auto& c : clients_) {
    if (!c.binding) continue;
    c.outbox.erase(std::remove_if(c.outbox.begin(), c.outbox.end(), is_feed), c.outbox.end());
    post_locked(c, Json{{"type", "phase"}, {"phase", std::string(to_string(phase_))}});
    for (const auto& name : followed_teams(c)) {
      Cursor& cur = c.cursors[name];
      cur.sent = -1;
      cur.acked = -1;
    }
  }
  broadcast_locked();
  return Verdict::ok();
}

Intake Session::submit_action(const std::string& client, ActionRequest a) {
  std::lock_guard lock(mu_);
  const Client* c = find_client(client);
  if (!c || !c->binding) return {false, -1, "not bound"};
  if (phase_ != SessionPhase::Execution) return {false, -1, "phase"};
  if (is_instructor(*c)) return {false, -1, "the instructor issues injects, not actions"};
  Team& t = team_ref(c->binding->team);
  a.actor = c->binding->role;
  a.issued_at = t.engine->world().now();
  return t.engine->enqueue_action(a);
}

Intake Session::submit_inject(const std::string& client, const std::string& team, const Inject& i) {
  std::lock_guard lock(mu_);
  const Client* c = find_client(client);
  if (!c || !c->binding) return {false, -1, "not bound"};
  if (phase_ != SessionPhase::Execution) return {false, -1, "phase"};
  Team* t = find_team(team);
  if (!t) return {false, -1, "unknown team " + team};
  // Non-instructor issuers are recorded and rejected by the engine with "permission".
  return t->engine->enqueue_inject(i, c->binding->role);
}

Intake Session::instructor_inject(const std::string& team, const Inject& i) {
  std::lock_guard lock(mu_);
  if (phase_ != SessionPhase::Execution) return {false, -1, "phase"};
  Team* t = find_team(team);
  if (!t) return {false, -1, "unknown team " + team};
  return t->engine->enqueue_inject(i, instructor_);
}

ChatResult Session::relay_chat(const std::string& client, const std::string& text, const std::string& team) {
  std::lock_guard lock(mu_);
  ChatResult out;
  Client* from = find_client(client);
  if (!from || !from->binding) {
    out.reason = "not bound";
    return out;
  }
  if (phase_ != SessionPhase::Execution) {
    out.reason = "phase";
    return out;
  }
  const bool instructor = is_instructor(*from);
  const std::string team_name = instructor ? team : from->binding->team;
  Team* t = find_team(team_name);
  if (!t) {
    out.reason = "unknown team " + team_name;
    return out;
  }
  const World& w = t->engine->world();
  if (!instructor && w.blackout_at(w.now())) {
    out.reason = "blackout";
    Minutes until = w.now();
    for (const auto& b : w.blackouts) {
      if (b.contains(w.now())) until = std::max(until, b.end);
    }
    post_locked(*from, Json{{"type", "notice"}, {"code", "blackout"}, {"until", until}, {"text", text}});
    return out;
  }
  const Json msg{{"type", "chat"}, {"team", team_name}, {"from", from->binding->role}, {"t", w.now()}, {"text", text}};
  for (auto& c : clients_) {
    if (!c.binding) continue;
    if (!is_instructor(c) && c.binding->team != team_name) continue;
    post_locked(c, msg);
    out.recipients.push_back(c.id);
  }
  out.delivered = true;
  return out;
}

void Session::advance(long ticks) {
  std::lock_guard lock(mu_);
  if (phase_ != SessionPhase::Execution) return;
  bool all_done = true;
  for (auto& t : teams_) {
    for (long i = 0; i < ticks && !t.engine->at_end(); ++i) t.engine->step(1);
    all_done = all_done && t.engine->at_end();
  }
  if (all_done) enter_debrief_locked();
  broadcast_locked();
}

void Session::end_execution() {
  std::lock_guard lock(mu_);
  if (phase_ != SessionPhase::Execution) return;
  enter_debrief_locked();
  broadcast_locked();
}

void Session::enter_debrief_locked() {
  for (auto& t : teams_) t.engine->finish();
  phase_ = SessionPhase::Debrief;
  if (!opts_.archive_dir.empty()) {
    for (const auto& t : teams_) {
      const auto dir = (std::filesystem::path(opts_.archive_dir) / id_ / t.roster.name).string();
      write_archive(*t.engine, dir);
      archives_.push_back(dir);
    }
  }
  broadcast_locked();
  for (auto& c : clients_) {
    if (!c.binding) continue;
    post_locked(c, Json{{"type", "phase"}, {"phase", std::string(to_string(phase_))}});
    for (const auto& name : followed_teams(c)) {
      post_locked(c, Json{{"type", "debrief"}, {"team", name}, {"summary", debrief_summary(team_ref(name).engine->events())}});
    }
  }
}

void Session::broadcast() {
  std::lock_guard lock(mu_);
  broadcast_locked();
}

void Session::broadcast_locked() {
  if (phase_ == SessionPhase::Planning) return;
  for (auto& c : clients_) {
    if (!c.binding) continue;
    for (const auto& name : followed_teams(c)) {
      const Engine& e = *team_ref(name).engine;
      const long last = static_cast<long>(e.events().size()) - 1;
      Cursor& cur = c.cursors[name];
      if (cur.sent >= last) continue;
      push_feed(c, name, delta_msg(c, name, cur.sent + 1, last));
      cur.sent = last;
    }
  }
}

void Session::push_feed(Client& c, const std::string& team, Json msg) {
  const auto feed_count = static_cast<std::size_t>(std::count_if(c.outbox.begin(), c.outbox.end(), is_feed));
  if (feed_count >= opts_.outbox_limit) {
    // Lagging client: everything queued for this team collapses into one snapshot.
    c.outbox.erase(std::remove_if(c.outbox.begin(), c.outbox.end(),
                                  [&](const Json& m) { return is_feed(m) && m.value("team", "") == team; }),
                   c.outbox.end());
    Json snap = snapshot_msg(c, team);
    snap["coalesced"] = true;
    c.outbox.push_back(std::move(snap));
    return;
  }
  c.outbox.push_back(std::move(msg));
}

void Session::request_snapshot(const std::string& client) {
  std::lock_guard lock(mu_);
  Client* c = find_client(client);
  if (!c || !c->binding) return;
  for (const auto& name : followed_teams(*c)) {
    Cursor& cur = c->cursors[name];
    cur.sent = static_cast<long>(team_ref(name).engine->events().size()) - 1;
    c->outbox.erase(std::remove_if(c->outbox.begin(), c->outbox.end(),
                                   [&](const Json& m) { return is_feed(m) && m.value("team", "") == name; }),
                    c->outbox.end());
    post_locked(*c, snapshot_msg(*c, name));
  }
}

std::vector<std::string> Session::teams_of(const std::string& client) const {
  std::lock_guard lock(mu_);
  const Client* c = find_client(client);
  return c ? followed_teams(*c) : std::vector<std::string>{};
}

Json Session::view_locked(const Client& c, const std::string& team) const {
  const Engine& e = *team_ref(team).engine;
  Json v = view_for(e.world(), c.binding->role, e.scoring());
  v["team"] = team;
  v["phase"] = std::string(to_string(phase_));
  return v;
}

Json Session::snapshot_msg(const Client& c, const std::string& team) const {
  const Engine& e = *team_ref(team).engine;
  return {{"type", "snapshot"},
          {"team", team},
          {"seq", static_cast<long>(e.events().size()) - 1},
          {"view", view_locked(c, team)}};
}

Json Session::delta_msg(const Client& c, const std::string& team, long from, long to) const {
  const Engine& e = *team_ref(team).engine;
  Json events = Json::array();
  for (long s = from; s <= to; ++s) {
    if (auto j = event_for_role(e.world(), e.events()[static_cast<std::size_t>(s)], c.binding->role)) {
      events.push_back(std::move(*j));
    }
  }
  return {{"type", "delta"},
          {"team", team},
          {"from", from},
          {"to", to},
          {"tick", e.world().tick},
          {"time", e.world().now()},
          {"events", events},
          {"view", view_locked(c, team)}};
}

Json Session::view(const std::string& client) const {
  std::lock_guard lock(mu_);
  const Client* c = find_client(client);
  if (!c || !c->binding) throw SessionError("client not bound");
  if (is_instructor(*c)) {
    Json all = Json::object();
    for (const auto& name : team_names()) all[name] = view_locked(*c, name);
    return all;
  }
  return view_locked(*c, c->binding->team);
}

Json Session::instructor_view(const std::string& team) const {
  std::lock_guard lock(mu_);
  const Engine& e = *team_ref(team).engine;
  Json v = view_for(e.world(), instructor_, e.scoring());
  v["team"] = team;
  v["phase"] = std::string(to_string(phase_));
  return v;
}

Json Session::live_score() const {
  std::lock_guard lock(mu_);
  Json out = Json::object();
  for (const auto& t : teams_) {
    Json s = to_json(medevac::live_score(t.engine->world(), t.engine->scoring()));
    s["tick"] = t.engine->world().tick;
    s["time"] = t.engine->world().now();
    out[t.roster.name] = s;
  }
  return out;
}

Json Session::debrief(const std::string& team) const {
  std::lock_guard lock(mu_);
  return debrief_summary(team_ref(team).engine->events());
}

Json Session::describe() const {
  std::lock_guard lock(mu_);
  Json teams = Json::array();
  for (const auto& t : teams_) {
    teams.push_back({{"name", t.roster.name},
                     {"roles", t.roster.roles},
                     {"tick", t.engine->world().tick},
                     {"time", t.engine->world().now()},
                     {"ended", t.engine->ended()}});
  }
  return {{"session", id_},
          {"scenario", scenario_->name},
          {"phase", std::string(to_string(phase_))},
          {"instructor", instructor_},
          {"teams", teams}};
}

void Session::post(const std::string& client, Json msg) {
  std::lock_guard lock(mu_);
  if (Client* c = find_client(client)) post_locked(*c, std::move(msg));
}

void Session::post_locked(Client& c, Json msg) { c.outbox.push_back(std::move(msg)); }

std::vector<Json> Session::drain(const std::string& client) {
  std::lock_guard lock(mu_);
  Client* c = find_client(client);
  if (!c) return {};
  std::vector<Json> out(std::make_move_iterator(c->outbox.begin()), std::make_move_iterator(c->outbox.end()));
  c->outbox.clear();
  return out;
}

std::size_t Session::pending(const std::string& client) const {
  std::lock_guard lock(mu_);
  const Client* c = find_client(client);
  return c ? c->outbox.size() : 0;
}

std::vector<std::string> Session::archive_paths() const {
  std::lock_guard lock(mu_);
  return archives_;
}

}  // namespace medevac
