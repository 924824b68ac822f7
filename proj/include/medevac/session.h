#pragma once

// Multiplayer sessions: planning, execution and debrief over one or two
// independent team worlds, role bindings, per-client filtered feeds and chat.
// Transport-agnostic: outgoing messages queue in per-client outboxes.

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "medevac/engine.h"
#include "medevac/verdict.h"

namespace medevac {

enum class SessionPhase { Planning, Execution, Debrief };
std::string_view to_string(SessionPhase p);

struct TeamRoster {
  std::string name;
  std::vector<std::string> roles;
};

/// Moves an existing site or, with `kind`, creates a new exchange point.
struct Placement {
  std::string site;
  std::string node;
  std::optional<FacilityRole> kind;
  friend bool operator==(const Placement&, const Placement&) = default;
};

Json to_json(const Placement& p);
/// Throws std::invalid_argument on malformed input.
Placement placement_from_json(const Json& j);

/// Terrain and identity rules for one placement. Collection points are fixed;
/// ships stay on water, land sites stay on land or port nodes, AXPs need a road.
Verdict check_placement(const Scenario& sc, const Placement& p);
/// The scenario with placements applied in order. Throws ScenarioError when
/// the result does not validate.
Scenario apply_placements(const Scenario& sc, const std::vector<Placement>& placements);

class SessionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SessionOptions {
  EngineOptions engine;
  /// Feed messages held per client before they collapse into one snapshot.
  std::size_t outbox_limit = 256;
  /// Archives go to <archive_dir>/<session id>/<team> at Debrief; empty = none.
  std::string archive_dir;
};

struct ChatResult {
  bool delivered = false;
  std::vector<std::string> recipients;  // client ids
  std::string reason;
};

class Session {
 public:
  /// Throws SessionError for unknown or duplicate roles, bad team counts or a
  /// scenario without an instructor role.
  Session(std::string id, std::shared_ptr<const Scenario> scenario, std::vector<TeamRoster> roster,
          SessionOptions opts = {});

  const std::string& id() const { return id_; }
  SessionPhase phase() const;
  const std::string& instructor_role() const { return instructor_; }
  /// Token expected by the instructor endpoints.
  const std::string& instructor_token() const { return token_; }
  std::vector<std::string> team_names() const;
  const std::vector<TeamRoster>& roster() const { return roster_; }

  /// Registers a connection; the returned id doubles as its resume token.
  std::string connect();
  void disconnect(const std::string& client);
  bool connected(const std::string& client) const;
  bool known(const std::string& client) const;
  /// The instructor role ignores `team` and follows every team.
  Verdict bind(const std::string& client, const std::string& team, const std::string& role);
  /// Reattaches a known client; each followed team restarts after `last_seq`
  /// (missing teams resume from the last acknowledged seq).
  Verdict resume(const std::string& client, const std::map<std::string, long>& last_seq);
  void ack(const std::string& client, const std::string& team, long seq);

  struct Binding {
    std::string team;  // empty for the instructor
    std::string role;
  };
  std::optional<Binding> binding(const std::string& client) const;

  Verdict propose_placement(const std::string& client, const Placement& p);
  std::vector<Placement> placements(const std::string& team) const;
  /// Only the instructor commits; materializes placements and starts the clock.
  Verdict commit_planning(const std::string& client);
  Verdict instructor_commit();

  Intake submit_action(const std::string& client, ActionRequest a);
  Intake submit_inject(const std::string& client, const std::string& team, const Inject& i);
  /// Inject issued through the instructor endpoint.
  Intake instructor_inject(const std::string& team, const Inject& i);
  ChatResult relay_chat(const std::string& client, const std::string& text, const std::string& team = {});

  /// Steps every team world, enters Debrief when all reach the end, then broadcasts.
  void advance(long ticks);
  /// Ends execution early and enters Debrief.
  void end_execution();
  /// Pushes pending feed deltas to every bound client.
  void broadcast();
  /// Queues a fresh snapshot of every team the client follows.
  void request_snapshot(const std::string& client);
  /// Teams whose feed the client receives.
  std::vector<std::string> teams_of(const std::string& client) const;

  Json view(const std::string& client) const;
  Json instructor_view(const std::string& team) const;
  /// {team: score board} over terminal patients.
  Json live_score() const;
  Json debrief(const std::string& team) const;
  Json describe() const;

  void post(const std::string& client, Json msg);
  std::vector<Json> drain(const std::string& client);
  std::size_t pending(const std::string& client) const;

  /// Runs `f(const Engine&)` under the session lock.
  template <typename F>
  auto with_engine(const std::string& team, F&& f) const {
    std::lock_guard lock(mu_);
    return f(*team_ref(team).engine);
  }
  std::vector<std::string> archive_paths() const;

 private:
  struct Team {
    TeamRoster roster;
    std::unique_ptr<Engine> engine;
    std::vector<Placement> placements;
  };
  struct Cursor {
    long sent = -1;   // last engine seq covered by queued messages
    long acked = -1;
  };
  struct Client {
    std::string id;
    bool connected = true;
    std::optional<Binding> binding;
    std::map<std::string, Cursor> cursors;  // per followed team
    std::deque<Json> outbox;
  };

  Team& team_ref(const std::string& name);
  const Team& team_ref(const std::string& name) const;
  Team* find_team(const std::string& name);
  Client* find_client(const std::string& id);
  const Client* find_client(const std::string& id) const;
  std::vector<std::string> followed_teams(const Client& c) const;
  bool is_instructor(const Client& c) const;

  Verdict commit_locked();
  void enter_debrief_locked();
  void broadcast_locked();
  void push_feed(Client& c, const std::string& team, Json msg);
  Json snapshot_msg(const Client& c, const std::string& team) const;
  Json delta_msg(const Client& c, const std::string& team, long from, long to) const;
  Json view_locked(const Client& c, const std::string& team) const;
  void post_locked(Client& c, Json msg);

  mutable std::mutex mu_;
  std::string id_;
  std::shared_ptr<const Scenario> scenario_;
  std::vector<TeamRoster> roster_;
  SessionOptions opts_;
  std::string instructor_;
  std::string token_;
  SessionPhase phase_ = SessionPhase::Planning;
  std::vector<Team> teams_;
  std::vector<Client> clients_;
  std::vector<std::string> archives_;
};

}  // namespace medevac
