#include "medevac/protocol.h"

namespace medevac {
namespace {

Json intake_json(const Intake& in) {
  return {{"type", "intake"}, {"accepted", in.accepted}, {"seq", in.seq}, {"reason", in.reason}};
}

std::map<std::string, long> resume_points(const Json& j) {
  std::map<std::string, long> out;
  if (!j.is_object()) return out;
  for (const auto& [team, seq] : j.items()) {
    if (seq.is_number_integer()) out[team] = seq.get<long>();
  }
  return out;
}

}  // namespace

void ClientEndpoint::reply(Json msg, const Json& request) {
  if (request.is_object() && request.contains("id")) msg["ref"] = request["id"];
  replies_.push_back(std::move(msg));
}

void ClientEndpoint::error(const std::string& code, const std::string& message, const Json& request) {
  reply(Json{{"type", "error"}, {"code", code}, {"message", message}}, request);
}

bool ClientEndpoint::on_message(std::string_view text) {
  Json m;
  try {
    m = Json::parse(text);
  } catch (const Json::parse_error& e) {
    error("malformed", e.what(), Json());
    return true;
  }
  if (!m.is_object() || !m.contains("type") || !m["type"].is_string()) {
    error("malformed", "message must be an object with a string \"type\"", m);
    return true;
  }
  const std::string type = m["type"].get<std::string>();
  Session& s = *session_;

  if (type == "join") {
    if (joined()) {
      error("join", "already joined", m);
      return true;
    }
    if (m.value("protocol", "") != kProtocolVersion) {
      error("version", std::string("server speaks ") + kProtocolVersion, m);
      return false;
    }
    const std::string token = m.value("token", "");
    if (!token.empty()) {
      if (!s.known(token)) {
        error("join", "unknown token", m);
        return true;
      }
      client_ = token;
      reply({{"type", "joined"}, {"protocol", kProtocolVersion}, {"client", client_}, {"resumed", true},
             {"session", s.describe()}},
            m);
      const Verdict v = s.resume(token, resume_points(m.value("resume", Json::object())));
      if (!v) error("join", v.reason, m);
      return true;
    }
    client_ = s.connect();
    reply({{"type", "joined"}, {"protocol", kProtocolVersion}, {"client", client_}, {"resumed", false},
           {"session", s.describe()}},
          m);
    return true;
  }
  if (!joined()) {
    error("join", "send a join message first", m);
    return true;
  }

  try {
    if (type == "bind-role") {
      const std::string team = m.value("team", "");
      const std::string role = m.value("role", "");
      // Reply before bind so "bound" precedes the first snapshot.
      const auto before = replies_.size();
      reply({{"type", "bound"}, {"team", team}, {"role", role}}, m);
      const Verdict v = s.bind(client_, team, role);
      if (!v) {
        replies_.resize(before);
        error("bind", v.reason, m);
      }
    } else if (type == "ack") {
      s.ack(client_, m.value("team", ""), m.value("seq", -1L));
    } else if (type == "action") {
      if (!m.contains("action")) throw std::invalid_argument("action missing");
      Json body = m["action"];
      if (body.is_object()) body.erase("actor");
      reply(intake_json(s.submit_action(client_, action_from_json(body))), m);
    } else if (type == "inject") {
      if (!m.contains("inject")) throw std::invalid_argument("inject missing");
      reply(intake_json(s.submit_inject(client_, m.value("team", ""), inject_from_json(m["inject"]))), m);
    } else if (type == "chat") {
      const ChatResult r = s.relay_chat(client_, m.value("text", ""), m.value("team", ""));
      if (!r.delivered && r.reason != "blackout") error("chat", r.reason, m);
    } else if (type == "placement") {
      if (!m.contains("placement")) throw std::invalid_argument("placement missing");
      const Verdict v = s.propose_placement(client_, placement_from_json(m["placement"]));
      Json placed = Json::array();
      if (auto b = s.binding(client_); b && !b->team.empty()) {
        for (const auto& p : s.placements(b->team)) placed.push_back(to_json(p));
      }
      reply({{"type", "placement"}, {"accepted", v.allowed}, {"reason", v.reason}, {"placements", placed}}, m);
    } else if (type == "commit") {
      const Verdict v = s.commit_planning(client_);
      if (!v) error("commit", v.reason, m);
    } else if (type == "snapshot") {
      if (!s.binding(client_)) {
        error("bind", "bind a role first", m);
      } else {
        s.request_snapshot(client_);
      }
    } else if (type == "debrief") {
      if (s.phase() != SessionPhase::Debrief) {
        error("phase", "debrief is available after execution", m);
      } else {
        for (const auto& team : s.teams_of(client_)) {
          reply({{"type", "debrief"}, {"team", team}, {"summary", s.debrief(team)}}, m);
        }
      }
    } else {
      error("unknown-type", "unknown message type '" + type + "'", m);
    }
  } catch (const std::invalid_argument& e) {
    error("malformed", e.what(), m);
  } catch (const SessionError& e) {
    error("session", e.what(), m);
  }
  return true;
}

std::vector<std::string> ClientEndpoint::outgoing() {
  std::vector<std::string> out;
  for (auto& r : replies_) out.push_back(r.dump());
  replies_.clear();
  if (joined()) {
    for (auto& m : session_->drain(client_)) out.push_back(m.dump());
  }
  return out;
}

void ClientEndpoint::on_close() {
  if (joined()) session_->disconnect(client_);
}

}  // namespace medevac
