#include "medevac/events.h"

#include <stdexcept>

namespace medevac {
namespace {

template <typename T, typename F>
std::vector<T> parse_lines(std::string_view text, F&& parse) {
  std::vector<T> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse(Json::parse(line)));
    } catch (const std::exception& e) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

Json to_json(const SimEvent& e) {
  return Json{{"seq", e.seq}, {"tick", e.tick}, {"t", e.time}, {"kind", e.kind}, {"actor", e.actor}, {"data", e.data}};
}

SimEvent event_from_json(const Json& j) {
  SimEvent e;
  e.seq = j.at("seq").get<long>();
  e.tick = j.at("tick").get<long>();
  e.time = j.at("t").get<double>();
  e.kind = j.at("kind").get<std::string>();
  e.actor = j.at("actor").get<std::string>();
  e.data = j.at("data");
  return e;
}

std::string to_ndjson(const std::vector<SimEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    out += to_json(e).dump();
    out += '\n';
  }
  return out;
}

std::vector<SimEvent> events_from_ndjson(std::string_view text) {
  return parse_lines<SimEvent>(text, [](const Json& j) { return event_from_json(j); });
}

Json to_json(const InputRecord& r) {
  return Json{{"seq", r.seq},
              {"tick", r.tick},
              {"kind", r.kind == InputRecord::Kind::Action ? "action" : "inject"},
              {"issuer", r.issuer},
              {"payload", r.payload}};
}

InputRecord input_from_json(const Json& j) {
  InputRecord r;
  r.seq = j.at("seq").get<long>();
  r.tick = j.at("tick").get<long>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "action") r.kind = InputRecord::Kind::Action;
  else if (kind == "inject") r.kind = InputRecord::Kind::Inject;
  else throw std::invalid_argument("unknown input kind '" + kind + "'");
  r.issuer = j.at("issuer").get<std::string>();
  r.payload = j.at("payload");
  return r;
}

std::string to_ndjson(const std::vector<InputRecord>& inputs) {
  std::string out;
  for (const auto& r : inputs) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<InputRecord> inputs_from_ndjson(std::string_view text) {
  return parse_lines<InputRecord>(text, [](const Json& j) { return input_from_json(j); });
}

}  // namespace medevac
