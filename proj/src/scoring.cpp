#include "medevac/scoring.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace medevac {
namespace {

struct RunHeader {
  PrecedenceTable precedence;
  ScoringMode mode;
  Minutes end = 0.0;
  bool ended = false;
};

RunHeader read_header(const std::vector<SimEvent>& log) {
  RunHeader h;
  for (const auto& e : log) {
    if (e.kind == ev::RunStarted) {
      const Json& d = e.data;
      if (d.contains("precedence")) {
        const Json& p = d.at("precedence");
        h.precedence.urgent = {p.at("urgent").at("p_max").get<double>(), p.at("urgent").at("e_s").get<double>()};
        h.precedence.priority = {p.at("priority").at("p_max").get<double>(), p.at("priority").at("e_s").get<double>()};
      }
      if (d.contains("scoring")) {
        h.mode.kind = parse_scoring_mode(d.at("scoring").at("mode").get<std::string>()).value_or(ScoringModeKind::LinearDecay);
        h.mode.clamp_floor = d.at("scoring").at("clamp_floor").get<double>();
      }
    }
    if (e.kind == ev::RunEnded) h.ended = true;
    h.end = std::max(h.end, e.time);
  }
  return h;
}

Precedence precedence_of(const Json& d) {
  return parse_precedence(d.at("precedence").get<std::string>()).value_or(Precedence::Priority);
}

std::string fmt(double v) {
  Json j = v;
  return j.dump();
}

std::string opt_fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
}

}  // namespace

double delivery_score(const PrecedenceSpec& spec, const ScoringMode& mode, Minutes dt) {
  double s = 0.0;
  if (mode.kind == ScoringModeKind::LinearDecay) {
    s = spec.p_max * (1.0 - dt / spec.e_s);
  } else {
    s = spec.p_max * (1.0 - spec.e_s / dt);
  }
  return std::max(mode.clamp_floor, s);
}

double patient_score(const Patient& p, const PrecedenceSpec& spec, const ScoringMode& mode) {
  if (p.dead()) return kDeathScore;
  if (!p.t2) throw std::logic_error("patient " + std::to_string(p.id) + " is not terminal");
  return delivery_score(spec, mode, *p.t2 - p.t0);
}

Json to_json(const ScoreBoard& b) {
  return {{"score", b.score}, {"spawned", b.spawned}, {"saves", b.saves}, {"deaths", b.deaths}, {"alive", b.alive}};
}

ScoreBoard score_screen(const std::vector<SimEvent>& log) {
  const RunHeader h = read_header(log);
  ScoreBoard b;
  std::map<PatientId, std::pair<Precedence, Minutes>> spawned;
  for (const auto& e : log) {
    if (e.kind == ev::PatientSpawned) {
      spawned[e.data.at("patient").get<PatientId>()] = {precedence_of(e.data), e.data.at("t0").get<double>()};
      ++b.spawned;
    } else if (e.kind == ev::Died) {
      ++b.deaths;
      b.score += kDeathScore;
    } else if (e.kind == ev::DeliveredRole3) {
      ++b.saves;
    } else if (e.kind == ev::Unloaded && e.data.at("role") == "role2") {
      for (const auto& id : e.data.at("patients")) {
        const auto& [prec, t0] = spawned.at(id.get<PatientId>());
        b.score += delivery_score(h.precedence[prec], h.mode, e.time - t0);
      }
    }
  }
  b.alive = b.spawned - b.saves - b.deaths;
  return b;
}

ScoreBoard live_score(const World& w, const ScoringMode& mode) {
  ScoreBoard b;
  for (const auto& p : w.patients) {
    ++b.spawned;
    if (p.dead()) ++b.deaths;
    else if (p.location == PatientLocation::Delivered) ++b.saves;
    if (p.terminal()) b.score += patient_score(p, w.scenario->precedence[p.precedence], mode);
  }
  b.alive = b.spawned - b.saves - b.deaths;
  return b;
}

MeanCI mean_ci(const std::vector<double>& xs) {
  MeanCI m;
  m.n = static_cast<long>(xs.size());
  if (xs.empty()) return m;
  m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(m.n);
  if (m.n >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    const double sd = std::sqrt(ss / static_cast<double>(m.n - 1));
    m.half_width = 1.96 * sd / std::sqrt(static_cast<double>(m.n));
  }
  return m;
}

Json to_json(const MeanCI& m) {
  Json j{{"n", m.n}, {"mean", m.mean}};
  if (m.half_width) {
    j["ci_low"] = m.mean - *m.half_width;
    j["ci_high"] = m.mean + *m.half_width;
  } else {
    j["ci_low"] = nullptr;
    j["ci_high"] = nullptr;
  }
  return j;
}

DelayStats delay_stats(const std::vector<SimEvent>& log) {
  struct Open {
    std::string node;
    Precedence precedence;
    Minutes since;
  };
  const RunHeader h = read_header(log);
  DelayStats out;
  std::map<PatientId, Precedence> prec;
  std::map<PatientId, Open> open;
  for (const auto& e : log) {
    const Json& d = e.data;
    if (e.kind == ev::PatientSpawned) {
      const auto id = d.at("patient").get<PatientId>();
      prec[id] = precedence_of(d);
      open[id] = {d.at("ccp").get<std::string>(), prec[id], e.time};
    } else if (e.kind == ev::Treated) {
      const auto id = d.at("patient").get<PatientId>();
      open[id] = {d.at("site").get<std::string>(), prec.at(id), e.time};
    } else if (e.kind == ev::Loaded) {
      const auto site = d.at("site").get<std::string>();
      for (const auto& entry : d.at("patients")) {
        const auto id = entry.at("patient").get<PatientId>();
        auto it = open.find(id);
        if (it == open.end() || it->second.node != site) continue;
        out.records.push_back({id, site, it->second.precedence, e.time - it->second.since, false});
        open.erase(it);
      }
    } else if (e.kind == ev::Died) {
      const auto id = d.at("patient").get<PatientId>();
      auto it = open.find(id);
      if (it == open.end()) continue;
      out.records.push_back({id, it->second.node, it->second.precedence, e.time - it->second.since, true});
      open.erase(it);
    }
  }
  for (const auto& [id, o] : open) out.records.push_back({id, o.node, o.precedence, h.end - o.since, true});

  std::map<std::pair<std::string, int>, std::pair<std::vector<double>, long>> groups;
  for (const auto& r : out.records) {
    auto& g = groups[{r.node, static_cast<int>(r.precedence)}];
    if (r.censored) ++g.second;
    else g.first.push_back(r.delay);
  }
  for (const auto& [key, g] : groups) {
    out.groups.push_back({key.first, static_cast<Precedence>(key.second), mean_ci(g.first), g.second});
  }
  return out;
}

EvacStats evac_time_stats(const std::vector<SimEvent>& log) {
  const RunHeader h = read_header(log);
  EvacStats out;
  std::map<PatientId, std::pair<Precedence, Minutes>> spawned;
  for (const auto& e : log) {
    if (e.kind == ev::PatientSpawned) {
      spawned[e.data.at("patient").get<PatientId>()] = {precedence_of(e.data), e.data.at("t0").get<double>()};
    } else if (e.kind == ev::Unloaded && e.data.at("role") == "role2") {
      for (const auto& id : e.data.at("patients")) {
        const auto& [p, t0] = spawned.at(id.get<PatientId>());
        out.records.push_back({id.get<PatientId>(), p, e.time - t0});
      }
    }
  }
  for (Precedence p : {Precedence::Urgent, Precedence::Priority}) {
    std::vector<double> xs;
    long compliant = 0;
    for (const auto& r : out.records) {
      if (r.precedence != p) continue;
      xs.push_back(r.evac_time);
      if (r.evac_time <= h.precedence[p].e_s) ++compliant;
    }
    if (xs.empty()) continue;
    out.groups.push_back({p, h.precedence[p].e_s, mean_ci(xs), compliant});
  }
  return out;
}

Timeseries timeseries(const std::vector<SimEvent>& log, Minutes cadence) {
  if (!(cadence > 0)) throw std::invalid_argument("cadence must be positive");
  const RunHeader h = read_header(log);
  Timeseries out;

  // Patient counts: collect deltas, then accumulate in time order.
  struct Delta {
    Minutes t;
    long seq;
    std::string site;
    long d;
  };
  std::vector<Delta> deltas;
  std::map<PatientId, std::string> at_site;
  std::map<std::string, bool> tracked;
  auto leave = [&](PatientId id, Minutes t, long seq) {
    auto it = at_site.find(id);
    if (it == at_site.end()) return;
    deltas.push_back({t, seq, it->second, -1});
    at_site.erase(it);
  };
  for (const auto& e : log) {
    const Json& d = e.data;
    if (e.kind == ev::RunStarted && d.contains("facilities")) {
      for (const auto& f : d.at("facilities")) {
        const auto role = f.at("role").get<std::string>();
        if (role == "ccp" || role == "role1") tracked[f.at("id").get<std::string>()] = true;
      }
      for (const auto& [site, _] : tracked) out.counts[site].push_back({0.0, 0});
    } else if (e.kind == ev::PatientSpawned) {
      const auto site = d.at("ccp").get<std::string>();
      tracked[site] = true;
      at_site[d.at("patient").get<PatientId>()] = site;
      deltas.push_back({e.time, e.seq, site, +1});
    } else if (e.kind == ev::Loaded) {
      for (const auto& entry : d.at("patients")) leave(entry.at("patient").get<PatientId>(), e.time, e.seq);
    } else if (e.kind == ev::Died) {
      leave(d.at("patient").get<PatientId>(), e.time, e.seq);
    } else if (e.kind == ev::Unloaded && d.at("role") == "role1") {
      const auto site = d.at("site").get<std::string>();
      tracked[site] = true;
      for (const auto& id : d.at("patients")) {
        at_site[id.get<PatientId>()] = site;
        deltas.push_back({e.time, e.seq, site, +1});
      }
    }
  }
  std::stable_sort(deltas.begin(), deltas.end(),
                   [](const Delta& a, const Delta& b) { return std::tie(a.t, a.seq) < std::tie(b.t, b.seq); });
  std::map<std::string, long> level;
  for (const auto& dl : deltas) {
    long& n = level[dl.site];
    n += dl.d;
    auto& series = out.counts[dl.site];
    if (!series.empty() && series.back().t == dl.t) series.back().count = n;
    else series.push_back({dl.t, n});
  }

  // Position traces: per-platform motion segments sampled at the cadence.
  struct Segment {
    Minutes t = 0.0;
    std::vector<Vec2> path;  // one point = stationary
    double speed = 0.0;
  };
  std::map<std::string, std::vector<Segment>> segs;
  auto to_vec = [](const Json& p) { return Vec2{p.at(0).get<double>(), p.at(1).get<double>()}; };
  for (const auto& e : log) {
    const Json& d = e.data;
    if (e.kind == ev::RunStarted && d.contains("platforms")) {
      for (const auto& p : d.at("platforms")) {
        if (p.contains("position")) segs[p.at("id").get<std::string>()].push_back({e.time, {to_vec(p.at("position"))}, 0.0});
      }
    } else if (e.kind == ev::CasevacGranted || e.kind == ev::Arrived ||
               (e.kind == ev::Halted && d.contains("platform"))) {
      segs[d.at("platform").get<std::string>()].push_back({e.time, {to_vec(d.at("position"))}, 0.0});
    } else if (e.kind == ev::Departed) {
      Segment s{e.time, {}, d.at("speed").get<double>()};
      for (const auto& w : d.at("waypoints")) s.path.push_back(to_vec(w));
      segs[d.at("platform").get<std::string>()].push_back(std::move(s));
    } else if (e.kind == ev::PlatformDespawned) {
      segs[d.at("platform").get<std::string>()].push_back({e.time, {}, 0.0});
    }
  }
  const long samples = static_cast<long>(std::floor(h.end / cadence + 1e-9));
  for (long k = 0; k <= samples; ++k) {
    const Minutes t = static_cast<double>(k) * cadence;
    for (const auto& [id, list] : segs) {
      const Segment* cur = nullptr;
      for (const auto& s : list) {
        if (s.t <= t) cur = &s;
        else break;
      }
      if (!cur || cur->path.empty()) continue;
      Vec2 pos = cur->path.front();
      if (cur->path.size() > 1) {
        double left = cur->speed * (t - cur->t) / 60.0;
        pos = cur->path.back();
        for (std::size_t i = 1; i < cur->path.size(); ++i) {
          const double len = distance(cur->path[i - 1], cur->path[i]);
          if (left <= len) {
            pos = len > 0 ? cur->path[i - 1] + (cur->path[i] - cur->path[i - 1]) * (left / len) : cur->path[i];
            break;
          }
          left -= len;
        }
      }
      out.positions.push_back({t, id, pos});
    }
  }
  return out;
}

Json debrief_summary(const std::vector<SimEvent>& log) {
  const RunHeader h = read_header(log);
  const ScoreBoard b = score_screen(log);
  const DelayStats ds = delay_stats(log);
  const EvacStats es = evac_time_stats(log);
  Json delays = Json::array();
  for (const auto& g : ds.groups) {
    Json j = to_json(g.stats);
    j["node"] = g.node;
    j["precedence"] = std::string(to_string(g.precedence));
    j["censored"] = g.censored;
    delays.push_back(j);
  }
  Json evac = Json::array();
  for (const auto& g : es.groups) {
    Json j = to_json(g.stats);
    j["precedence"] = std::string(to_string(g.precedence));
    j["standard"] = g.standard;
    j["compliant"] = g.compliant;
    evac.push_back(j);
  }
  return {{"scoring", {{"mode", std::string(to_string(h.mode.kind))}, {"clamp_floor", h.mode.clamp_floor}}},
          {"run_ended", h.ended},
          {"end_time", h.end},
          {"score", to_json(b)},
          {"delays", delays},
          {"evac_times", evac}};
}

std::map<std::string, std::string> debrief_tables(const std::vector<SimEvent>& log) {
  std::map<std::string, std::string> out;
  const ScoreBoard b = score_screen(log);
  out["score"] = "score,spawned,saves,deaths,alive\n" + fmt(b.score) + "," + std::to_string(b.spawned) + "," +
                 std::to_string(b.saves) + "," + std::to_string(b.deaths) + "," + std::to_string(b.alive) + "\n";

  const DelayStats ds = delay_stats(log);
  std::string rec = "patient,node,precedence,delay,censored\n";
  for (const auto& r : ds.records) {
    rec += std::to_string(r.patient) + "," + r.node + "," + std::string(to_string(r.precedence)) + "," + fmt(r.delay) +
           "," + (r.censored ? "1" : "0") + "\n";
  }
  out["delay_records"] = rec;
  std::string grp = "node,precedence,n,mean,ci_low,ci_high,censored\n";
  for (const auto& g : ds.groups) {
    const auto lo = g.stats.half_width ? std::optional<double>(g.stats.mean - *g.stats.half_width) : std::nullopt;
    const auto hi = g.stats.half_width ? std::optional<double>(g.stats.mean + *g.stats.half_width) : std::nullopt;
    grp += g.node + "," + std::string(to_string(g.precedence)) + "," + std::to_string(g.stats.n) + "," +
           (g.stats.n ? fmt(g.stats.mean) : std::string()) + "," + opt_fmt(lo) + "," + opt_fmt(hi) + "," +
           std::to_string(g.censored) + "\n";
  }
  out["delays"] = grp;

  const EvacStats es = evac_time_stats(log);
  std::string ev = "precedence,standard,n,mean,ci_low,ci_high,compliant\n";
  for (const auto& g : es.groups) {
    const auto lo = g.stats.half_width ? std::optional<double>(g.stats.mean - *g.stats.half_width) : std::nullopt;
    const auto hi = g.stats.half_width ? std::optional<double>(g.stats.mean + *g.stats.half_width) : std::nullopt;
    ev += std::string(to_string(g.precedence)) + "," + fmt(g.standard) + "," + std::to_string(g.stats.n) + "," +
          fmt(g.stats.mean) + "," + opt_fmt(lo) + "," + opt_fmt(hi) + "," + std::to_string(g.compliant) + "\n";
  }
  out["evac_times"] = ev;

  const Timeseries ts = timeseries(log);
  std::string counts = "site,t,count\n";
  for (const auto& [site, series] : ts.counts) {
    for (const auto& p : series) counts += site + "," + fmt(p.t) + "," + std::to_string(p.count) + "\n";
  }
  out["patient_counts"] = counts;
  std::string pos = "t,platform,x,y\n";
  for (const auto& s : ts.positions) pos += fmt(s.t) + "," + s.platform + "," + fmt(s.pos.x) + "," + fmt(s.pos.y) + "\n";
  out["positions"] = pos;
  return out;
}

void write_debrief(const std::vector<SimEvent>& log, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  for (const auto& [name, csv] : debrief_tables(log)) write_file(root / (name + ".csv"), csv);
  write_file(root / "summary.json", debrief_summary(log).dump(2) + "\n");
}

}  // namespace medevac
