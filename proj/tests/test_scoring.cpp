#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "medevac/engine.h"
#include "medevac/scoring.h"
#include "test_support.h"

using namespace medevac;
using fixtures::of_kind;

namespace {

const PrecedenceSpec kUrgent{10.0, 60.0};
const PrecedenceSpec kPriority{8.0, 240.0};
const ScoringMode kLinear{ScoringModeKind::LinearDecay, 0.0};
const ScoringMode kPrinted{ScoringModeKind::AsPrinted, 0.0};

// Hand-built event logs.
class LogBuilder {
 public:
  explicit LogBuilder(const std::string& mode = "linear_decay", double floor = 0.0) {
    add(0.0, "RunStarted",
        {{"precedence", {{"urgent", {{"p_max", 10.0}, {"e_s", 60.0}}}, {"priority", {{"p_max", 8.0}, {"e_s", 240.0}}}}},
         {"scoring", {{"mode", mode}, {"clamp_floor", floor}}},
         {"facilities", Json::array({{{"id", "CCP1"}, {"role", "ccp"}, {"position", {0.0, 0.0}}},
                                     {{"id", "BAS"}, {"role", "role1"}, {"position", {20.0, 0.0}}}})},
         {"platforms", Json::array()}});
  }
  LogBuilder& spawn(PatientId id, Minutes t, const std::string& prec, const std::string& ccp = "CCP1") {
    return add(t, "PatientSpawned", {{"patient", id}, {"t0", t}, {"precedence", prec}, {"ccp", ccp}, {"mascal", false}});
  }
  LogBuilder& load(Minutes t, const std::string& site, std::vector<PatientId> ids) {
    Json ps = Json::array();
    for (auto id : ids) ps.push_back({{"patient", id}});
    return add(t, "Loaded", {{"site", site}, {"platform", "GA-1"}, {"patients", ps}});
  }
  LogBuilder& unload(Minutes t, const std::string& site, const std::string& role, std::vector<PatientId> ids) {
    return add(t, "Unloaded", {{"site", site}, {"role", role}, {"platform", "GA-1"}, {"patients", ids}});
  }
  LogBuilder& treated(Minutes t, PatientId id, const std::string& site) {
    return add(t, "Treated", {{"patient", id}, {"site", site}});
  }
  LogBuilder& died(Minutes t, PatientId id) { return add(t, "Died", {{"patient", id}}); }
  LogBuilder& delivered(Minutes t, PatientId id) { return add(t, "DeliveredRole3", {{"patient", id}, {"site", "R3"}}); }
  LogBuilder& end(Minutes t) { return add(t, "RunEnded", Json::object()); }
  const std::vector<SimEvent>& log() const { return log_; }

 private:
  LogBuilder& add(Minutes t, const std::string& kind, Json data) {
    SimEvent e;
    e.seq = static_cast<long>(log_.size());
    e.tick = static_cast<long>(t * 60.0);
    e.time = t;
    e.kind = kind;
    e.actor = "engine";
    e.data = std::move(data);
    log_.push_back(std::move(e));
    return *this;
  }
  std::vector<SimEvent> log_;
};

void expect_matches_fold(const std::vector<SimEvent>& log) {
  const auto oracle = fixtures::single_pass_fold(log);
  EXPECT_EQ(score_screen(log), oracle.score);
  EXPECT_EQ(delay_stats(log), oracle.delays);
  EXPECT_EQ(evac_time_stats(log), oracle.evac);
}

}  // namespace

TEST(Reward, WorkedValues) {
  EXPECT_EQ(delivery_score(kUrgent, kLinear, 30.0), 5.0);
  EXPECT_EQ(delivery_score(kPriority, kLinear, 240.0), 0.0);
  EXPECT_EQ(delivery_score(kUrgent, kPrinted, 120.0), 5.0);
  EXPECT_EQ(delivery_score(kUrgent, kLinear, 0.0), 10.0);
  Patient dead;
  dead.location = PatientLocation::Dead;
  EXPECT_EQ(patient_score(dead, kUrgent, kLinear), -10.0);
  EXPECT_EQ(kDeathScore, -10.0);
}

TEST(Reward, ClampFloorBoundsLateDeliveries) {
  EXPECT_EQ(delivery_score(kUrgent, kLinear, 120.0), 0.0);
  EXPECT_EQ(delivery_score(kUrgent, ScoringMode{ScoringModeKind::LinearDecay, -5.0}, 120.0), -5.0);
  EXPECT_EQ(delivery_score(kUrgent, ScoringMode{ScoringModeKind::LinearDecay, -50.0}, 120.0), -10.0);
  // As printed, early deliveries go sharply negative without a floor.
  EXPECT_EQ(delivery_score(kUrgent, kPrinted, 10.0), 0.0);
  EXPECT_EQ(delivery_score(kUrgent, ScoringMode{ScoringModeKind::AsPrinted, -1e9}, 10.0), -50.0);
}

TEST(Reward, NonTerminalPatientHasNoScore) {
  Patient p;
  p.t1 = 5.0;
  EXPECT_THROW(patient_score(p, kUrgent, kLinear), std::logic_error);
  p.t2 = 35.0;
  EXPECT_EQ(patient_score(p, kUrgent, kLinear), 10.0 * (1.0 - 35.0 / 60.0));
}

TEST(Reward, LinearDecayIsMonotoneAndBounded) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> dt(0.0, 1000.0), floor(-20.0, 0.0);
  for (int i = 0; i < 10000; ++i) {
    const ScoringMode m{ScoringModeKind::LinearDecay, floor(gen)};
    const double a = dt(gen), b = dt(gen);
    for (const auto& spec : {kUrgent, kPriority}) {
      const double sa = delivery_score(spec, m, a), sb = delivery_score(spec, m, b);
      ASSERT_LE(sa, spec.p_max);
      ASSERT_GE(sa, m.clamp_floor);
      if (a <= b) ASSERT_GE(sa, sb);
    }
  }
}

TEST(Reward, AsPrintedIsMonotoneIncreasingBelowCap) {
  for (double t = 1.0; t < 2000.0; t += 0.5) {
    const double s = delivery_score(kUrgent, kPrinted, t);
    ASSERT_LE(s, kUrgent.p_max);
    ASSERT_LE(delivery_score(kUrgent, kPrinted, t), delivery_score(kUrgent, kPrinted, t + 0.5));
  }
}

TEST(ScoreScreen, CountsFromAHandBuiltLog) {
  LogBuilder b;
  b.spawn(1, 0.0, "urgent").spawn(2, 0.0, "urgent").spawn(3, 0.0, "priority").spawn(4, 10.0, "priority");
  b.load(5.0, "CCP1", {1, 3}).unload(30.0, "R2", "role2", {1}).unload(240.0, "R2", "role2", {3});
  b.died(50.0, 2).delivered(260.0, 3).end(300.0);
  const ScoreBoard s = score_screen(b.log());
  EXPECT_EQ(s.spawned, 4);
  EXPECT_EQ(s.deaths, 1);
  EXPECT_EQ(s.saves, 1);
  EXPECT_EQ(s.alive, 2);
  EXPECT_DOUBLE_EQ(s.score, 5.0 + 0.0 - 10.0);
  expect_matches_fold(b.log());
}

TEST(ScoreScreen, EmptyLogIsAllZero) {
  EXPECT_EQ(score_screen({}), ScoreBoard{});
  EXPECT_TRUE(delay_stats({}).records.empty());
  EXPECT_TRUE(evac_time_stats({}).groups.empty());
  const auto ts = timeseries({});
  EXPECT_TRUE(ts.counts.empty());
  expect_matches_fold({});
}

TEST(ScoreScreen, ModeComesFromTheRunHeader) {
  LogBuilder b("as_printed", 0.0);
  b.spawn(1, 0.0, "urgent").unload(120.0, "R2", "role2", {1});
  EXPECT_DOUBLE_EQ(score_screen(b.log()).score, 5.0);
}

TEST(MeanInterval, ThreeValues) {
  const MeanCI m = mean_ci({10.0, 20.0, 30.0});
  EXPECT_EQ(m.n, 3);
  EXPECT_DOUBLE_EQ(m.mean, 20.0);
  ASSERT_TRUE(m.half_width);
  EXPECT_NEAR(*m.half_width, 1.96 * 10.0 / std::sqrt(3.0), 1e-12);
}

TEST(MeanInterval, SingleValueHasNoInterval) {
  const MeanCI m = mean_ci({42.0});
  EXPECT_EQ(m.mean, 42.0);
  EXPECT_FALSE(m.half_width);
  const Json j = to_json(m);
  EXPECT_TRUE(j.at("ci_low").is_null());
  EXPECT_EQ(mean_ci({}).n, 0);
}

TEST(DelayStatistics, WaitsCloseAtPickupAndCensorAtDeathOrEnd) {
  LogBuilder b;
  b.spawn(1, 0.0, "urgent").spawn(2, 5.0, "urgent").spawn(3, 50.0, "priority");
  b.load(10.0, "CCP1", {1}).died(25.0, 2);
  b.unload(20.0, "BAS", "role1", {1}).treated(35.0, 1, "BAS").load(47.0, "BAS", {1});
  b.end(100.0);
  const DelayStats d = delay_stats(b.log());
  ASSERT_EQ(d.records.size(), 4u);
  EXPECT_EQ(d.records[0], (DelayRecord{1, "CCP1", Precedence::Urgent, 10.0, false}));
  EXPECT_EQ(d.records[1], (DelayRecord{2, "CCP1", Precedence::Urgent, 20.0, true}));
  EXPECT_EQ(d.records[2], (DelayRecord{1, "BAS", Precedence::Urgent, 12.0, false}));
  EXPECT_EQ(d.records[3], (DelayRecord{3, "CCP1", Precedence::Priority, 50.0, true}));
  ASSERT_EQ(d.groups.size(), 3u);
  EXPECT_EQ(d.groups[0].node, "BAS");
  EXPECT_EQ(d.groups[1].node, "CCP1");
  EXPECT_EQ(d.groups[1].precedence, Precedence::Urgent);
  EXPECT_EQ(d.groups[1].stats.n, 1);
  EXPECT_EQ(d.groups[1].censored, 1);
  EXPECT_EQ(d.groups[2].stats.n, 0);
  EXPECT_EQ(d.groups[2].censored, 1);
  expect_matches_fold(b.log());
}

TEST(EvacStatistics, StandardIsInclusive) {
  LogBuilder b;
  b.spawn(1, 0.0, "urgent").spawn(2, 0.0, "urgent").spawn(3, 0.0, "priority");
  b.unload(60.0, "R2", "role2", {1}).unload(61.0, "R2", "role2", {2}).unload(200.0, "R2", "role2", {3});
  const EvacStats s = evac_time_stats(b.log());
  ASSERT_EQ(s.groups.size(), 2u);
  EXPECT_EQ(s.groups[0].precedence, Precedence::Urgent);
  EXPECT_EQ(s.groups[0].compliant, 1);
  EXPECT_EQ(s.groups[0].stats.n, 2);
  EXPECT_DOUBLE_EQ(s.groups[0].stats.mean, 60.5);
  EXPECT_EQ(s.groups[1].standard, 240.0);
  EXPECT_EQ(s.groups[1].compliant, 1);
  expect_matches_fold(b.log());
}

TEST(EvacStatistics, NoDeliveriesNoGroups) {
  LogBuilder b;
  b.spawn(1, 0.0, "urgent").died(30.0, 1);
  EXPECT_TRUE(evac_time_stats(b.log()).groups.empty());
  EXPECT_TRUE(evac_time_stats(b.log()).records.empty());
}

TEST(Timeseries, StepCountsAtCollectionPoint) {
  LogBuilder b;
  b.spawn(1, 1.0, "urgent").spawn(2, 1.0, "priority").load(3.0, "CCP1", {1});
  b.unload(8.0, "BAS", "role1", {1}).load(20.0, "BAS", {1});
  const auto ts = timeseries(b.log());
  const std::vector<CountPoint> ccp{{0.0, 0}, {1.0, 2}, {3.0, 1}};
  EXPECT_EQ(ts.counts.at("CCP1"), ccp);
  const std::vector<CountPoint> bas{{0.0, 0}, {8.0, 1}, {20.0, 0}};
  EXPECT_EQ(ts.counts.at("BAS"), bas);
  EXPECT_THROW(timeseries(b.log(), 0.0), std::invalid_argument);
}

TEST(Timeseries, MascalIsAFifteenPatientStep) {
  Engine e(fixtures::tiny([](Json& j) { j["ccp_streams"][0]["activation_windows"] = Json::array({Json::array({0, 1000})}); }));
  e.step(600);
  Inject m;
  m.kind = InjectKind::Mascal;
  m.ccp = "CCP1";
  m.count = 15;
  ASSERT_TRUE(e.enqueue_inject(m, "instructor").accepted);
  e.step();
  const Minutes at = of_kind(e.events(), ev::WaveSpawned).back().time;
  const auto series = timeseries(e.events()).counts.at("CCP1");
  long before = 0;
  long after = -1;
  for (const auto& p : series) {
    if (p.t < at) before = p.count;
    if (p.t == at) after = p.count;
  }
  EXPECT_EQ(after - before, 15);
}

TEST(Timeseries, CountsNeverNegativeOnRealRuns) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = fixtures::run_all(fixtures::tiny(), seed, "random_legal");
    const auto ts = timeseries(r.engine->events());
    for (const auto& [site, series] : ts.counts) {
      for (std::size_t i = 0; i < series.size(); ++i) {
        ASSERT_GE(series[i].count, 0) << site;
        if (i > 0) ASSERT_GT(series[i].t, series[i - 1].t);
      }
    }
    ASSERT_FALSE(ts.positions.empty());
  }
}

TEST(Timeseries, PositionsFollowTheRoad) {
  auto sc = fixtures::tiny([](Json& j) { j["ccp_streams"][0]["activation_windows"] = Json::array({Json::array({1000, 1001})}); });
  Engine e(sc);
  ASSERT_TRUE(e.enqueue_action(fixtures::act("medic", "GA-1", Verb::Dispatch, "CCP1")).accepted);
  e.step(60 * 30);
  const auto ts = timeseries(e.events(), 5.0);
  // 60 km/h from BAS (20, 0) towards CCP1 (0, 0).
  for (const auto& s : ts.positions) {
    if (s.platform != "GA-1") continue;
    const double expected_x = std::max(0.0, 20.0 - s.t);
    EXPECT_NEAR(s.pos.x, expected_x, 1e-9) << s.t;
    EXPECT_NEAR(s.pos.y, 0.0, 1e-9);
  }
}

TEST(FoldOracle, AgreesOnRealRuns) {
  for (const char* policy : {"idle", "greedy_nearest", "triage_greedy", "random_legal"}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto r = fixtures::run_all(fixtures::tiny(), seed, policy);
      expect_matches_fold(r.engine->events());
    }
  }
  const auto big = fixtures::run_all(fixtures::bundled("storm-surge-lite"), 2, "triage_greedy");
  expect_matches_fold(big.engine->events());
}

TEST(FoldOracle, LiveScoreMatchesLogScore) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = fixtures::run_all(fixtures::tiny(), seed, "greedy_nearest");
    const ScoreBoard live = live_score(r.engine->world(), r.engine->scoring());
    const ScoreBoard logged = score_screen(r.engine->events());
    EXPECT_EQ(live.spawned, logged.spawned);
    EXPECT_EQ(live.deaths, logged.deaths);
    EXPECT_EQ(live.saves, logged.saves);
    EXPECT_NEAR(live.score, logged.score, 1e-9);
    EXPECT_EQ(r.score, logged);
  }
}

TEST(Debrief, TablesAndSummary) {
  const auto r = fixtures::run_all(fixtures::tiny(), 3, "greedy_nearest");
  const auto tables = debrief_tables(r.engine->events());
  for (const char* name : {"score", "delay_records", "delays", "evac_times", "patient_counts", "positions"}) {
    ASSERT_TRUE(tables.count(name)) << name;
    EXPECT_NE(tables.at(name).find('\n'), std::string::npos);
  }
  EXPECT_EQ(tables.at("score").substr(0, tables.at("score").find('\n')), "score,spawned,saves,deaths,alive");
  const Json summary = debrief_summary(r.engine->events());
  EXPECT_TRUE(summary.at("run_ended").get<bool>());
  EXPECT_EQ(summary.at("score"), to_json(score_screen(r.engine->events())));
  EXPECT_EQ(summary.at("scoring").at("mode"), "linear_decay");

  const std::string dir = fixtures::temp_dir("debrief");
  write_debrief(r.engine->events(), dir);
  for (const auto& [name, csv] : tables) EXPECT_EQ(read_text_file(dir + "/" + name + ".csv"), csv);
  EXPECT_EQ(Json::parse(read_text_file(dir + "/summary.json")), summary);
  std::filesystem::remove_all(dir);
}
