#include <gtest/gtest.h>

#include <random>

#include "test_support.h"

using namespace medevac;
using medevac::fixtures::tiny;
using medevac::fixtures::tiny_json;

namespace {

ScenarioError load_error(const std::string& text) {
  try {
    load_scenario(text);
  } catch (const ScenarioError& e) {
    return e;
  }
  ADD_FAILURE() << "document loaded without error";
  return ScenarioError(ScenarioError::Kind::Parse, "", "");
}

}  // namespace

TEST(ScenarioLoad, MinimalWorldIsValid) {
  auto sc = tiny([](Json& j) {
    j["platforms"] = Json::array({j["platforms"][0]});
    j["roles"][1]["owned_platforms"] = Json::array();
    j["casevac"] = {{"spec", ""}, {"staging", ""}, {"window_min", 60}};
  });
  EXPECT_EQ(sc->facilities.size(), 4u);
  EXPECT_EQ(sc->platforms.size(), 1u);
  EXPECT_TRUE(validate_scenario(*sc).empty());
}

TEST(ScenarioLoad, PlatformAtMissingFacilityIsDangling) {
  Json j = tiny_json();
  j["platforms"][0]["start"] = "NOWHERE";
  const ScenarioError e = load_error(j.dump());
  EXPECT_EQ(e.kind(), ScenarioError::Kind::DanglingReference);
  EXPECT_EQ(e.field(), "platforms[0].start");
}

TEST(ScenarioLoad, SyntaxErrorReportsLine) {
  const ScenarioError e = load_error("{\n  \"schema\": \"medevac-scenario/1\",\n  \"name\": oops\n}");
  EXPECT_EQ(e.kind(), ScenarioError::Kind::Parse);
  EXPECT_EQ(e.line(), 3);
}

TEST(ScenarioLoad, UnknownFieldIsNamed) {
  Json j = tiny_json();
  j["rules"]["coffee_break_min"] = 5;
  const ScenarioError e = load_error(j.dump());
  EXPECT_EQ(e.field(), "rules.coffee_break_min");
}

TEST(ScenarioLoad, StormSurgeLiteTopology) {
  auto sc = fixtures::bundled("storm-surge-lite");
  int ccp = 0, role1 = 0, role2_ships = 0, role3_ships = 0;
  for (const auto& f : sc->facilities) {
    const MapNode* n = sc->map.find_node(f.node);
    ASSERT_NE(n, nullptr);
    if (f.role == FacilityRole::CCP) ++ccp;
    if (f.role == FacilityRole::Role1) ++role1;
    if (f.role == FacilityRole::Role2 && f.mobile) ++role2_ships;
    if (f.role == FacilityRole::Role3 && n->kind == NodeKind::Water) ++role3_ships;
  }
  EXPECT_EQ(ccp, 7);
  EXPECT_EQ(role1, 3);
  EXPECT_EQ(role2_ships, 2);
  EXPECT_EQ(role3_ships, 1);
  EXPECT_TRUE(validate_scenario(*sc).empty());
  EXPECT_TRUE(validate_scenario(*fixtures::bundled("eastern-crucible-lite")).empty());
}

TEST(ScenarioLoad, PrecedenceDefaultsWhenOmitted) {
  auto sc = tiny([](Json& j) { j.erase("precedence"); });
  EXPECT_EQ(sc->precedence.urgent.p_max, 10.0);
  EXPECT_EQ(sc->precedence.urgent.e_s, 60.0);
  EXPECT_EQ(sc->precedence.priority.p_max, 8.0);
  EXPECT_EQ(sc->precedence.priority.e_s, 240.0);
}

TEST(ScenarioLoad, DefaultCompressionSpansSixToEightHoursPerRealHour) {
  for (const char* name : {"storm-surge-lite", "eastern-crucible-lite"}) {
    const double game_hours_per_real_hour = fixtures::bundled(name)->time_compression * 3600.0 / 60.0;
    EXPECT_GE(game_hours_per_real_hour, 6.0) << name;
    EXPECT_LE(game_hours_per_real_hour, 8.0) << name;
  }
}

TEST(ScenarioValidate, UrgentFractionOutOfRange) {
  Scenario s = *tiny();
  s.ccp_streams[0].urgent_fraction = 1.5;
  const auto v = validate_scenario(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].field, "ccp_streams[0].urgent_fraction");
}

TEST(ScenarioValidate, PlatformOwnedByTwoRoles) {
  Scenario s = *tiny();
  s.roles[1].owned_platforms.push_back("GA-1");
  const auto v = validate_scenario(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].message.find("more than one role"), std::string::npos);
}

TEST(ScenarioValidate, RoadIntoWaterAndShortEdges) {
  Scenario s = *tiny();
  s.map.roads.push_back({"jct", "sea", 40.0, true});
  s.map.roads.push_back({"ccp", "bas", 5.0, true});
  s.map.reindex();
  const auto v = validate_scenario(s);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].field, "map.roads[4]");
  EXPECT_EQ(v[1].field, "map.roads[5].length_km");
}

TEST(ScenarioValidate, AcceptedDocumentsValidateClean) {
  for (const char* name : {"storm-surge-lite", "eastern-crucible-lite"}) {
    EXPECT_TRUE(validate_scenario(*fixtures::bundled(name)).empty()) << name;
  }
  EXPECT_TRUE(validate_scenario(*tiny()).empty());
}

TEST(ScenarioRoundTrip, BundledFixtures) {
  for (const char* name : {"storm-surge-lite", "eastern-crucible-lite"}) {
    const auto sc = fixtures::bundled(name);
    const Scenario again = load_scenario(serialize_scenario(*sc));
    EXPECT_EQ(again, *sc) << name;
    EXPECT_EQ(scenario_fingerprint(again), scenario_fingerprint(*sc));
  }
}

TEST(ScenarioRoundTrip, RandomValidVariations) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    auto sc = tiny([&](Json& j) {
      auto& s = j["ccp_streams"][0];
      s["mean_wave_interval_min"] = 1.0 + 100.0 * unit(gen);
      s["mean_wave_size"] = 0.1 + 9.0 * unit(gen);
      s["rate_multiplier"] = 0.25 + 4.0 * unit(gen);
      s["urgent_fraction"] = unit(gen);
      s["litter_fraction"] = unit(gen);
      const double a = 300.0 * unit(gen);
      s["activation_windows"] = Json::array({Json::array({a, a + 1.0 + 100.0 * unit(gen)})});
      j["scoring"]["mode"] = unit(gen) < 0.5 ? "linear_decay" : "as_printed";
      j["scoring"]["clamp_floor"] = -5.0 * unit(gen);
      j["observation"]["radius_km"] = 1.0 + 50.0 * unit(gen);
      j["day_night"]["night_visibility"] = 0.05 + 0.95 * unit(gen);
      j["tick_seconds"] = std::vector<int>{1, 2, 3, 5, 6, 10}[i % 6];
    });
    const Scenario again = load_scenario(serialize_scenario(*sc));
    ASSERT_EQ(again, *sc) << "variation " << i;
    ASSERT_TRUE(validate_scenario(again).empty());
  }
}

TEST(ScenarioEnums, NamesRoundTrip) {
  for (auto p : {Precedence::Urgent, Precedence::Priority}) EXPECT_EQ(parse_precedence(to_string(p)), p);
  for (auto r : {FacilityRole::CCP, FacilityRole::Role1, FacilityRole::Role2, FacilityRole::Role3, FacilityRole::AXP,
                 FacilityRole::HLZ}) {
    EXPECT_EQ(parse_facility_role(to_string(r)), r);
  }
  for (auto c : {PlatformClass::GroundVehicle, PlatformClass::RotaryWing, PlatformClass::TiltRotor}) {
    EXPECT_EQ(parse_platform_class(to_string(c)), c);
  }
  EXPECT_FALSE(parse_scoring_mode("quadratic"));
}

TEST(PlatformSpec, ConvertedSeatBudget) {
  const auto sc = fixtures::bundled("storm-surge-lite");
  const PlatformSpec* ga = sc->find_spec("ground-ambulance");
  ASSERT_NE(ga, nullptr);
  EXPECT_EQ(ga->litter_capacity, 4);
  EXPECT_EQ(ga->ambulatory_capacity, 8);
  EXPECT_EQ(ga->conversion, 2.0);
}
