#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "medevac/casualty.h"
#include "test_support.h"

using namespace medevac;

namespace {

const MortalityParams kStd = MortalityParams::from_standards(60.0, 240.0);

CasualtyStreamParams stream(double interval, double size, double rate = 1.0) {
  CasualtyStreamParams s;
  s.ccp = "CCP1";
  s.mean_wave_interval = interval;
  s.mean_wave_size = size;
  s.rate_multiplier = rate;
  s.urgent_fraction = 0.4;
  s.litter_fraction = 0.3;
  return s;
}

Patient urgent(DeathTimes d, Minutes t0 = 0.0) {
  Patient p;
  p.precedence = Precedence::Urgent;
  p.t0 = t0;
  p.death = d;
  return p;
}

}  // namespace

TEST(MortalityRates, DerivedFromStandards) {
  EXPECT_EQ(kStd.lambda1, -std::log(0.8) / 60.0);
  EXPECT_EQ(kStd.lambda2, -std::log(0.8) / 240.0);
  EXPECT_GT(kStd.lambda1, kStd.lambda2);
}

TEST(SampleDeathTimes, HandValues) {
  const DeathTimes a = sample_death_times(kStd, 0.8);
  EXPECT_NEAR(a.t_death1, 60.0, 1e-9);
  EXPECT_NEAR(a.t_death2, 240.0, 1e-9);
  const DeathTimes b = sample_death_times(kStd, 0.64);
  EXPECT_NEAR(b.t_death1, 120.0, 1e-9);
  EXPECT_NEAR(b.t_death2, 480.0, 1e-9);
  const DeathTimes c = sample_death_times(kStd, std::nextafter(1.0, 0.0));
  EXPECT_LT(c.t_death1, 1e-12);
  EXPECT_LT(c.t_death2, 1e-12);
}

TEST(SampleDeathTimes, RejectsClosedInterval) {
  EXPECT_THROW(sample_death_times(kStd, 0.0), std::domain_error);
  EXPECT_THROW(sample_death_times(kStd, 1.0), std::domain_error);
  EXPECT_THROW(sample_death_times(kStd, -0.2), std::domain_error);
  EXPECT_THROW(sample_death_times(kStd, std::nan("")), std::domain_error);
}

TEST(SampleDeathTimes, SingleDrawCorrelation) {
  RngStream rng(3, "mortality-test");
  for (int i = 0; i < 10000; ++i) {
    const DeathTimes d = sample_death_times(kStd, rng.uniform01());
    ASSERT_EQ(d.t_death2 / d.t_death1, 240.0 / 60.0);
  }
}

TEST(SampleDeathTimes, GoldenHourFraction) {
  RngStream rng(17, "golden-hour");
  long inside = 0;
  const long n = 100000;
  for (long i = 0; i < n; ++i) inside += sample_death_times(kStd, rng.uniform01()).t_death1 <= 60.0;
  const double frac = static_cast<double>(inside) / n;
  EXPECT_NEAR(frac, 0.2, 0.005);
}

TEST(CheckMortality, DiesBeforeRole1) {
  const Patient p = urgent({60.0, 240.0}, 5.0);
  const MortalityOutcome o = check_mortality(p, 5.0 + 61.0);
  EXPECT_EQ(o.status, MortalityOutcome::Status::DiedPreRole1);
  EXPECT_DOUBLE_EQ(o.at, 65.0);
}

TEST(CheckMortality, SecondClockStartsAtRole1) {
  Patient p = urgent({60.0, 240.0});
  p.t1 = 30.0;
  EXPECT_EQ(check_mortality(p, 269.0).status, MortalityOutcome::Status::Alive);
  const MortalityOutcome o = check_mortality(p, 271.0);
  EXPECT_EQ(o.status, MortalityOutcome::Status::DiedPreRole2);
  EXPECT_DOUBLE_EQ(o.at, 270.0);
}

TEST(CheckMortality, Role2IsSafe) {
  Patient p = urgent({1.0, 4.0});
  p.t1 = 0.5;
  p.t2 = 3.0;
  EXPECT_EQ(check_mortality(p, 1e6).status, MortalityOutcome::Status::SurvivedToRole2);
}

TEST(CheckMortality, PriorityIsAContractViolation) {
  Patient p;
  p.precedence = Precedence::Priority;
  EXPECT_THROW(check_mortality(p, 10.0), std::logic_error);
}

TEST(CheckMortality, MonotoneOverTime) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(1e-6, 1.0 - 1e-6);
  for (int i = 0; i < 2000; ++i) {
    Patient p = urgent(sample_death_times(kStd, u(gen)), 0.0);
    if (i % 3 == 1) p.t1 = 200.0 * u(gen);
    if (i % 3 == 2) {
      p.t1 = 100.0 * u(gen);
      p.t2 = *p.t1 + 100.0 * u(gen);
    }
    bool dead = false, survived = false;
    std::optional<Minutes> at;
    for (Minutes t = 0.0; t < 3000.0; t += 7.5) {
      const MortalityOutcome o = check_mortality(p, t);
      if (dead) {
        ASSERT_TRUE(o.died());
        ASSERT_EQ(o.at, *at);
      }
      if (survived) ASSERT_EQ(o.status, MortalityOutcome::Status::SurvivedToRole2);
      if (o.died()) {
        dead = true;
        at = o.at;
      }
      survived = o.status == MortalityOutcome::Status::SurvivedToRole2;
    }
  }
}

TEST(Waves, GapAndSizeMeans) {
  CasualtyRng rng(1, "CCP1");
  const auto s = stream(40.0, 3.0);
  double gaps = 0.0, sizes = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    gaps += draw_wave_gap(s, rng.waves);
    sizes += static_cast<double>(draw_wave(s, kStd, rng, 0.0).raw_size);
  }
  EXPECT_NEAR(gaps / n, 40.0, 40.0 * 0.02);
  EXPECT_NEAR(sizes / n, 3.0, 3.0 * 0.02);
}

TEST(Waves, RateMultiplierHalvesGap) {
  auto mean_gap = [](double rate) {
    CasualtyRng rng(2, "CCP1");
    const auto s = stream(30.0, 2.0, rate);
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) sum += draw_wave_gap(s, rng.waves);
    return sum / 10000.0;
  };
  EXPECT_NEAR(mean_gap(2.0) / mean_gap(1.0), 0.5, 0.5 * 0.02 * 2);
}

TEST(Waves, PoissonSizeAgainstDirectSampling) {
  CasualtyRng rng(4, "CCP1");
  const auto s = stream(10.0, 5.0);
  // Oracle: the standard library's Poisson sampler on its own engine.
  std::mt19937_64 gen(99);
  std::poisson_distribution<long> oracle(5.0);
  double ours = 0.0, theirs = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Wave w = draw_wave(s, kStd, rng, 0.0);
    ours += static_cast<double>(w.raw_size);
    theirs += static_cast<double>(oracle(gen));
    ASSERT_EQ(static_cast<long>(w.patients.size()), std::max(1L, w.raw_size));
  }
  EXPECT_GE(ours / n, 4.9);
  EXPECT_LE(ours / n, 5.1);
  EXPECT_NEAR(ours / n, theirs / n, 0.05);
}

TEST(Waves, LargeMeanUsesTheSameDistribution) {
  RngStream rng(6, "poisson");
  double sum = 0.0, sq = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(rng.poisson(45.0));
    sum += k;
    sq += k * k;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 45.0, 0.45);
  EXPECT_NEAR(sq / n - mean * mean, 45.0, 45.0 * 0.05);
}

TEST(Waves, NoUrgentMeansNoDeathTimes) {
  CasualtyRng rng(5, "CCP1");
  auto s = stream(10.0, 4.0);
  s.urgent_fraction = 0.0;
  for (int i = 0; i < 1000; ++i) {
    for (const auto& p : draw_wave(s, kStd, rng, 1.0).patients) {
      ASSERT_EQ(p.precedence, Precedence::Priority);
      ASSERT_FALSE(p.death);
    }
  }
}

TEST(Waves, UrgentCarryDeathTimesAndT0IsWaveTime) {
  CasualtyRng rng(5, "CCP1");
  const auto s = stream(10.0, 4.0);
  for (int i = 0; i < 500; ++i) {
    const Wave w = draw_wave(s, kStd, rng, 12.5);
    for (const auto& p : w.patients) {
      ASSERT_EQ(p.t0, 12.5);
      ASSERT_EQ(p.death.has_value(), p.precedence == Precedence::Urgent);
    }
  }
}

TEST(Waves, MixFractions) {
  CasualtyRng rng(7, "CCP1");
  const auto s = stream(10.0, 3.0);
  long n = 0, urgent_n = 0, litter_n = 0;
  for (int i = 0; i < 20000; ++i) {
    for (const auto& p : draw_wave(s, kStd, rng, 0.0).patients) {
      ++n;
      urgent_n += p.precedence == Precedence::Urgent;
      litter_n += p.kind == PatientKind::Litter;
    }
  }
  EXPECT_NEAR(static_cast<double>(urgent_n) / n, 0.4, 0.01);
  EXPECT_NEAR(static_cast<double>(litter_n) / n, 0.3, 0.01);
}

TEST(Waves, InactiveCcpYieldsNoWave) {
  auto s = stream(10.0, 2.0);
  s.activation_windows = {{100.0, 200.0}};
  CasualtyRng rng(1, "CCP1");
  EXPECT_FALSE(next_wave(s, kStd, rng, 50.0));
  EXPECT_FALSE(next_wave(s, kStd, rng, 250.0));
  const auto w = next_wave(s, kStd, rng, 150.0);
  ASSERT_TRUE(w);
  EXPECT_GT(w->time, 150.0);
}

TEST(Waves, SameSeedSameSequence) {
  const auto s = stream(20.0, 2.5);
  CasualtyRng a(42, "CCP3"), b(42, "CCP3"), other(42, "CCP4");
  bool differs = false;
  Minutes ta = 0.0, tb = 0.0, to = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto wa = next_wave(s, kStd, a, ta);
    const auto wb = next_wave(s, kStd, b, tb);
    const auto wo = next_wave(s, kStd, other, to);
    ASSERT_TRUE(wa && wb && wo);
    ASSERT_EQ(wa->time, wb->time);
    ASSERT_EQ(wa->raw_size, wb->raw_size);
    ASSERT_EQ(wa->patients.size(), wb->patients.size());
    for (std::size_t k = 0; k < wa->patients.size(); ++k) {
      ASSERT_EQ(wa->patients[k].precedence, wb->patients[k].precedence);
      ASSERT_EQ(wa->patients[k].kind, wb->patients[k].kind);
      ASSERT_EQ(wa->patients[k].death, wb->patients[k].death);
    }
    differs |= wa->time != wo->time;
    ta = wa->time;
    tb = wb->time;
    to = wo->time;
  }
  EXPECT_TRUE(differs);
}

TEST(Mascal, BurstSizes) {
  const auto s = stream(10.0, 2.0);
  CasualtyRng rng(9, "CCP7", "mascal");
  const MascalResult fifteen = mascal_burst(s, kStd, true, 15, rng, 33.0);
  ASSERT_TRUE(fifteen.verdict);
  ASSERT_EQ(fifteen.patients.size(), 15u);
  for (const auto& p : fifteen.patients) EXPECT_EQ(p.t0, 33.0);
  EXPECT_EQ(mascal_burst(s, kStd, true, 1, rng, 33.0).patients.size(), 1u);
  const MascalResult zero = mascal_burst(s, kStd, true, 0, rng, 33.0);
  EXPECT_FALSE(zero.verdict);
  EXPECT_TRUE(zero.patients.empty());
  const MascalResult off = mascal_burst(s, kStd, false, 5, rng, 33.0);
  EXPECT_FALSE(off.verdict);
  EXPECT_FALSE(off.verdict.reason.empty());
}

TEST(RngStreams, KeyedByPurposeAndEntity) {
  RngStream a(1, "ccp", "CCP1"), b(1, "ccp", "CCP1"), c(1, "ccp", "CCP2"), d(2, "ccp", "CCP1");
  const double va = a.uniform01();
  EXPECT_EQ(va, b.uniform01());
  EXPECT_NE(va, c.uniform01());
  EXPECT_NE(va, d.uniform01());
  RngStream e(1, "ccp", "CCP1");
  e.uniform01();
  const std::string saved = e.state();
  const double next = e.uniform01();
  RngStream f;
  f.set_state(saved);
  EXPECT_EQ(f.uniform01(), next);
}

TEST(RngStreams, Uniform01IsOpen) {
  RngStream r(0, "edge");
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform01();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}
