#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <random>

#include "slrlab/stats.hpp"

using namespace slrlab;

namespace {

struct Oracle {
  double t, df, p;
};

// Welch statistic from the textbook formulas, p-value from Boost.Math.
Oracle welch_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  auto mean = [](const std::vector<double>& x) {
    double s = 0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
  };
  auto var = [&](const std::vector<double>& x) {
    const double m = mean(x);
    double s = 0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
  };
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double sa = var(a) / na, sb = var(b) / nb;
  const double t = (mean(a) - mean(b)) / std::sqrt(sa + sb);
  const double df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1) + sb * sb / (nb - 1));
  boost::math::students_t dist(df);
  const double p = 2 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
  return {t, df, p};
}

RunSet small_runset(const SFSpec& sf, std::uint64_t master, std::size_t n = 4) {
  const auto p = make_quadratic(5, 10.0, 0.1, 0);
  RunOptions opt;
  opt.iterations = 200;
  opt.eval_every = 10;
  return run_multi_seed(p, {StepSizeSchedule::Family::InverseK, 0.1}, sf, opt, n, master, 3);
}

}  // namespace

TEST(TDist, KnownValues) {
  EXPECT_EQ(t_two_sided_p(0.0, 5.0), 1.0);
  EXPECT_EQ(t_two_sided_p(INFINITY, 5.0), 0.0);
  // two-sided 5% critical value of t with 10 df
  EXPECT_NEAR(t_two_sided_p(2.228138851986273, 10.0), 0.05, 1e-12);
  // df = 1 is Cauchy: p = 1 - 2 atan(|t|) / pi
  for (double t : {0.3, 1.0, 7.0}) EXPECT_NEAR(t_two_sided_p(t, 1.0), 1 - 2 * std::atan(t) / M_PI, 1e-13);
  EXPECT_THROW(t_two_sided_p(1.0, 0.0), DomainError);
  EXPECT_NEAR(t_cdf(-1.0, 3.0) + t_cdf(1.0, 3.0), 1.0, 1e-15);
}

TEST(TDist, MatchesBoostAndIsMonotone) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> df_d(0.5, 200.0), t_d(0.0, 12.0);
  for (int i = 0; i < 500; ++i) {
    const double df = df_d(gen), t = t_d(gen);
    boost::math::students_t dist(df);
    const double ref = 2 * boost::math::cdf(boost::math::complement(dist, t));
    EXPECT_NEAR(t_two_sided_p(t, df), ref, 1e-10 * std::max(1.0, ref)) << "t=" << t << " df=" << df;
  }
  double prev = 1.0;
  for (double t = 0.05; t < 20; t += 0.05) {
    const double p = t_two_sided_p(t, 7.5);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(Welch, WorkedExample) {
  const std::vector<double> a{1, 2, 3}, b{2, 3, 4};
  const auto r = welch_t(a, b);
  EXPECT_NEAR(r.t, -1.2247, 1e-3);
  EXPECT_NEAR(r.df, 4.0, 1e-12);
  EXPECT_NEAR(r.p, 0.2878, 1e-3);
  const auto o = welch_oracle(a, b);
  EXPECT_NEAR(r.t, o.t, 1e-12);
  EXPECT_NEAR(r.p, o.p, 1e-10);
}

TEST(Welch, IdenticalSymmetricAndDegenerate) {
  const std::vector<double> a{1, 2, 3};
  const auto same = welch_t(a, a);
  EXPECT_EQ(same.t, 0.0);
  EXPECT_EQ(same.p, 1.0);
  const std::vector<double> b{0.5, 4, 9, 1};
  const auto ab = welch_t(a, b), ba = welch_t(b, a);
  EXPECT_EQ(ab.t, -ba.t);
  EXPECT_EQ(ab.p, ba.p);
  const auto d = welch_t(std::vector<double>{2, 2}, std::vector<double>{3, 3, 3});
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.p, 0.0);
  const auto e = welch_t(std::vector<double>{2, 2}, std::vector<double>{2, 2});
  EXPECT_EQ(e.p, 1.0);
  EXPECT_THROW(welch_t(std::vector<double>{1}, a), ValidationError);
}

TEST(Welch, AgreesWithOracleOnRandomPairs) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> n(0, 1);
  std::uniform_int_distribution<int> size(2, 50);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> a(size(gen)), b(size(gen));
    const double shift = n(gen), scale = std::exp(n(gen));
    for (auto& v : a) v = n(gen);
    for (auto& v : b) v = shift + scale * n(gen);
    const auto r = welch_t(a, b);
    const auto o = welch_oracle(a, b);
    EXPECT_NEAR(r.t, o.t, 1e-10 * std::max(1.0, std::fabs(o.t)));
    EXPECT_NEAR(r.df, o.df, 1e-10 * std::max(1.0, o.df));
    EXPECT_NEAR(r.p, o.p, 1e-10);
  }
}

TEST(Bonferroni, Examples) {
  EXPECT_EQ(bonferroni(std::vector<double>{0.01, 0.04, 0.2}, 0.05), (std::vector<bool>{true, false, false}));
  EXPECT_EQ(bonferroni(std::vector<double>{0.05}, 0.05), (std::vector<bool>{true}));
  EXPECT_EQ(bonferroni(std::vector<double>{1, 1, 1}, 0.05), (std::vector<bool>{false, false, false}));
  EXPECT_THROW(bonferroni(std::vector<double>{}, 0.05), ValidationError);
  EXPECT_THROW(bonferroni(std::vector<double>{0.1}, 1.0), ValidationError);
  EXPECT_THROW(bonferroni(std::vector<double>{1.5}, 0.05), ValidationError);
}

TEST(Checkpoints, AutoLadder) {
  const auto c = auto_checkpoints(10000, 10);
  EXPECT_EQ(c.size(), 10u);
  EXPECT_EQ(c.front(), 10u);
  EXPECT_EQ(c.back(), 10000u);
  for (std::size_t i = 1; i < c.size(); ++i) {
    EXPECT_GT(c[i], c[i - 1]);
    EXPECT_EQ(c[i] % 10, 0u);
  }
}

TEST(MultiSeed, DeterministicAndThreadIndependent) {
  const auto sf = SFSpec::uniform_root(0.3, 0.8);
  const auto a = small_runset(sf, 11);
  const auto b = small_runset(sf, 11);
  EXPECT_EQ(a.seeds, b.seeds);
  EXPECT_EQ(a.trajectories, b.trajectories);
  const auto p = make_quadratic(5, 10.0, 0.1, 0);
  RunOptions opt;
  opt.iterations = 200;
  const auto serial = run_multi_seed(p, {StepSizeSchedule::Family::InverseK, 0.1}, sf, opt, 4, 11, 1);
  EXPECT_EQ(serial.trajectories, a.trajectories);
  EXPECT_THROW(small_runset(sf, 1, 1), ValidationError);
  EXPECT_EQ(kDefaultSeeds, 40u);
}

TEST(MultiSeed, DistinctSeedsGiveDistinctFactors) {
  const auto rs = small_runset(SFSpec::uniform_root(0.3, 0.8), 5, 6);
  for (std::size_t i = 0; i < rs.seeds.size(); ++i) {
    for (std::size_t j = i + 1; j < rs.seeds.size(); ++j) {
      EXPECT_NE(rs.seeds[i], rs.seeds[j]);
      const std::vector<double> ui(rs.trajectories[i].u_series.begin(), rs.trajectories[i].u_series.begin() + 10);
      const std::vector<double> uj(rs.trajectories[j].u_series.begin(), rs.trajectories[j].u_series.begin() + 10);
      EXPECT_NE(ui, uj);
    }
  }
}

TEST(Compare, IdenticalRunSetsAreNeverSignificant) {
  const auto a = small_runset(SFSpec::uniform_root(0.3, 0.8), 2);
  const std::vector<std::size_t> ks{10, 50, 200};
  const auto rep = compare(a, a, Metric::MinGradSq, ks);
  ASSERT_EQ(rep.rows.size(), 3u);
  for (const auto& row : rep.rows) {
    EXPECT_EQ(row.p, 1.0);
    EXPECT_FALSE(row.significant);
    EXPECT_EQ(row.wins_a + row.wins_b, 0u);
  }
  EXPECT_EQ(rep.method, "welch");
  EXPECT_EQ(rep.correction, "bonferroni");
}

TEST(Compare, PairedReportSemantics) {
  const auto a = small_runset(SFSpec::uniform_root(0.3, 0.8), 2, 6);
  const auto b = small_runset(SFSpec::constant(1.0), 2, 6);
  EXPECT_EQ(paired_stream_matches(a, b), 6u);
  const std::vector<std::size_t> one{200};
  const auto rep = compare(a, b, Metric::Loss, one, 0.05);
  const auto& row = rep.rows.front();
  EXPECT_EQ(row.significant, row.p <= 0.05);
  EXPECT_EQ(row.n_a, 6u);
  EXPECT_LE(row.wins_a + row.wins_b, 6u);
  const std::vector<std::size_t> ks = auto_checkpoints(200, 10);
  const auto full = compare(a, b, Metric::MinGradSq, ks, 0.05);
  for (const auto& r : full.rows) {
    EXPECT_GE(r.p, 0.0);
    EXPECT_LE(r.p, 1.0);
    if (r.significant) {
      EXPECT_LE(r.p, 0.05 / static_cast<double>(ks.size()));
    }
  }
}

TEST(Compare, RejectsMismatches) {
  const auto a = small_runset(SFSpec::uniform_root(0.3, 0.8), 2);
  const auto b = small_runset(SFSpec::constant(1.0), 3);
  const std::vector<std::size_t> ks{10};
  EXPECT_THROW(compare(a, b, Metric::Loss, ks), ValidationError);
  EXPECT_NO_THROW(compare(a, b, Metric::Loss, ks, 0.05, false));
  const std::vector<std::size_t> bad{15};
  EXPECT_THROW(compare(a, a, Metric::Loss, bad), ValidationError);
}

TEST(Compare, TruncatedRunsAreExcludedAndCounted) {
  auto a = small_runset(SFSpec::uniform_root(0.3, 0.8), 2, 5);
  a.trajectories[0].truncated = true;
  const std::vector<std::size_t> ks{100};
  const auto rep = compare(a, a, Metric::Loss, ks);
  EXPECT_EQ(rep.excluded_a, 1u);
  EXPECT_EQ(rep.rows.front().n_a, 4u);
}
