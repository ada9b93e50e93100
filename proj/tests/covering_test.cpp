#include "softcover/covering.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "softcover/errors.hpp"
#include "softcover/exponents.hpp"
#include "test_support.hpp"

namespace softcover::covering {
namespace {

using testing::bsc_pair;

// Decodes idx big-endian and multiplies channel entries directly.
std::vector<double> induced_oracle(const measures::JointPair& pair, const Codebook& cb) {
  const std::size_t kv = pair.k_v();
  const std::size_t n = cb.n();
  std::size_t size = 1;
  for (std::size_t i = 0; i < n; ++i) size *= kv;
  std::vector<double> out(size, 0.0);
  for (std::uint64_t m = 0; m < cb.size(); ++m) {
    const auto w = cb.word(m);
    for (std::size_t idx = 0; idx < size; ++idx) {
      std::size_t rest = idx;
      double p = 1.0;
      for (std::size_t i = n; i-- > 0;) {
        p *= pair.channel()(rest % kv, w[i]);
        rest /= kv;
      }
      out[idx] += p / static_cast<double>(cb.size());
    }
  }
  return out;
}

Codebook single_word(std::vector<std::uint32_t> word, std::size_t alphabet) {
  const std::size_t n = word.size();
  return Codebook(n, 0.0, 0, alphabet, std::move(word));
}

TEST(Codebook, SizeRounding) {
  EXPECT_EQ(codebook_size(10, 0.8), 256u);
  EXPECT_EQ(codebook_size(3, 0.5), 3u);  // 2^1.5 = 2.83
  EXPECT_EQ(codebook_size(5, 0.0), 1u);
  EXPECT_THROW(codebook_size(40, 0.8), SizeGuardExceeded);
  EXPECT_THROW(codebook_size(4, -0.1), InvalidArgument);
}

TEST(Codebook, SamplingIsDeterministic) {
  const auto pair = bsc_pair(0.1);
  const auto a = sample_codebook(pair, 10, 0.8, 99);
  const auto b = sample_codebook(pair, 10, 0.8, 99);
  const auto c = sample_codebook(pair, 10, 0.8, 100);
  EXPECT_EQ(a.size(), 256u);
  EXPECT_TRUE(std::equal(a.letters().begin(), a.letters().end(), b.letters().begin()));
  EXPECT_FALSE(std::equal(a.letters().begin(), a.letters().end(), c.letters().begin()));
  // A word depends only on (seed, word index), not on codebook size.
  const auto longer = sample_codebook_of_size(pair, 10, 300, 99);
  EXPECT_TRUE(std::equal(a.word(17).begin(), a.word(17).end(), longer.word(17).begin()));
}

TEST(Codebook, PointMassInput) {
  const measures::JointPair pair(measures::ProbVector::point_mass(3, 0), measures::Channel::identity(3));
  const auto cb = sample_codebook(pair, 6, 0.5, 3);
  for (auto x : cb.letters()) EXPECT_EQ(x, 0u);
}

TEST(Codebook, LetterFrequency) {
  const measures::JointPair pair(measures::ProbVector::from({0.3, 0.7}), measures::Channel::binary_symmetric(0.1));
  std::size_t ones = 0;
  std::size_t total = 0;
  for (std::uint64_t seed = 0; total < 10000; ++seed) {
    const auto cb = sample_codebook(pair, 10, 0.8, seed);
    for (auto x : cb.letters()) {
      ones += x;
      ++total;
    }
  }
  const double sd = std::sqrt(total * 0.7 * 0.3);
  EXPECT_NEAR(static_cast<double>(ones), 0.7 * total, 3 * sd);
}

TEST(Induced, SingleWordIsChannelRow) {
  const auto pair = bsc_pair(0.1);
  const auto sub = induced_distribution(pair, single_word({0}, 2));
  EXPECT_DOUBLE_EQ(sub.mass[0], 0.9);
  EXPECT_DOUBLE_EQ(sub.mass[1], 0.1);
  EXPECT_DOUBLE_EQ(sub.total, 1.0);
}

TEST(Induced, MatchesDirectProductOracle) {
  std::mt19937_64 gen(31);
  for (int t = 0; t < 10; ++t) {
    const auto pair = testing::random_pair(gen, 3, 2 + t % 2);
    const auto cb = sample_codebook(pair, 4, 0.6, gen());
    const auto sub = induced_distribution(pair, cb);
    const auto oracle = induced_oracle(pair, cb);
    ASSERT_EQ(sub.mass.size(), oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_NEAR(sub.mass[i], oracle[i], 1e-14);
    EXPECT_NEAR(sub.total, 1.0, 1e-10);
  }
}

TEST(Induced, CompleteCodebookIsTarget) {
  for (double p : {0.05, 0.1, 0.3}) {
    const auto pair = bsc_pair(p);
    for (std::size_t n = 1; n <= 6; ++n) {
      const auto cb = complete_codebook(2, n);
      EXPECT_NEAR(kl_exact(pair, cb), 0.0, 1e-10);
      EXPECT_NEAR(tv_exact(pair, cb), 0.0, 1e-10);
    }
  }
}

TEST(Induced, SizeGuard) {
  const auto pair = bsc_pair(0.1);
  EXPECT_THROW(induced_distribution(pair, single_word(std::vector<std::uint32_t>(27, 0), 2)),
               SizeGuardExceeded);
  EXPECT_THROW(induced_distribution(testing::identity_pair(3), single_word({0, 1}, 2)), InvalidArgument);
}

TEST(KlExact, KnownValues) {
  // Point mass on one of four outputs against uniform.
  EXPECT_NEAR(kl_exact(testing::identity_pair(2), single_word({0, 1}, 2)), 2.0, 1e-15);
  // One BSC letter: KL((0.9, 0.1) || (0.5, 0.5)) = 1 - h(0.1) bits.
  EXPECT_NEAR(kl_exact(bsc_pair(0.1), single_word({0}, 2)), 0.531004406410719, 1e-12);
  EXPECT_NEAR(tv_exact(bsc_pair(0.1), single_word({0}, 2)), 0.4, 1e-15);
}

TEST(KlExact, RegressionAnchor) {
  const auto pair = bsc_pair(0.1);
  const auto cb = sample_codebook(pair, 8, 0.8, 42);
  EXPECT_EQ(cb.size(), 84u);
  EXPECT_NEAR(kl_exact(pair, cb), 0.32691689155282105, 1e-12);
}

TEST(Split, OneLetterExample) {
  const auto split = typicality_split(bsc_pair(0.1), single_word({0}, 2), 0.1);
  EXPECT_NEAR(split.atypical.total, 0.9, 1e-15);
  EXPECT_NEAR(split.typical.total, 0.1, 1e-15);
  EXPECT_EQ(split.atypical.mass[1], 0.0);
}

TEST(Split, IndependentChannelHasNoAtypicalMass) {
  const auto pair = testing::independent_pair();
  const auto cb = sample_codebook(pair, 6, 0.5, 4);
  const auto split = typicality_split(pair, cb, 0.01);
  EXPECT_EQ(split.atypical.total, 0.0);
  const auto d = jensen_decomposition(pair, cb, 0.01);
  EXPECT_EQ(d.mass_p2, 0.0);
  EXPECT_EQ(d.term_h, 0.0);
  EXPECT_EQ(d.term_2, 0.0);
  EXPECT_NEAR(d.kl_exact, 0.0, 1e-12);
  const auto s = codebook_in_S(pair, cb, 0.01, 0.1, 0.1);
  EXPECT_TRUE(s.in_s());
  EXPECT_NEAR(s.max_ratio1, 1.0, 1e-12);
}

TEST(Split, IdentityTiesStayTypical) {
  // Every pair sits exactly on I: with eps tiny the set must stay typical.
  const auto pair = testing::identity_pair(3);
  const auto cb = sample_codebook(pair, 5, 0.7, 8);
  const auto split = typicality_split(pair, cb, 1e-15);
  EXPECT_EQ(split.atypical.total, 0.0);
}

TEST(DensityRatio, IdentityAndSupport) {
  const auto pair = bsc_pair(0.2);
  SubDistribution target;
  target.alphabet = 2;
  target.n = 3;
  target.mass = measures::tensor_power(pair.q_v(), 3);
  target.total = 1.0;
  for (double r : density_ratio(target, pair).values) EXPECT_NEAR(r, 1.0, 1e-14);

  const measures::JointPair skew(measures::ProbVector::uniform(2),
                                 measures::Channel::from({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}));
  SubDistribution bad;
  bad.alphabet = 3;
  bad.n = 1;
  bad.mass = {0.0, 0.0, 1.0};
  bad.total = 1.0;
  EXPECT_THROW(density_ratio(bad, skew), SupportError);
  bad.mass = {0.5, 0.5, 0.0};
  const auto ok = density_ratio(bad, skew);
  EXPECT_EQ(ok.values[2], 0.0);
}

// ---- properties over sampled codebooks ----

TEST(CoveringProperties, PartitionBoundsAndJensen) {
  std::mt19937_64 gen(32);
  for (int t = 0; t < 60; ++t) {
    const bool random = t % 2 == 1;
    const auto pair = random ? testing::random_pair(gen, 2, 3) : bsc_pair(0.1);
    const std::size_t n = 3 + gen() % 4;
    const double rate = 0.3 + 0.1 * static_cast<double>(gen() % 7);
    const double eps = 0.05 + 0.05 * static_cast<double>(gen() % 4);
    const auto cb = sample_codebook(pair, n, rate, gen());
    const auto induced = induced_distribution(pair, cb);
    const auto split = typicality_split(pair, cb, eps);
    for (std::size_t i = 0; i < induced.mass.size(); ++i) {
      EXPECT_NEAR(split.typical.mass[i] + split.atypical.mass[i], induced.mass[i], 1e-12);
    }
    const double nd = static_cast<double>(n);
    const double mi = measures::mutual_information(pair);
    const double qmin = pair.q_v().min_positive();
    EXPECT_LE(density_ratio(split.typical, pair).max(), std::exp2(nd * (mi + eps)) * (1 + 1e-12));
    EXPECT_LE(density_ratio(split.atypical, pair).max(), std::pow(1.0 / qmin, nd) * (1 + 1e-12));

    const auto d = jensen_decomposition(pair, cb, eps);
    EXPECT_TRUE(d.bound_holds()) << d.kl_exact << " > " << d.bound();
    EXPECT_GE(d.mass_p2, 0.0);
    EXPECT_LE(d.mass_p2, 1.0);
    EXPECT_NEAR(d.kl_exact, kl_exact(pair, cb), 1e-12);
    // Pinsker.
    EXPECT_LE(d.tv_exact, std::sqrt(d.kl_exact * std::numbers::ln2 / 2.0) + 1e-12);

    const auto s = codebook_in_S(pair, cb, eps, 0.05, 0.05);
    EXPECT_TRUE(s.ratio2_ok);
    const auto both = analyze_codebook(pair, cb, eps, 0.05, 0.05);
    EXPECT_EQ(both.decomposition.kl_exact, d.kl_exact);
    EXPECT_EQ(both.decomposition.term_1, d.term_1);
    EXPECT_EQ(both.membership.in_s(), s.in_s());
    EXPECT_EQ(both.membership.max_ratio1, s.max_ratio1);
  }
}

TEST(CoveringProperties, CeilingHoldsInsideGoodSet) {
  const auto pair = bsc_pair(0.1);
  const auto p = exponents::default_parameters(pair, 0.9);
  std::size_t inside = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto cb = sample_codebook(pair, 10, 0.9, seed);
    const auto a = analyze_codebook(pair, cb, p.epsilon, p.beta1, p.beta2);
    if (!a.membership.in_s()) continue;
    ++inside;
    EXPECT_LE(a.decomposition.kl_exact, exponents::deterministic_kl_ceiling(10, p.beta1, p.beta2, 0.5));
  }
  EXPECT_GT(inside, 0u);
}

TEST(CoveringProperties, RatioIsUnbiasedOverSeeds) {
  const auto pair = bsc_pair(0.1);
  const std::size_t n = 4;
  const std::size_t trials = 2000;
  const auto target = measures::tensor_power(pair.q_v(), n);
  std::vector<double> sum(target.size(), 0.0), sum_sq(target.size(), 0.0);
  for (std::uint64_t seed = 0; seed < trials; ++seed) {
    const auto sub = induced_distribution(pair, sample_codebook(pair, n, 0.5, seed));
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double r = sub.mass[i] / target[i];
      sum[i] += r;
      sum_sq[i] += r * r;
    }
  }
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double mean = sum[i] / trials;
    const double var = sum_sq[i] / trials - mean * mean;
    const double se = std::sqrt(var / trials);
    EXPECT_NEAR(mean, 1.0, 5 * se) << "index " << i;
  }
}

}  // namespace
}  // namespace softcover::covering
