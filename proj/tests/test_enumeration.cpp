#include <gtest/gtest.h>

#include <algorithm>

#include "mixwalk/enumeration.hpp"

using namespace mixwalk;

namespace {

const Partition kM11({1, 1});
const Partition kM22({2, 2});

Rational q(int a, int b) { return Rational(a) / b; }

}  // namespace

TEST(ExactDistribution, HorizonZeroIsPointMass) {
  auto d = exact_distribution(kM22, Environment::empty(), 0);
  ASSERT_EQ(d.entries.size(), 1u);
  EXPECT_EQ(d.probability({0, 0, 0, 0}), 1);
}

// Hand count for M(1,1), n=2: step 1 is horizontal (x = +-1, fresh), step 2
// leaves a fresh site horizontally again.
TEST(ExactDistribution, M11TwoSteps) {
  auto d = exact_distribution(kM11, Environment::empty(), 2);
  EXPECT_EQ(d.probability({0, 0}), q(1, 2));
  EXPECT_EQ(d.probability({2, 0}), q(1, 4));
  EXPECT_EQ(d.probability({-2, 0}), q(1, 4));
  EXPECT_EQ(d.entries.size(), 3u);
}

TEST(ExactDistribution, M22TwoStepsReturnProbability) {
  auto d = exact_distribution(kM22, Environment::empty(), 2);
  EXPECT_EQ(d.probability({0, 0, 0, 0}), q(1, 4));
  EXPECT_EQ(d.probability({1, 1, 0, 0}), q(1, 8));
  EXPECT_EQ(d.probability({0, 0, 1, 0}), 0);
}

TEST(ExactDistribution, M11ThreeStepsFromRevisit) {
  // After +-1 and back the origin has count 2, so the third step is
  // vertical; (1,0) is only reached by 0,1,2,1.
  auto d = exact_distribution(kM11, Environment::empty(), 3);
  EXPECT_EQ(d.probability({0, 1}), q(1, 4));
  EXPECT_EQ(d.probability({0, -1}), q(1, 4));
  EXPECT_EQ(d.probability({3, 0}), q(1, 8));
  EXPECT_EQ(d.probability({1, 0}), q(1, 8));
  EXPECT_EQ(d.total(), 1);
}

TEST(ExactDistribution, SumsToOneAndRespectsParity) {
  for (const auto& parts : std::vector<std::vector<int>>{{1, 1}, {2, 2}, {1, 2}, {1, 1, 1}, {3}}) {
    Partition p(parts);
    for (std::uint64_t n = 1; n <= 6; ++n) {
      auto d = exact_distribution(p, Environment::empty(), n);
      EXPECT_EQ(d.total(), 1) << p.label() << " n=" << n;
      for (const auto& [site, prob] : d.entries) {
        long s = 0;
        for (int c : site) s += std::abs(c);
        EXPECT_EQ(s % 2, static_cast<long>(n % 2));
      }
    }
  }
}

TEST(ExactDistribution, SymmetricUnderSignFlipAndBlockPermutation) {
  auto d = exact_distribution(kM22, Environment::empty(), 6);
  for (const auto& [site, prob] : d.entries) {
    Coords flipped = site;
    flipped[2] = -flipped[2];
    EXPECT_EQ(d.probability(flipped), prob);
    Coords swapped = site;
    std::swap(swapped[0], swapped[1]);
    EXPECT_EQ(d.probability(swapped), prob);
  }
}

TEST(ExactDistribution, LineEnvironmentConfinesM11ToAxis) {
  // Every site of {x=0} is pre-visited, so on it the walk moves vertically.
  auto d = exact_distribution(kM11, Environment::line(1, {0}), 5);
  for (const auto& [site, prob] : d.entries) EXPECT_EQ(site[0], 0);
  EXPECT_EQ(d.total(), 1);
}

TEST(ExactDistribution, JsonUsesExactFractions) {
  auto j = exact_distribution(kM11, Environment::empty(), 2).to_json();
  EXPECT_EQ(j["horizon"], 2);
  EXPECT_EQ(j["probabilities"]["0,0"], "1/2");
  EXPECT_EQ(j["probabilities"]["-2,0"], "1/4");
  EXPECT_EQ(to_fraction_string(Rational(1)), "1/1");
}

TEST(ExactDistribution, TotalVariation) {
  auto a = exact_distribution(kM11, Environment::empty(), 2);
  auto b = exact_distribution(kM11, Environment::empty(), 4);
  EXPECT_EQ(total_variation(a, a), 0);
  EXPECT_GT(total_variation(a, b), 0);
  EXPECT_LE(total_variation(a, b), 1);
}

TEST(ExactReturnWindow, SmallHorizons) {
  EXPECT_EQ(exact_return_window(kM22, 0), 1);
  EXPECT_EQ(exact_return_window(kM22, 1), q(1, 4));
  EXPECT_EQ(exact_return_window(kM11, 1), q(1, 2));
}

TEST(ExactReturnWindow, NarrowerWindowIsLessLikely) {
  const auto env = Environment::empty();
  for (std::uint64_t b = 2; b <= 8; ++b)
    for (std::uint64_t a = 1; a < b; ++a)
      EXPECT_LE(exact_window_probability(kM22, env, a + 1, b),
                exact_window_probability(kM22, env, a, b));
  EXPECT_THROW(exact_window_probability(kM22, env, 3, 2), ConfigError);
}

TEST(ExactExpectation, RangeAtTwoSteps) {
  auto range = [](std::span<const detail::EnumPoint> path) {
    std::vector<detail::EnumPoint> v(path.begin(), path.end());
    std::sort(v.begin(), v.end());
    return Rational(static_cast<long>(std::unique(v.begin(), v.end()) - v.begin()));
  };
  // r_2 = 2 after an immediate return (prob 1/4), else 3.
  EXPECT_EQ(exact_expectation(kM22, Environment::empty(), 2, range), q(11, 4));
  EXPECT_EQ(exact_expectation(kM11, Environment::empty(), 2, range), q(5, 2));
}

TEST(Reconstruction, MatchesDirectLawExactly) {
  for (std::uint64_t n = 0; n <= 10; ++n)
    EXPECT_EQ(total_variation(exact_distribution(kM11, Environment::empty(), n),
                              exact_reconstruction_distribution(kM11, n)),
              0)
        << "M(1,1) n=" << n;
  for (std::uint64_t n = 0; n <= 6; ++n)
    EXPECT_EQ(total_variation(exact_distribution(kM22, Environment::empty(), n),
                              exact_reconstruction_distribution(kM22, n)),
              0)
        << "M(2,2) n=" << n;
  Partition m21({2, 1});
  for (std::uint64_t n = 0; n <= 6; ++n)
    EXPECT_EQ(total_variation(exact_distribution(m21, Environment::empty(), n),
                              exact_reconstruction_distribution(m21, n)),
              0);
}

TEST(Reconstruction, InvertedRuleDiffers) {
  Partition m21({2, 1});
  EXPECT_GT(total_variation(exact_distribution(m21, Environment::empty(), 4),
                            exact_reconstruction_distribution(m21, 4, true)),
            0);
}

TEST(Enumeration, Rejections) {
  EXPECT_THROW(exact_distribution(kM22, Environment::empty(), 12), ResourceError);
  EXPECT_NO_THROW(exact_distribution(kM11, Environment::empty(), 12));
  EXPECT_THROW(exact_distribution(kM11, Environment::trumpet(), 2), ConfigError);
  EXPECT_THROW(exact_reconstruction_distribution(Partition({1, 1, 1}), 2), ConfigError);
  EXPECT_THROW(exact_distribution(kM22, Environment::line(2, {0, 0}), 2), ConfigError);
}
