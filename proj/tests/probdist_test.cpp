// Copyright 2026 The SubMix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "submix/probdist.hpp"

#include <cmath>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "oracle.hpp"

namespace submix {
namespace {

using ::testing::DoubleNear;
using ::testing::ElementsAre;

const RenyiOrder kTwo(2.0);

TEST(PmfTest, RejectsInvalidEntries) {
  EXPECT_THROW(Pmf({0.5, 0.6}), ParameterError);
  EXPECT_THROW(Pmf({-0.1, 1.1}), ParameterError);
  EXPECT_THROW(Pmf(std::vector<double>{}), ParameterError);
  EXPECT_THROW(Pmf({NAN, 1.0}), ParameterError);
  EXPECT_THROW(Pmf::FromWeights({0.0, 0.0}), ParameterError);
  EXPECT_NO_THROW(Pmf({0.5, 0.5 + 5e-10}));
}

TEST(PmfTest, Factories) {
  EXPECT_THAT(Pmf::Uniform(4).values(), ElementsAre(0.25, 0.25, 0.25, 0.25));
  EXPECT_THAT(Pmf::PointMass(3, 1).values(), ElementsAre(0, 1, 0));
  EXPECT_THAT(Pmf::FromWeights({1, 3}).values(), ElementsAre(0.25, 0.75));
  EXPECT_THROW(Pmf::PointMass(3, 3), DimensionError);
}

TEST(RenyiOrderTest, RejectsOrdersAtOrBelowOne) {
  EXPECT_THROW(RenyiOrder(1.0), ParameterError);
  EXPECT_THROW(RenyiOrder(0.5), ParameterError);
  EXPECT_THROW(RenyiOrder(NAN), ParameterError);
  EXPECT_TRUE(RenyiOrder::Infinity().is_infinite());
}

TEST(RenyiDivergenceTest, Examples) {
  const Pmf p({0.3, 0.7});
  EXPECT_EQ(RenyiDivergence(p, p, kTwo), 0.0);
  const Pmf a({0.5, 0.5});
  const Pmf b({0.25, 0.75});
  const double expected = oracle::Renyi({0.5, 0.5}, {0.25, 0.75}, 2.0);
  EXPECT_NEAR(expected, std::log(4.0 / 3.0), 1e-15);
  EXPECT_NEAR(RenyiDivergence(a, b, kTwo), expected, 1e-12);
  EXPECT_NEAR(RenyiDivergence(a, b, kTwo), 0.287682, 1e-6);
  EXPECT_EQ(RenyiDivergence(Pmf({1, 0}), Pmf({0, 1}), kTwo), kInfinity);
}

TEST(RenyiDivergenceTest, ErrorsOnMismatchedVocab) {
  EXPECT_THROW(RenyiDivergence(Pmf::Uniform(2), Pmf::Uniform(3), kTwo),
               DimensionError);
  EXPECT_THROW(MaxDivergence(Pmf::Uniform(2), Pmf::Uniform(3)), DimensionError);
}

TEST(RenyiDivergenceTest, ZeroMassInPContributesNothing) {
  const oracle::Vec p = {0.6, 0.4, 0.0};
  const oracle::Vec q = {0.2, 0.4, 0.4};
  EXPECT_NEAR(RenyiDivergence(Pmf(p), Pmf(q), RenyiOrder(3)),
              oracle::Renyi(p, q, 3), 1e-12);
}

TEST(RenyiDivergenceTest, ExtremeRatiosStayFinite) {
  const oracle::Vec p = {1 - 1e-300, 1e-300};
  const oracle::Vec q = {1e-300, 1 - 1e-300};
  const double d = RenyiDivergence(Pmf(p), Pmf(q), RenyiOrder(8));
  EXPECT_TRUE(std::isfinite(d));
  EXPECT_NEAR(d, (8 * std::log(1 - 1e-300) - 7 * std::log(1e-300)) / 7, 1e-9);
}

TEST(MaxDivergenceTest, Examples) {
  EXPECT_EQ(MaxDivergence(Pmf::Uniform(5), Pmf::Uniform(5)), 0.0);
  EXPECT_NEAR(MaxDivergence(Pmf({0.5, 0.5}), Pmf({0.25, 0.75})), std::log(2.0),
              1e-12);
  EXPECT_NEAR(MaxDivergence(Pmf({0.6, 0.4, 0.0}), Pmf({0.2, 0.4, 0.4})),
              std::log(3.0), 1e-12);
  EXPECT_NEAR(std::log(3.0), 1.098612, 1e-6);
  EXPECT_EQ(RenyiDivergence(Pmf({0.5, 0.5}), Pmf({0.25, 0.75}),
                            RenyiOrder::Infinity()),
            MaxDivergence(Pmf({0.5, 0.5}), Pmf({0.25, 0.75})));
}

TEST(SymRenyiDivergenceTest, Examples) {
  const Pmf a({0.5, 0.5});
  const Pmf b({0.25, 0.75});
  // Directions: ln(4/3) and ln(0.0625/0.5 + 0.5625/0.5) = ln(1.25).
  EXPECT_NEAR(SymRenyiDivergence(a, b, kTwo), std::log(4.0 / 3.0), 1e-12);
  EXPECT_NEAR(SymRenyiDivergence(a, b, kTwo),
              oracle::SymRenyi({0.5, 0.5}, {0.25, 0.75}, 2), 1e-12);
  EXPECT_EQ(SymRenyiDivergence(a, b, kTwo), SymRenyiDivergence(b, a, kTwo));
  EXPECT_EQ(SymRenyiDivergence(b, b, kTwo), 0.0);
}

TEST(MixTest, Examples) {
  const Pmf p({0.8, 0.2});
  const Pmf q({0.4, 0.6});
  EXPECT_EQ(Mix(0.0, p, q), q);
  EXPECT_EQ(Mix(1.0, p, q), p);
  EXPECT_THAT(Mix(0.5, Pmf({1, 0}), Pmf({0, 1})).values(),
              ElementsAre(0.5, 0.5));
  EXPECT_THAT(Mix(0.25, p, q).values(),
              ElementsAre(DoubleNear(0.5, 1e-15), DoubleNear(0.5, 1e-15)));
  EXPECT_THROW(Mix(1.5, p, q), ParameterError);
  EXPECT_THROW(Mix(-0.1, p, q), ParameterError);
}

TEST(MixTest, OutputAlwaysValidUnderFuzz) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t v = 2 + rng() % 50;
    const auto p = oracle::RandomPmf(rng, v);
    const auto q = oracle::RandomPmf(rng, v);
    const double lambda = u(rng);
    const Pmf m = Mix(lambda, Pmf(p), Pmf(q));
    EXPECT_NO_THROW(Pmf(m.values()));
    const auto ref = oracle::Mix(lambda, p, q);
    for (std::size_t x = 0; x < v; ++x) EXPECT_NEAR(m[x], ref[x], 1e-12);
  }
}

TEST(AverageTest, IdenticalInputsReturnedExactly) {
  const Pmf p({0.1, 0.2, 0.3, 0.4});
  const std::vector<Pmf> same(7, p);
  EXPECT_EQ(Average(same), p);
  const std::vector<Pmf> pair = {Pmf({0.8, 0.2}), Pmf({0.4, 0.6})};
  EXPECT_THAT(Average(pair).values(),
              ElementsAre(DoubleNear(0.6, 1e-15), DoubleNear(0.4, 1e-15)));
}

TEST(SampleTest, PointMassAndDeterminism) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    EXPECT_EQ(Sample(Pmf({1, 0, 0}), rng), 0u);
  }
  const Pmf p({0.1, 0.2, 0.3, 0.4});
  Rng a(99);
  Rng b(99);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(Sample(p, a), Sample(p, b));
}

TEST(SampleTest, SkipsZeroMassTokens) {
  Rng rng(5);
  const Pmf p({0.0, 0.5, 0.0, 0.5, 0.0});
  for (int i = 0; i < 10000; ++i) {
    const TokenId t = Sample(p, rng);
    EXPECT_TRUE(t == 1 || t == 3);
  }
}

TEST(SampleTest, UniformFrequencies) {
  Rng rng(1234);
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[Sample(Pmf::Uniform(4), rng)];
  for (int c : counts) EXPECT_NEAR(static_cast<double>(c) / n, 0.25, 0.01);
}

TEST(SampleTest, ChiSquaredGoodnessOfFit) {
  std::mt19937_64 gen(77);
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t v = 2 + gen() % 10;
    const auto probs = oracle::RandomPmf(gen, v, 0.2);
    const Pmf p(probs);
    std::vector<std::uint64_t> counts(v, 0);
    for (int i = 0; i < 10000; ++i) ++counts[Sample(p, rng)];
    const double stat = oracle::ChiSquaredStat(counts, probs);
    EXPECT_LT(stat, oracle::ChiSquaredQuantile(v - 1.0, 0.999)) << "trial " << trial;
  }
}

TEST(TemperatureScaleTest, Examples) {
  const Pmf p({0.8, 0.2});
  EXPECT_EQ(TemperatureScale(p, 1.0), p);
  const Pmf s = TemperatureScale(p, 0.5);
  EXPECT_NEAR(s[0], 0.64 / 0.68, 1e-12);
  EXPECT_NEAR(s[1], 0.04 / 0.68, 1e-12);
  EXPECT_NEAR(s[0], 0.941176, 1e-6);
  const Pmf hot = TemperatureScale(Pmf({0.7, 0.1, 0.15, 0.05}), 100.0);
  EXPECT_LT(LInfDistance(hot, Pmf::Uniform(4)), 0.01);
  EXPECT_THROW(TemperatureScale(p, 0.0), ParameterError);
  EXPECT_THROW(TemperatureScale(p, -1.0), ParameterError);
}

TEST(TemperatureScaleTest, ZeroEntriesStayZero) {
  const Pmf s = TemperatureScale(Pmf({0.5, 0.0, 0.5}), 3.0);
  EXPECT_EQ(s[1], 0.0);
}

// Properties.

TEST(DivergencePropertyTest, SelfDivergenceIsZero) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const Pmf p(oracle::RandomPmf(rng, 2 + rng() % 30));
    for (double a : {1.5, 2.0, 8.0}) {
      EXPECT_LE(RenyiDivergence(p, Pmf(p.values()), RenyiOrder(a)), 1e-12);
    }
    EXPECT_LE(MaxDivergence(p, p), 1e-12);
  }
}

TEST(DivergencePropertyTest, NondecreasingInOrder) {
  std::mt19937_64 rng(4);
  const std::vector<double> orders = {1.1, 1.5, 2, 3, 4, 8, 16, 64};
  for (int i = 0; i < 1000; ++i) {
    const std::size_t v = 2 + rng() % 20;
    const Pmf p(oracle::RandomPmf(rng, v));
    const Pmf q(oracle::RandomPmf(rng, v));
    double prev = 0.0;
    for (double a : orders) {
      const double d = RenyiDivergence(p, q, RenyiOrder(a));
      EXPECT_GE(d, prev - 1e-12);
      prev = d;
    }
    EXPECT_LE(prev, MaxDivergence(p, q) + 1e-12);
  }
}

TEST(DivergencePropertyTest, MixingPathIsNondecreasing) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const std::size_t v = 2 + rng() % 10;
    const Pmf p(oracle::RandomPmf(rng, v));
    const Pmf q(oracle::RandomPmf(rng, v));
    const Pmf r(oracle::RandomPmf(rng, v, 0.05));
    for (double a : {2.0, 4.0}) {
      double prev = 0.0;
      for (int step = 0; step <= 1000; ++step) {
        const double lambda = step / 1000.0;
        const double d =
            RenyiDivergence(Mix(lambda, p, r), Mix(lambda, q, r), RenyiOrder(a));
        if (step == 0) {
          EXPECT_EQ(d, 0.0);
        }
        EXPECT_GE(d, prev - 1e-12);
        prev = d;
      }
    }
  }
}

}  // namespace
}  // namespace submix
