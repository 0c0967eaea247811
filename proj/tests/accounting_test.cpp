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

#include "submix/accounting.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "oracle.hpp"
#include "submix/experiments.hpp"

namespace submix {
namespace {

// Protocol that answers token t at step t and stops on its own at
// `native_stop` (0 means never).
class StubProtocol final : public PredictionProtocol {
 public:
  explicit StubProtocol(std::size_t native_stop) : native_stop_(native_stop) {}
  StepOutcome Respond(std::span<const TokenId>, Rng& rng) override {
    StepOutcome out;
    out.t = ++t_;
    if (!stopped_ && out.t == native_stop_) {
      stopped_ = true;
      out.stop_issued = true;
    }
    if (forced_pending_) {
      out.stop_issued = true;
      forced_pending_ = false;
    }
    out.stopped = stopped_;
    out.pmf = Pmf::Uniform(2);
    out.token = Sample(out.pmf, rng);
    return out;
  }
  void IssueStop() override {
    if (!stopped_) {
      stopped_ = true;
      forced_pending_ = true;
    }
  }
  bool stopped() const override { return stopped_; }
  std::size_t k() const override { return 2; }
  std::string_view mechanism() const override { return "stub"; }

 private:
  std::size_t native_stop_;
  std::size_t t_ = 0;
  bool stopped_ = false;
  bool forced_pending_ = false;
};

QueryStream Endless() {
  return [](const SessionTranscript&) -> std::optional<TokenSeq> {
    return TokenSeq{};
  };
}

TEST(RdpToDpTest, Examples) {
  EXPECT_NEAR(RdpToDp(2.0, 0.0, std::exp(-1.0)), 1.0, 1e-15);
  EXPECT_NEAR(RdpToDp(2.0, 2.0, 1e-5), 2.0 + std::log(1e5), 1e-12);
  EXPECT_NEAR(RdpToDp(2.0, 2.0, 1e-5), 13.5129, 1e-4);
  EXPECT_NEAR(RdpToDp(3.0, 0.7, 1.0 - 1e-12), 0.7, 1e-11);
  EXPECT_THROW(RdpToDp(1.0, 1.0, 0.1), ParameterError);
  EXPECT_THROW(RdpToDp(2.0, 1.0, 0.0), ParameterError);
  EXPECT_THROW(RdpToDp(2.0, 1.0, 1.0), ParameterError);
  EXPECT_THROW(RdpToDp(2.0, -1.0, 0.1), ParameterError);
}

TEST(PartitionToUserTest, Examples) {
  const RenyiPair a = PartitionToUser(4.0, 1.0);
  EXPECT_DOUBLE_EQ(a.alpha, 2.0);
  EXPECT_DOUBLE_EQ(a.epsilon, 2.5);
  const RenyiPair b = PartitionToUser(3.0, 2.0);
  EXPECT_DOUBLE_EQ(b.alpha, 1.5);
  EXPECT_DOUBLE_EQ(b.epsilon, 6.0);
  EXPECT_NEAR(PartitionToUser(1e12, 1.0).epsilon, 2.0, 1e-9);
  const RenyiPair pure = PartitionToUser(kInfinity, 1.5);
  EXPECT_TRUE(std::isinf(pure.alpha));
  EXPECT_EQ(pure.epsilon, 3.0);
  EXPECT_THROW(PartitionToUser(2.0, 1.0), ParameterError);
  EXPECT_THROW(PartitionToUser(1.5, 1.0), ParameterError);
}

TEST(UserToPartitionTest, Examples) {
  EXPECT_DOUBLE_EQ(UserToPartition(2.0, 0.1, 100, 10), 1.0);
  EXPECT_DOUBLE_EQ(UserToPartition(2.0, 0.3, 7, 7), 0.3);
  EXPECT_DOUBLE_EQ(UserToPartition(2.0, 0.3, 7, 1), 2.1);
  EXPECT_THROW(UserToPartition(2.0, 0.3, 3, 4), ParameterError);
  EXPECT_THROW(UserToPartition(2.0, 0.3, 3, 0), ParameterError);
}

TEST(GroupConversionTest, Examples) {
  EXPECT_DOUBLE_EQ(GroupConversion(0.4, 1), 0.4);
  EXPECT_DOUBLE_EQ(GroupConversion(0.4, 5), 2.0);
  EXPECT_THROW(GroupConversion(0.4, 0), ParameterError);
}

TEST(RandomStoppingTest, EpsilonMatchesReportedValues) {
  EXPECT_NEAR(RandomStoppingEpsilon(2.0, 1000, 10.0), 11.21, 0.005);
  EXPECT_NEAR(RandomStoppingEpsilon(2.0, 1000, 100.0), 13.51, 0.005);
  EXPECT_NEAR(RandomStoppingEpsilon(2.0, 1000, 1.0), 8.9, 0.05);
  EXPECT_NEAR(RandomStoppingEpsilon(2.0, 1000, 1.0), 8.9078, 1e-4);
  EXPECT_EQ(RandomStoppingDomain(25, 2.2), 55u);
  EXPECT_EQ(RandomStoppingDomain(3, 0.6), 2u);
  EXPECT_THROW(RandomStoppingDomain(0, 2.0), ParameterError);
  EXPECT_THROW(RandomStoppingDomain(10, 0.5), ParameterError);
  EXPECT_THROW(RandomStoppingDomain(10, kInfinity), ParameterError);
}

TEST(RandomStoppingTest, PerplexityBound) {
  EXPECT_NEAR(RandomStoppingPerplexityBound(26.9, 37.5, 10.0),
              0.95 * 26.9 + 0.05 * 37.5, 1e-12);
  EXPECT_NEAR(RandomStoppingPerplexityBound(26.9, 37.5, 10.0), 27.43, 0.005);
  EXPECT_EQ(RandomStoppingPerplexityBound(26.9, 37.5, 0.5), 37.5);
  EXPECT_EQ(RandomStoppingPerplexityBound(26.9, 37.5, kInfinity), 26.9);
  EXPECT_NEAR(RandomStoppingPerplexityBound(26.9, 37.5, 1e9), 26.9, 1e-7);
  EXPECT_THROW(RandomStoppingPerplexityBound(0.5, 37.5, 2.0), ParameterError);
  EXPECT_THROW(RandomStoppingPerplexityBound(2.0, 3.0, 0.4), ParameterError);
}

TEST(FanoTest, Examples) {
  EXPECT_NEAR(FanoExtractabilityBound(1, 1.0, 100.0),
              (1.0 + std::log(2.0)) / std::log(100.0), 1e-15);
  EXPECT_NEAR(FanoExtractabilityBound(1, 1.0, 100.0), 0.36766, 1e-5);
  EXPECT_DOUBLE_EQ(FanoExtractabilityBound(1, 0.0, 2.0), 1.0);
  double prev = kInfinity;
  for (double m = 2; m < 1e6; m *= 1.7) {
    const double b = FanoExtractabilityBound(3, 0.2, m);
    EXPECT_LT(b, prev);
    prev = b;
  }
  EXPECT_THROW(FanoExtractabilityBound(1, 1.0, 1.0), ParameterError);
  EXPECT_THROW(FanoExtractabilityBound(0, 1.0, 10.0), ParameterError);
}

TEST(ConversionPropertyTest, MonotoneInEpsilon) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> eps(0.0, 20.0);
  std::uniform_real_distribution<double> alpha(2.01, 64.0);
  for (int trial = 0; trial < 2000; ++trial) {
    double e1 = eps(rng);
    double e2 = eps(rng);
    if (e1 > e2) std::swap(e1, e2);
    const double a = alpha(rng);
    const std::uint64_t b = 1 + rng() % 5000;
    const double c = 0.51 + 50.0 * (rng() % 1000) / 1000.0;
    EXPECT_LE(RdpToDp(a, e1, 1e-6), RdpToDp(a, e2, 1e-6));
    EXPECT_LE(PartitionToUser(a, e1).epsilon, PartitionToUser(a, e2).epsilon);
    EXPECT_LE(UserToPartition(a, e1, 50, 7), UserToPartition(a, e2, 50, 7));
    EXPECT_LE(GroupConversion(e1, 3), GroupConversion(e2, 3));
    EXPECT_LE(RandomStoppingEpsilon(e1, b, c), RandomStoppingEpsilon(e2, b, c));
    EXPECT_LE(FanoExtractabilityBound(2, e1, 10), FanoExtractabilityBound(2, e2, 10));
  }
}

TEST(ClaimTest, ChainReplaysBitExactly) {
  PrivacyClaim c = RopClaim(4.0, 1.0);
  c = ApplyRandomStopping(std::move(c), 1000, 10.0);
  c = ApplyPartitionToUser(std::move(c));
  c = ApplyGroup(std::move(c), 2);
  c = ApplyRdpToDp(std::move(c), 1e-5);
  EXPECT_EQ(c.notion, Notion::kApproxDp);
  const double expected =
      RdpToDp(2.0, 2.0 * 2.5 * RandomStoppingEpsilon(1.0, 1000, 10.0), 1e-5);
  EXPECT_EQ(c.epsilon, expected);
  EXPECT_EQ(c.provenance.size(), 5u);

  const PrivacyClaim replayed = ReplayClaim(c);
  EXPECT_EQ(replayed.epsilon, c.epsilon);
  const std::string dumped = ClaimToJson(c).dump();
  const PrivacyClaim parsed = ClaimFromJson(nlohmann::json::parse(dumped));
  EXPECT_EQ(ClaimToJson(parsed).dump(), dumped);
  EXPECT_EQ(ReplayClaim(parsed).epsilon, c.epsilon);

  PrivacyClaim u = RdpClaim(Notion::kUserRdp, 3.0, 0.2);
  u = ApplyUserToPartition(std::move(u), 100, 10);
  EXPECT_EQ(ReplayClaim(u).epsilon, u.epsilon);
  EXPECT_EQ(ReplayClaim(u).notion, Notion::kPartitionRdp);
}

TEST(ClaimTest, PureDpClaimAndErrors) {
  PrivacyClaim c = ApplyPartitionToUser(RopClaim(kInfinity, 0.5));
  EXPECT_EQ(c.notion, Notion::kPureDp);
  EXPECT_EQ(c.epsilon, 1.0);
  const auto j = ClaimToJson(c);
  EXPECT_EQ(j["alpha"], "inf");
  EXPECT_TRUE(std::isinf(*ClaimFromJson(nlohmann::json::parse(j.dump())).alpha));
  PrivacyClaim broken = c;
  broken.provenance.front().rule = "other";
  EXPECT_THROW(ReplayClaim(broken), FormatError);
  EXPECT_THROW(ClaimFromJson(nlohmann::json::parse("{\"notion\": 3}")),
               FormatError);
  EXPECT_THROW(ParseNotion("nope"), ParameterError);
  for (Notion n : {Notion::kRop, Notion::kUserRdp, Notion::kPartitionRdp,
                   Notion::kGroupRdp, Notion::kFixedLengthRdp, Notion::kPureDp,
                   Notion::kApproxDp}) {
    EXPECT_EQ(ParseNotion(NotionName(n)), n);
  }
}

TEST(WrapRandomStoppingTest, TauIsUniformOnDomain) {
  const int runs = 20000;
  std::vector<std::uint64_t> counts(8, 0);
  Rng rng(2024);
  for (int r = 0; r < runs; ++r) {
    StubProtocol stub(0);
    const RandomStoppingRun run = WrapRandomStopping(stub, Endless(), 4, 2.0, rng);
    ASSERT_EQ(run.domain, 8u);
    ASSERT_GE(run.tau, 1u);
    ASSERT_LE(run.tau, 8u);
    ++counts[run.tau - 1];
    ASSERT_EQ(run.transcript.steps.size(), 4u);
    if (run.tau <= 4) {
      ASSERT_TRUE(run.forced);
      ASSERT_EQ(run.transcript.stop_index, run.tau);
      ASSERT_TRUE(run.transcript.steps[run.tau - 1].stop_issued);
    } else {
      ASSERT_FALSE(run.forced);
      ASSERT_FALSE(run.transcript.stop_index.has_value());
    }
  }
  const double stat =
      oracle::ChiSquaredStat(counts, std::vector<double>(8, 1.0 / 8));
  EXPECT_LT(stat, oracle::ChiSquaredQuantile(7, 0.999));
}

TEST(WrapRandomStoppingTest, UnitDomainIsAllPublic) {
  Rng rng(1);
  StubProtocol stub(0);
  const RandomStoppingRun run = WrapRandomStopping(stub, Endless(), 1, 1.0, rng);
  EXPECT_EQ(run.domain, 1u);
  EXPECT_EQ(run.tau, 1u);
  ASSERT_EQ(run.transcript.steps.size(), 1u);
  EXPECT_TRUE(run.transcript.steps[0].stopped);
  EXPECT_TRUE(run.forced);
}

TEST(WrapRandomStoppingTest, NativeStopIsPreserved) {
  Rng rng(1);
  for (int r = 0; r < 200; ++r) {
    StubProtocol stub(3);
    const RandomStoppingRun run = WrapRandomStopping(stub, Endless(), 10, 10.0, rng);
    EXPECT_EQ(run.transcript.steps.size(), 10u);
    EXPECT_EQ(*run.transcript.stop_index,
              std::min<std::uint64_t>(3, run.tau));
    EXPECT_EQ(run.forced, run.tau <= 3);
  }
}

TEST(WrapRandomStoppingTest, ShortStreamIsConfigurationError) {
  Rng rng(0);
  StubProtocol stub(0);
  EXPECT_THROW(WrapRandomStopping(stub, FixedQueries({{}, {}}), 3, 2.0, rng),
               ConfigurationError);
}

TEST(WrapRandomStoppingTest, WrapsSubMixSessions) {
  auto pub = std::make_shared<ConstantModel>(Pmf({0.5, 0.5}));
  auto a = std::make_shared<ConstantModel>(Pmf({0.9, 0.1}));
  auto ens = std::make_shared<SubMixEnsemble>(
      pub, std::vector<PartModels>{{a, a}, {pub, pub}});
  ProtocolParams params;
  params.epsilon = kInfinity;
  params.beta = 1.0;
  Rng rng(5);
  for (int r = 0; r < 50; ++r) {
    SubMixSession session(ens, params);
    const RandomStoppingRun run = WrapRandomStopping(session, Endless(), 6, 1.5, rng);
    EXPECT_EQ(run.domain, 9u);
    for (const auto& s : run.transcript.steps) {
      EXPECT_EQ(s.stopped, s.t >= run.tau);
      if (s.stopped) {
        EXPECT_EQ(s.pmf, Pmf({0.5, 0.5}));
      }
    }
  }
}

// At alpha = 4 the partition-level SubMix guarantee converts to user level,
// so the Fano bound applies to an adversary guessing which of m = 10 one-digit
// codes a single user holds.
TEST(FanoEmpiricalTest, SubMixSuccessStaysBelowBound) {
  const double alpha = 4.0;
  const double epsilon = 0.1;
  const std::size_t m = 10;
  const std::size_t budget = 8;
  const AttackSetup base = BuildAttackSetup(m, 1, 17);
  std::vector<std::shared_ptr<const SubMixEnsemble>> ensembles;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<UserCorpus> users;
    users.push_back(base.users[i]);
    for (int f = 0; f < 3; ++f) {
      users.push_back({"filler" + std::to_string(f),
                       {base.vocab.Tokenize("My number is: ")}});
    }
    ensembles.push_back(std::make_shared<SubMixEnsemble>(
        TrainSubMix(base.public_model, users, 2, 10.0, 100 + i)));
  }
  ProtocolParams params;
  params.alpha = alpha;
  params.epsilon = epsilon;
  params.beta = BetaFromBudget(epsilon, budget);
  const CandidateFactory factory = [&](std::size_t i) {
    return std::make_unique<SubMixSession>(ensembles[i], params);
  };
  const Adversary adversary = MostFrequentCandidate(
      base.prompt, base.corpus.codes, base.vocab, 1, budget);
  const std::size_t trials = 200;
  Rng rng(31);
  const ExtractabilityReport report =
      EstimateExtractability(factory, m, trials, adversary, rng);
  const double user_eps = PartitionToUser(alpha, epsilon).epsilon;
  const double bound = FanoExtractabilityBound(1, user_eps, m);
  const double se = std::sqrt(bound * (1 - bound) / trials);
  EXPECT_LE(report.min_rate, bound + 3 * se);
  EXPECT_EQ(report.rates.size(), m);
}

}  // namespace
}  // namespace submix
