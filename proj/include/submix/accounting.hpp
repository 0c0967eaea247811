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

// Privacy-notion arithmetic around the prediction protocol: RDP to (eps,
// delta)-DP, partition-level to user-level and back, group privacy, the
// (B, C) random-stopping wrapper and the Fano bound on extractability.
//
// Scalar functions compute the numbers. PrivacyClaim values carry the same
// numbers together with the chain of rules that produced them, so a reported
// epsilon can be replayed from its origin.

#ifndef SUBMIX_ACCOUNTING_HPP_
#define SUBMIX_ACCOUNTING_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "submix/error.hpp"
#include "submix/protocol.hpp"
#include "submix/random.hpp"

namespace submix {

// ---------------------------------------------------------------------------
// Scalar conversions

inline void CheckEpsilon(double epsilon) {
  if (!(epsilon >= 0.0)) {
    throw ParameterError("epsilon must be >= 0, got " +
                         std::to_string(epsilon));
  }
}

// (alpha, eps)-RDP implies (eps + ln(1/delta) / (alpha - 1), delta)-DP.
inline double RdpToDp(double alpha, double epsilon, double delta) {
  (void)RenyiOrder(alpha);
  CheckEpsilon(epsilon);
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ParameterError("delta must lie in (0, 1)");
  }
  return epsilon + std::log(1.0 / delta) / (alpha - 1.0);
}

struct RenyiPair {
  double alpha;
  double epsilon;
};

// Partition-level (alpha, eps) to user-level (alpha / 2, f eps) with
// f = (2 alpha - 3) / (alpha - 2). f tends to 2 as alpha grows.
inline RenyiPair PartitionToUser(double alpha, double epsilon) {
  if (!(alpha > 2.0)) {
    throw ParameterError("partition-to-user conversion needs alpha > 2, got " +
                         std::to_string(alpha));
  }
  CheckEpsilon(epsilon);
  if (std::isinf(alpha)) return {alpha, 2.0 * epsilon};
  return {alpha / 2.0, (2.0 * alpha - 3.0) / (alpha - 2.0) * epsilon};
}

// User-level (alpha, eps) to partition-level (alpha, (n / k) eps) for a
// uniform partition of n users into k parts.
inline double UserToPartition(double alpha, double epsilon, double n_users,
                              double k_parts) {
  (void)RenyiOrder(alpha);
  CheckEpsilon(epsilon);
  if (!(k_parts >= 1.0) || !(n_users >= k_parts)) {
    throw ParameterError("user-to-partition conversion needs n >= k >= 1");
  }
  return n_users / k_parts * epsilon;
}

inline double GroupConversion(double epsilon, std::uint64_t kappa) {
  CheckEpsilon(epsilon);
  if (kappa < 1) throw ParameterError("group size must be >= 1");
  return static_cast<double>(kappa) * epsilon;
}

// Size of the stopping-time domain {1, ..., CB}; non-integral products are
// rounded up. The slack absorbs products like 2.2 * 25.
inline std::uint64_t RandomStoppingDomain(std::uint64_t budget, double c) {
  if (budget < 1) throw ParameterError("query budget B must be >= 1");
  if (!(c > 0.5) || std::isinf(c)) {
    throw ParameterError("expansion factor C must be finite and > 1/2");
  }
  const double cb = c * static_cast<double>(budget);
  return static_cast<std::uint64_t>(std::ceil(cb - 1e-9 * cb));
}

// Fixed-length RDP level of the random-stopping wrapper: eps + ln(CB).
inline double RandomStoppingEpsilon(double epsilon, std::uint64_t budget,
                                    double c) {
  CheckEpsilon(epsilon);
  return epsilon +
         std::log(static_cast<double>(RandomStoppingDomain(budget, c)));
}

// Upper bound on the wrapper's expected perplexity given the pre-termination
// perplexity p and the public model's perplexity p_pub.
inline double RandomStoppingPerplexityBound(double p, double p_pub, double c) {
  if (!(p >= 1.0) || !(p_pub >= 1.0)) {
    throw ParameterError("perplexities must be >= 1");
  }
  if (!(c >= 0.5)) throw ParameterError("expansion factor C must be >= 1/2");
  if (std::isinf(c)) return p;
  const double w = 1.0 / (2.0 * c);
  return (1.0 - w) * p + w * p_pub;
}

// Success rate above which an (alpha, eps)-RDP mechanism cannot kappa-
// eidetically memorize a string drawn among m candidates.
inline double FanoExtractabilityBound(std::uint64_t kappa, double epsilon,
                                      double m) {
  if (kappa < 1) throw ParameterError("kappa must be >= 1");
  CheckEpsilon(epsilon);
  if (!(m >= 2.0)) throw ParameterError("Fano bound needs m >= 2 candidates");
  return (static_cast<double>(kappa) * epsilon + std::log(2.0)) / std::log(m);
}

// ---------------------------------------------------------------------------
// Claims

enum class Notion {
  kRop,
  kUserRdp,
  kPartitionRdp,
  kGroupRdp,
  kFixedLengthRdp,
  kPureDp,
  kApproxDp,
};

inline std::string_view NotionName(Notion n) {
  switch (n) {
    case Notion::kRop: return "rop";
    case Notion::kUserRdp: return "user-rdp";
    case Notion::kPartitionRdp: return "partition-rdp";
    case Notion::kGroupRdp: return "group-rdp";
    case Notion::kFixedLengthRdp: return "fixed-length-rdp";
    case Notion::kPureDp: return "pure-dp";
    case Notion::kApproxDp: return "approx-dp";
  }
  return "unknown";
}

inline Notion ParseNotion(std::string_view s) {
  for (Notion n : {Notion::kRop, Notion::kUserRdp, Notion::kPartitionRdp,
                   Notion::kGroupRdp, Notion::kFixedLengthRdp, Notion::kPureDp,
                   Notion::kApproxDp}) {
    if (NotionName(n) == s) return n;
  }
  throw ParameterError("unknown privacy notion: " + std::string(s));
}

struct ProvenanceStep {
  std::string rule;
  std::map<std::string, double> args;
};

struct PrivacyClaim {
  Notion notion = Notion::kRop;
  std::optional<double> alpha;
  double epsilon = 0.0;
  std::optional<double> delta;
  std::optional<double> group_size;
  std::optional<double> n_users;
  std::optional<double> k_parts;
  std::optional<double> queries;  // B, for fixed-length claims
  std::vector<ProvenanceStep> provenance;
};

// Partition-level guarantee of a SubMix deployment (ROP is stated per part).
inline PrivacyClaim RopClaim(double alpha, double epsilon) {
  (void)RenyiOrder(alpha);
  CheckEpsilon(epsilon);
  PrivacyClaim c;
  c.notion = Notion::kRop;
  c.alpha = alpha;
  c.epsilon = epsilon;
  c.provenance.push_back({"origin", {{"alpha", alpha}, {"epsilon", epsilon}}});
  return c;
}

inline PrivacyClaim RdpClaim(Notion notion, double alpha, double epsilon) {
  PrivacyClaim c = RopClaim(alpha, epsilon);
  c.notion = notion;
  c.provenance.front().args["notion"] = static_cast<double>(notion);
  return c;
}

inline double RequireAlpha(const PrivacyClaim& c) {
  if (!c.alpha) {
    throw ParameterError("claim of notion " + std::string(NotionName(c.notion)) +
                         " has no Renyi order");
  }
  return *c.alpha;
}

inline PrivacyClaim ApplyRdpToDp(PrivacyClaim c, double delta) {
  const double alpha = RequireAlpha(c);
  c.epsilon = RdpToDp(alpha, c.epsilon, delta);
  c.delta = delta;
  c.notion = Notion::kApproxDp;
  c.provenance.push_back({"rdp_to_dp", {{"delta", delta}}});
  return c;
}

inline PrivacyClaim ApplyPartitionToUser(PrivacyClaim c) {
  const RenyiPair r = PartitionToUser(RequireAlpha(c), c.epsilon);
  c.alpha = r.alpha;
  c.epsilon = r.epsilon;
  c.notion = std::isinf(r.alpha) ? Notion::kPureDp : Notion::kUserRdp;
  c.provenance.push_back({"partition_to_user", {}});
  return c;
}

inline PrivacyClaim ApplyUserToPartition(PrivacyClaim c, double n_users,
                                         double k_parts) {
  c.epsilon = UserToPartition(RequireAlpha(c), c.epsilon, n_users, k_parts);
  c.notion = Notion::kPartitionRdp;
  c.n_users = n_users;
  c.k_parts = k_parts;
  c.provenance.push_back(
      {"user_to_partition", {{"n_users", n_users}, {"k_parts", k_parts}}});
  return c;
}

inline PrivacyClaim ApplyGroup(PrivacyClaim c, std::uint64_t kappa) {
  c.epsilon = GroupConversion(c.epsilon, kappa);
  c.notion = Notion::kGroupRdp;
  c.group_size = static_cast<double>(kappa);
  c.provenance.push_back(
      {"group", {{"kappa", static_cast<double>(kappa)}}});
  return c;
}

inline PrivacyClaim ApplyRandomStopping(PrivacyClaim c, std::uint64_t budget,
                                        double expansion) {
  c.epsilon = RandomStoppingEpsilon(c.epsilon, budget, expansion);
  c.notion = Notion::kFixedLengthRdp;
  c.queries = static_cast<double>(budget);
  c.provenance.push_back({"random_stopping",
                          {{"B", static_cast<double>(budget)},
                           {"C", expansion},
                           {"domain", static_cast<double>(
                                          RandomStoppingDomain(budget,
                                                               expansion))}}});
  return c;
}

// Rebuilds a claim from the origin of its provenance chain.
inline PrivacyClaim ReplayClaim(const PrivacyClaim& claim) {
  if (claim.provenance.empty() || claim.provenance.front().rule != "origin") {
    throw FormatError("claim provenance does not start at an origin");
  }
  const auto& origin = claim.provenance.front().args;
  PrivacyClaim c = RopClaim(origin.at("alpha"), origin.at("epsilon"));
  if (auto it = origin.find("notion"); it != origin.end()) {
    c = RdpClaim(static_cast<Notion>(static_cast<int>(it->second)),
                 origin.at("alpha"), origin.at("epsilon"));
  }
  for (std::size_t i = 1; i < claim.provenance.size(); ++i) {
    const ProvenanceStep& s = claim.provenance[i];
    if (s.rule == "rdp_to_dp") {
      c = ApplyRdpToDp(std::move(c), s.args.at("delta"));
    } else if (s.rule == "partition_to_user") {
      c = ApplyPartitionToUser(std::move(c));
    } else if (s.rule == "user_to_partition") {
      c = ApplyUserToPartition(std::move(c), s.args.at("n_users"),
                               s.args.at("k_parts"));
    } else if (s.rule == "group") {
      c = ApplyGroup(std::move(c),
                     static_cast<std::uint64_t>(s.args.at("kappa")));
    } else if (s.rule == "random_stopping") {
      c = ApplyRandomStopping(std::move(c),
                              static_cast<std::uint64_t>(s.args.at("B")),
                              s.args.at("C"));
    } else {
      throw FormatError("unknown provenance rule: " + s.rule);
    }
  }
  return c;
}

inline nlohmann::ordered_json ClaimToJson(const PrivacyClaim& c) {
  nlohmann::ordered_json j;
  j["notion"] = NotionName(c.notion);
  if (c.alpha) j["alpha"] = JsonNumber(*c.alpha);
  j["epsilon"] = JsonNumber(c.epsilon);
  if (c.delta) j["delta"] = *c.delta;
  if (c.group_size) j["group_size"] = *c.group_size;
  if (c.n_users) j["n_users"] = *c.n_users;
  if (c.k_parts) j["k_parts"] = *c.k_parts;
  if (c.queries) j["queries"] = *c.queries;
  nlohmann::ordered_json chain = nlohmann::ordered_json::array();
  for (const auto& step : c.provenance) {
    nlohmann::ordered_json args = nlohmann::ordered_json::object();
    for (const auto& [key, value] : step.args) args[key] = JsonNumber(value);
    chain.push_back({{"rule", step.rule}, {"args", std::move(args)}});
  }
  j["provenance"] = std::move(chain);
  return j;
}

inline PrivacyClaim ClaimFromJson(const nlohmann::json& j) {
  try {
    PrivacyClaim c;
    c.notion = ParseNotion(j.at("notion").get<std::string>());
    if (j.contains("alpha")) c.alpha = NumberFromJson(j["alpha"]);
    c.epsilon = NumberFromJson(j.at("epsilon"));
    if (j.contains("delta")) c.delta = j["delta"].get<double>();
    if (j.contains("group_size")) c.group_size = j["group_size"].get<double>();
    if (j.contains("n_users")) c.n_users = j["n_users"].get<double>();
    if (j.contains("k_parts")) c.k_parts = j["k_parts"].get<double>();
    if (j.contains("queries")) c.queries = j["queries"].get<double>();
    for (const auto& step : j.at("provenance")) {
      ProvenanceStep s;
      s.rule = step.at("rule").get<std::string>();
      for (const auto& [key, value] : step.at("args").items()) {
        s.args[key] = NumberFromJson(value);
      }
      c.provenance.push_back(std::move(s));
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed privacy claim: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// (B, C) random stopping

struct RandomStoppingRun {
  std::uint64_t tau = 0;     // forced stop before response tau
  std::uint64_t domain = 0;  // tau was uniform on {1, ..., domain}
  bool forced = false;       // the wrapper, not the protocol, stopped it
  SessionTranscript transcript;
};

// Runs exactly `budget` queries. Before response tau the protocol is told to
// stop unless it already has; every later response comes from the public
// model. The stream must supply at least `budget` contexts.
inline RandomStoppingRun WrapRandomStopping(PredictionProtocol& protocol,
                                            const QueryStream& queries,
                                            std::uint64_t budget,
                                            double expansion, Rng& rng) {
  RandomStoppingRun run;
  run.domain = RandomStoppingDomain(budget, expansion);
  run.tau = 1 + UniformIndex(rng, run.domain);
  run.transcript.mechanism = std::string(protocol.mechanism());
  for (std::uint64_t t = 1; t <= budget; ++t) {
    if (t == run.tau && !protocol.stopped()) {
      protocol.IssueStop();
      run.forced = true;
    }
    auto context = queries(run.transcript);
    if (!context) {
      throw ConfigurationError("query stream ended after " +
                               std::to_string(t - 1) + " of " +
                               std::to_string(budget) + " queries");
    }
    run.transcript.Append(protocol.Respond(*context, rng));
  }
  return run;
}

}  // namespace submix

#endif  // SUBMIX_ACCOUNTING_HPP_
