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

// SubMix private next-token prediction.
//
// Training splits the private users into k parts, each part into two
// subparts, and fine-tunes one model per subpart. At prediction time every
// part picks the largest mixing weight lambda_i that keeps the divergence
// between its two subpart models (each mixed with the public model) under
// the per-query target beta. The released distribution mixes the ensemble
// average with the public model at the mean weight. Each part is charged the
// symmetric Renyi divergence between the released distribution and the one
// that would have been released without that part; once any part's budget
// is no longer strictly positive the protocol stops and answers from the
// public model only.

#ifndef SUBMIX_PROTOCOL_HPP_
#define SUBMIX_PROTOCOL_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "submix/corpus.hpp"
#include "submix/error.hpp"
#include "submix/lm.hpp"
#include "submix/probdist.hpp"
#include "submix/random.hpp"

namespace submix {

enum class DivergenceMode {
  kDirected,   // D_alpha(first mixture || second mixture) only
  kSymmetric,  // max over both directions
};

inline double MixtureDivergence(const Pmf& first, const Pmf& second,
                                const Pmf& pub, RenyiOrder alpha,
                                DivergenceMode mode, double lambda) {
  const Pmf a = Mix(lambda, first, pub);
  const Pmf b = Mix(lambda, second, pub);
  return mode == DivergenceMode::kSymmetric ? SymRenyiDivergence(a, b, alpha)
                                            : RenyiDivergence(a, b, alpha);
}

// Largest lambda in [0, 1] (to within `tol`) whose mixture divergence stays
// at or below `beta`. Bisection on a nondecreasing constraint; the endpoints
// are settled before bisecting.
inline double OptimizeLambda(const Pmf& first, const Pmf& second,
                             const Pmf& pub, RenyiOrder alpha, double beta,
                             DivergenceMode mode = DivergenceMode::kSymmetric,
                             double tol = 1e-6) {
  if (!(beta >= 0.0)) throw ParameterError("target leakage beta must be >= 0");
  if (!(tol > 0.0)) throw ParameterError("lambda tolerance must be > 0");
  internal::CheckSameVocab(first, second);
  internal::CheckSameVocab(first, pub);
  if (first == second) return 1.0;
  if (beta == 0.0) return 0.0;
  if (MixtureDivergence(first, second, pub, alpha, mode, 1.0) <= beta) {
    return 1.0;
  }
  constexpr int kMaxIterations = 40;
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < kMaxIterations && hi - lo >= tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (MixtureDivergence(first, second, pub, alpha, mode, mid) <= beta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

// Per-query target leakage when a query budget B is declared.
inline double BetaFromBudget(double epsilon, double budget) {
  if (!(budget >= 1.0)) throw ParameterError("query budget must be >= 1");
  if (!(epsilon >= 0.0)) throw ParameterError("epsilon must be >= 0");
  return epsilon / budget;
}

// ---------------------------------------------------------------------------
// Ensemble

struct PartModels {
  std::shared_ptr<const LanguageModel> first;
  std::shared_ptr<const LanguageModel> second;
};

class SubMixEnsemble {
 public:
  SubMixEnsemble(std::shared_ptr<const LanguageModel> public_model,
                 std::vector<PartModels> parts,
                 std::optional<Partition> provenance = std::nullopt)
      : public_model_(std::move(public_model)),
        parts_(std::move(parts)),
        provenance_(std::move(provenance)) {
    if (!public_model_) throw ConfigurationError("ensemble: no public model");
    if (parts_.size() < 2) {
      throw ConfigurationError("ensemble needs k >= 2 parts");
    }
    for (const auto& part : parts_) {
      if (!part.first || !part.second) {
        throw ConfigurationError("ensemble: missing subpart model");
      }
      if (part.first->vocab_size() != vocab_size() ||
          part.second->vocab_size() != vocab_size()) {
        throw DimensionError("ensemble: models disagree on vocabulary size");
      }
    }
  }

  std::size_t k() const { return parts_.size(); }
  std::size_t vocab_size() const { return public_model_->vocab_size(); }
  const LanguageModel& public_model() const { return *public_model_; }
  const PartModels& part(std::size_t i) const { return parts_.at(i); }
  const std::optional<Partition>& provenance() const { return provenance_; }

 private:
  std::shared_ptr<const LanguageModel> public_model_;
  std::vector<PartModels> parts_;
  std::optional<Partition> provenance_;
};

// Random k-part partition, then one fine-tuned copy of the public model per
// subpart.
inline SubMixEnsemble TrainSubMix(std::shared_ptr<const NGramModel> public_model,
                                  const std::vector<UserCorpus>& users,
                                  std::size_t k, double weight,
                                  std::uint64_t seed) {
  Partition partition = MakePartition(users, k, seed);
  std::vector<PartModels> parts;
  parts.reserve(k);
  for (const auto& part : partition.parts) {
    auto first = SelectUsers(users, part.first);
    auto second = SelectUsers(users, part.second);
    parts.push_back(PartModels{
        std::make_shared<NGramModel>(FineTune(*public_model, first, weight)),
        std::make_shared<NGramModel>(FineTune(*public_model, second, weight))});
  }
  return SubMixEnsemble(std::move(public_model), std::move(parts),
                        std::move(partition));
}

// ---------------------------------------------------------------------------
// Ledger

class PrivacyLedger {
 public:
  PrivacyLedger(std::size_t k, RenyiOrder alpha, double epsilon, double beta)
      : alpha_(alpha), epsilon_(epsilon), beta_(beta), remaining_(k, epsilon) {
    if (!(epsilon >= 0.0)) throw ParameterError("epsilon must be >= 0");
    if (!(beta >= 0.0)) throw ParameterError("beta must be >= 0");
  }

  std::size_t k() const { return remaining_.size(); }
  RenyiOrder alpha() const { return alpha_; }
  double epsilon() const { return epsilon_; }
  double beta() const { return beta_; }
  const std::vector<double>& remaining() const { return remaining_; }
  bool stopped() const { return stopped_; }
  std::size_t queries_answered() const { return queries_answered_; }

  // Subtracts one charge per part. Returns true when every part still has a
  // strictly positive budget afterwards.
  bool Charge(std::span<const double> charges) {
    if (charges.size() != remaining_.size()) {
      throw ConfigurationError("ledger: charge vector has wrong length");
    }
    bool all_positive = true;
    for (std::size_t i = 0; i < remaining_.size(); ++i) {
      if (!(charges[i] >= 0.0)) {
        throw ParameterError("ledger: charges must be nonnegative");
      }
      if (!std::isinf(remaining_[i])) remaining_[i] -= charges[i];
      all_positive = all_positive && remaining_[i] > 0.0;
    }
    return all_positive;
  }

  void Stop() { stopped_ = true; }
  void RecordQuery() { ++queries_answered_; }

 private:
  RenyiOrder alpha_;
  double epsilon_;
  double beta_;
  std::vector<double> remaining_;
  bool stopped_ = false;
  std::size_t queries_answered_ = 0;
};

// ---------------------------------------------------------------------------
// One query

struct StepOptions {
  DivergenceMode mode = DivergenceMode::kSymmetric;
  double temperature = 1.0;
  double tol = 1e-6;
};

// Everything computed for one query before the ledger is touched.
struct MixtureStep {
  std::vector<double> lambdas;
  double lambda_star = 0.0;
  Pmf mixture;   // lambda* h_bar + (1 - lambda*) h_pub
  Pmf released;  // temperature-scaled mixture
  std::vector<double> charges;
};

inline MixtureStep ComputeMixtureStep(std::span<const std::pair<Pmf, Pmf>> parts,
                                      const Pmf& pub, RenyiOrder alpha,
                                      double beta, const StepOptions& opts) {
  const std::size_t k = parts.size();
  if (k < 2) throw ConfigurationError("mixture step needs k >= 2 parts");
  MixtureStep step;
  std::vector<Pmf> averaged;
  averaged.reserve(k);
  step.lambdas.reserve(k);
  for (const auto& [first, second] : parts) {
    const Pmf pair[2] = {first, second};
    averaged.push_back(Average(pair));
    step.lambdas.push_back(
        OptimizeLambda(first, second, pub, alpha, beta, opts.mode, opts.tol));
  }
  step.lambda_star = internal::ShiftedMean(step.lambdas);
  step.mixture = Mix(step.lambda_star, Average(averaged), pub);
  step.released = TemperatureScale(step.mixture, opts.temperature);

  step.charges.resize(k);
  std::vector<double> other_lambdas;
  std::vector<Pmf> other_pmfs;
  for (std::size_t i = 0; i < k; ++i) {
    other_lambdas.clear();
    other_pmfs.clear();
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      other_lambdas.push_back(step.lambdas[j]);
      other_pmfs.push_back(averaged[j]);
    }
    const double lambda_loo = internal::ShiftedMean(other_lambdas);
    const Pmf without =
        TemperatureScale(Mix(lambda_loo, Average(other_pmfs), pub),
                         opts.temperature);
    step.charges[i] = SymRenyiDivergence(step.released, without, alpha);
  }
  return step;
}

struct StepOutcome {
  std::size_t t = 0;  // 1-based query index
  std::uint64_t context_hash = 0;
  TokenId token = 0;
  Pmf pmf;  // exactly the distribution `token` was drawn from
  double lambda_star = 0.0;
  std::vector<double> lambdas;
  std::vector<double> charges;
  std::vector<double> remaining;
  bool stop_issued = false;  // this query triggered STOP
  bool stopped = false;      // answered by the public model
};

// FNV-1a over the little-endian bytes of each token id.
inline std::uint64_t ContextHash(std::span<const TokenId> context) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (TokenId id : context) {
    for (int b = 0; b < 4; ++b) {
      h ^= (id >> (8 * b)) & 0xFFu;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

inline StepOutcome PublicStep(const LanguageModel& pub, std::size_t k,
                              std::span<const TokenId> context, Rng& rng,
                              double temperature) {
  StepOutcome out;
  out.context_hash = ContextHash(context);
  out.pmf = TemperatureScale(pub.NextTokenPmf(context), temperature);
  out.token = Sample(out.pmf, rng);
  out.lambdas.assign(k, 0.0);
  out.charges.assign(k, 0.0);
  out.stopped = true;
  return out;
}

// One query against the ensemble, updating the ledger. Every call consumes
// exactly one engine draw.
inline StepOutcome PredictStep(const SubMixEnsemble& ensemble,
                               PrivacyLedger& ledger,
                               std::span<const TokenId> context, Rng& rng,
                               const StepOptions& opts = {}) {
  if (ledger.k() != ensemble.k()) {
    throw ConfigurationError("ledger tracks " + std::to_string(ledger.k()) +
                             " parts but the ensemble has " +
                             std::to_string(ensemble.k()));
  }
  ledger.RecordQuery();
  if (ledger.stopped()) {
    StepOutcome out = PublicStep(ensemble.public_model(), ensemble.k(),
                                 context, rng, opts.temperature);
    out.remaining = ledger.remaining();
    return out;
  }

  std::vector<std::pair<Pmf, Pmf>> parts;
  parts.reserve(ensemble.k());
  for (std::size_t i = 0; i < ensemble.k(); ++i) {
    const PartModels& pm = ensemble.part(i);
    parts.emplace_back(pm.first->NextTokenPmf(context),
                       pm.second->NextTokenPmf(context));
  }
  const Pmf pub = ensemble.public_model().NextTokenPmf(context);
  MixtureStep step =
      ComputeMixtureStep(parts, pub, ledger.alpha(), ledger.beta(), opts);

  StepOutcome out;
  out.context_hash = ContextHash(context);
  out.lambda_star = step.lambda_star;
  out.lambdas = std::move(step.lambdas);
  out.charges = std::move(step.charges);
  if (ledger.Charge(out.charges)) {
    out.pmf = std::move(step.released);
  } else {
    ledger.Stop();
    out.stop_issued = true;
    out.stopped = true;
    out.pmf = TemperatureScale(pub, opts.temperature);
  }
  out.token = Sample(out.pmf, rng);
  out.remaining = ledger.remaining();
  return out;
}

// ---------------------------------------------------------------------------
// Sessions

// A prediction protocol that can be told to terminate; after termination it
// answers independently of private data.
class PredictionProtocol {
 public:
  virtual ~PredictionProtocol() = default;
  virtual StepOutcome Respond(std::span<const TokenId> context, Rng& rng) = 0;
  virtual void IssueStop() = 0;
  virtual bool stopped() const = 0;
  virtual std::size_t k() const = 0;
  virtual std::string_view mechanism() const = 0;
};

struct ProtocolParams {
  double alpha = 2.0;
  double epsilon = 1.0;
  double beta = 0.0;
  StepOptions step;
};

class SubMixSession final : public PredictionProtocol {
 public:
  SubMixSession(std::shared_ptr<const SubMixEnsemble> ensemble,
                const ProtocolParams& params)
      : ensemble_(std::move(ensemble)),
        ledger_(ensemble_->k(), RenyiOrder(params.alpha), params.epsilon,
                params.beta),
        opts_(params.step) {}

  StepOutcome Respond(std::span<const TokenId> context, Rng& rng) override {
    const bool forced = ledger_.stopped() && stop_pending_;
    StepOutcome out = PredictStep(*ensemble_, ledger_, context, rng, opts_);
    if (forced) {
      out.stop_issued = true;
      stop_pending_ = false;
    }
    out.t = ++t_;
    return out;
  }

  void IssueStop() override {
    if (!ledger_.stopped()) {
      ledger_.Stop();
      stop_pending_ = true;
    }
  }

  bool stopped() const override { return ledger_.stopped(); }
  std::size_t k() const override { return ensemble_->k(); }
  std::string_view mechanism() const override { return "submix"; }
  const PrivacyLedger& ledger() const { return ledger_; }

 private:
  std::shared_ptr<const SubMixEnsemble> ensemble_;
  PrivacyLedger ledger_;
  StepOptions opts_;
  std::size_t t_ = 0;
  bool stop_pending_ = false;
};

struct SessionTranscript {
  std::string mechanism = "submix";
  std::vector<StepOutcome> steps;
  std::optional<std::size_t> stop_index;  // T(P): t of the first stopped step

  void Append(StepOutcome outcome) {
    if (!stop_index && outcome.stopped) stop_index = outcome.t;
    steps.push_back(std::move(outcome));
  }
};

// Returns the next context given the transcript so far, or nullopt to end
// the session.
using QueryStream =
    std::function<std::optional<TokenSeq>(const SessionTranscript&)>;

inline QueryStream FixedQueries(std::vector<TokenSeq> contexts) {
  return [contexts = std::move(contexts)](
             const SessionTranscript& so_far) -> std::optional<TokenSeq> {
    if (so_far.steps.size() >= contexts.size()) return std::nullopt;
    return contexts[so_far.steps.size()];
  };
}

inline SessionTranscript RunSession(PredictionProtocol& protocol,
                                    const QueryStream& queries, Rng& rng) {
  SessionTranscript transcript;
  transcript.mechanism = std::string(protocol.mechanism());
  while (auto context = queries(transcript)) {
    transcript.Append(protocol.Respond(*context, rng));
  }
  return transcript;
}

// Per-part leakage actually released: the sum of charges over the queries
// answered before STOP. The charge computed at the stopping query is not
// released, since that query is answered publicly.
inline std::vector<double> ReleasedLeakage(const SessionTranscript& tr,
                                           std::size_t k) {
  std::vector<double> total(k, 0.0);
  for (const auto& step : tr.steps) {
    if (step.stopped) break;
    for (std::size_t i = 0; i < k && i < step.charges.size(); ++i) {
      total[i] += step.charges[i];
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Transcript JSON lines
//
// One object per query:
//   {"t":1,"context_hash":"<16 hex>","lambda_star":0.5,"lambdas":[...],
//    "charges":[...],"remaining":[...],"token":3,"stopped":false}
// Baseline mechanisms append "mechanism":"<name>". Non-finite numbers are
// written as the strings "inf", "-inf" and "nan".

inline nlohmann::json JsonNumber(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double NumberFromJson(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
    if (s == "nan") return std::nan("");
    throw FormatError("not a number: " + s);
  }
  return j.get<double>();
}

inline nlohmann::json JsonNumbers(std::span<const double> vs) {
  nlohmann::json arr = nlohmann::json::array();
  for (double v : vs) arr.push_back(JsonNumber(v));
  return arr;
}

inline std::string HashHex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

inline nlohmann::ordered_json StepToJson(const StepOutcome& s,
                                         std::string_view mechanism = "") {
  nlohmann::ordered_json j;
  j["t"] = s.t;
  j["context_hash"] = HashHex(s.context_hash);
  j["lambda_star"] = JsonNumber(s.lambda_star);
  j["lambdas"] = JsonNumbers(s.lambdas);
  j["charges"] = JsonNumbers(s.charges);
  j["remaining"] = JsonNumbers(s.remaining);
  j["token"] = s.token;
  j["stopped"] = s.stopped;
  if (!mechanism.empty()) j["mechanism"] = mechanism;
  return j;
}

inline std::string TranscriptToJsonl(const SessionTranscript& tr) {
  const std::string_view tag =
      tr.mechanism == "submix" ? std::string_view() : tr.mechanism;
  std::string out;
  for (const auto& step : tr.steps) {
    out += StepToJson(step, tag).dump();
    out += '\n';
  }
  return out;
}

}  // namespace submix

#endif  // SUBMIX_PROTOCOL_HPP_
