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

// Comparison mechanisms over a disjoint ensemble of k part models:
// subsample-and-aggregate with Laplace noise on the averaged pmf, and GNMax
// (Gaussian-noised argmax votes). Both charge a data-independent Renyi cost
// per query and share the SubMix stop-and-fallback session shape.

#ifndef SUBMIX_BASELINES_HPP_
#define SUBMIX_BASELINES_HPP_

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "submix/corpus.hpp"
#include "submix/error.hpp"
#include "submix/lm.hpp"
#include "submix/probdist.hpp"
#include "submix/protocol.hpp"
#include "submix/random.hpp"

namespace submix {

using ModelList = std::vector<std::shared_ptr<const LanguageModel>>;

// Renyi divergence of order alpha between Laplace(0, b) and Laplace(delta, b):
// (1/(a-1)) ln[ a/(2a-1) e^{(a-1)t} + (a-1)/(2a-1) e^{-a t} ], t = delta / b.
// Infinite order gives the pure-DP value t.
inline double LaplaceRdp(double alpha, double delta, double b) {
  (void)RenyiOrder(alpha);
  if (!(b > 0.0)) throw ParameterError("Laplace scale must be > 0");
  if (!(delta >= 0.0)) throw ParameterError("sensitivity must be >= 0");
  const double t = delta / b;
  if (std::isinf(alpha)) return t;
  if (t == 0.0) return 0.0;
  const double a = alpha;
  const double l1 = std::log(a / (2 * a - 1)) + (a - 1) * t;
  const double l2 = std::log((a - 1) / (2 * a - 1)) - a * t;
  const double m = std::max(l1, l2);
  const double lse = m + std::log(std::exp(l1 - m) + std::exp(l2 - m));
  return std::max(0.0, lse / (a - 1));
}

// Per-query S&A charge. Removing one part moves the averaged pmf by at most
// 1/k in L1, split evenly between mass gained and mass lost; the worst case
// puts each half on a single coordinate.
inline double SaCharge(double alpha, std::size_t k, double b) {
  if (k < 1) throw ParameterError("S&A needs k >= 1 models");
  return 2.0 * LaplaceRdp(alpha, 0.5 / static_cast<double>(k), b);
}

// Data-independent Gaussian RDP for one removed vote.
inline double GnmaxCharge(double alpha, double sigma) {
  (void)RenyiOrder(alpha);
  if (!(sigma > 0.0)) throw ParameterError("GNMax sigma must be > 0");
  return alpha / (2.0 * sigma * sigma);
}

struct SaConfig {
  double laplace_scale = 1.0;
  double alpha = 2.0;
};

struct GnmaxConfig {
  double sigma = 1.0;
  double alpha = 2.0;
};

struct SaRelease {
  Pmf average;
  std::vector<double> noise;
  std::vector<double> raw;  // average + noise, before clamping
  Pmf pmf;                  // clamped and renormalized
  double charge = 0.0;
};

inline void CheckModels(const ModelList& models) {
  if (models.empty()) throw ParameterError("baseline needs k >= 1 models");
  for (const auto& m : models) {
    if (!m) throw ParameterError("baseline: null model");
    if (m->vocab_size() != models.front()->vocab_size()) {
      throw DimensionError("baseline models disagree on vocabulary size");
    }
  }
}

inline SaRelease SaPredict(const ModelList& models,
                           std::span<const TokenId> context,
                           const SaConfig& cfg, Rng& rng) {
  CheckModels(models);
  SaRelease r;
  r.charge = SaCharge(cfg.alpha, models.size(), cfg.laplace_scale);
  std::vector<Pmf> pmfs;
  pmfs.reserve(models.size());
  for (const auto& m : models) pmfs.push_back(m->NextTokenPmf(context));
  r.average = Average(pmfs);
  const std::size_t v = r.average.vocab_size();
  r.noise.resize(v);
  r.raw.resize(v);
  std::vector<double> clamped(v);
  for (std::size_t x = 0; x < v; ++x) {
    r.noise[x] = Laplace(rng, cfg.laplace_scale);
    r.raw[x] = r.average[x] + r.noise[x];
    clamped[x] = std::max(0.0, r.raw[x]);
  }
  const bool any = std::any_of(clamped.begin(), clamped.end(),
                               [](double c) { return c > 0.0; });
  r.pmf = any ? Pmf::FromWeights(std::move(clamped)) : Pmf::Uniform(v);
  return r;
}

struct GnmaxRelease {
  std::vector<double> votes;
  std::vector<double> noisy;
  TokenId token = 0;
  double charge = 0.0;
};

inline std::vector<double> ArgmaxVotes(const ModelList& models,
                                       std::span<const TokenId> context) {
  CheckModels(models);
  std::vector<double> votes(models.front()->vocab_size(), 0.0);
  for (const auto& m : models) votes[m->NextTokenPmf(context).Argmax()] += 1;
  return votes;
}

inline TokenId NoisyArgmax(std::span<const double> votes, double sigma,
                           Rng& rng, std::vector<double>* noisy = nullptr) {
  TokenId best = 0;
  double best_value = -kInfinity;
  if (noisy) noisy->resize(votes.size());
  for (std::size_t z = 0; z < votes.size(); ++z) {
    const double value = votes[z] + sigma * StandardNormal(rng);
    if (noisy) (*noisy)[z] = value;
    if (value > best_value) {
      best_value = value;
      best = static_cast<TokenId>(z);
    }
  }
  return best;
}

inline GnmaxRelease GnmaxPredict(const ModelList& models,
                                 std::span<const TokenId> context,
                                 const GnmaxConfig& cfg, Rng& rng) {
  GnmaxRelease r;
  r.charge = GnmaxCharge(cfg.alpha, cfg.sigma);
  r.votes = ArgmaxVotes(models, context);
  r.token = NoisyArgmax(r.votes, cfg.sigma, rng, &r.noisy);
  return r;
}

// Lower bound on -ln q_x, where q_x is the probability that the noisy argmax
// releases x. Uses q_x <= 1 / |{z : n_z >= n_x}| and
// q_x <= Pr[N(n_x - n_{z*}, 2 sigma^2) >= 0] with z* the top vote among z != x.
inline double GnmaxPerplexityLowerBound(std::span<const double> votes,
                                        TokenId x, double sigma) {
  if (x >= votes.size()) throw DimensionError("GNMax bound: token out of range");
  if (!(sigma > 0.0)) throw ParameterError("GNMax sigma must be > 0");
  if (votes.size() == 1) return 0.0;
  std::size_t at_least = 0;
  double top_other = -kInfinity;
  for (std::size_t z = 0; z < votes.size(); ++z) {
    if (votes[z] >= votes[x]) ++at_least;
    if (z != x) top_other = std::max(top_other, votes[z]);
  }
  const double bound1 = 1.0 / static_cast<double>(at_least);
  const double d = (votes[x] - top_other) / (std::sqrt(2.0) * sigma);
  const double bound2 = 0.5 * std::erfc(-d / std::sqrt(2.0));
  return -std::log(std::min(bound1, bound2));
}

// Noise level whose per-query charge equals `per_query`. Infinite targets map
// to the smallest bracketed scale.
inline double CalibrateLaplaceScale(double alpha, std::size_t k,
                                    double per_query) {
  if (!(per_query >= 0.0)) throw ParameterError("per-query target must be >= 0");
  constexpr double kMinScale = 1e-12;
  constexpr double kMaxScale = 1e12;
  if (std::isinf(per_query)) return kMinScale;
  if (per_query == 0.0) return kMaxScale;
  double lo = std::log(kMinScale);
  double hi = std::log(kMaxScale);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (SaCharge(alpha, k, std::exp(mid)) > per_query) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(hi);
}

inline double CalibrateGnmaxSigma(double alpha, double per_query) {
  (void)RenyiOrder(alpha);
  if (std::isinf(alpha)) throw ParameterError("GNMax needs a finite order");
  if (!(per_query >= 0.0)) throw ParameterError("per-query target must be >= 0");
  if (std::isinf(per_query)) return 1e-12;
  if (per_query == 0.0) return 1e12;
  return std::sqrt(alpha / (2.0 * per_query));
}

// One model per part, fine-tuned on the part's full user set. Uses the same
// partition as TrainSubMix for the same seed.
inline ModelList TrainPartModels(const NGramModel& public_model,
                                 const std::vector<UserCorpus>& users,
                                 std::size_t k, double weight,
                                 std::uint64_t seed) {
  const Partition partition = MakePartition(users, k, seed);
  ModelList models;
  for (const auto& part : partition.parts) {
    std::vector<std::string> ids = part.first;
    ids.insert(ids.end(), part.second.begin(), part.second.end());
    const auto members = SelectUsers(users, ids);
    models.push_back(
        std::make_shared<NGramModel>(FineTune(public_model, members, weight)));
  }
  return models;
}

// ---------------------------------------------------------------------------
// Sessions

enum class BaselineKind { kSubsampleAggregate, kGnmax };

struct BaselineParams {
  BaselineKind kind = BaselineKind::kSubsampleAggregate;
  double alpha = 2.0;
  double epsilon = 1.0;
  double laplace_scale = 1.0;  // S&A
  double sigma = 1.0;          // GNMax
};

class BaselineSession final : public PredictionProtocol {
 public:
  BaselineSession(ModelList models,
                  std::shared_ptr<const LanguageModel> public_model,
                  const BaselineParams& params)
      : models_(std::move(models)),
        public_model_(std::move(public_model)),
        params_(params),
        ledger_(models_.size(), RenyiOrder(params.alpha), params.epsilon,
                0.0) {
    CheckModels(models_);
    if (!public_model_ ||
        public_model_->vocab_size() != models_.front()->vocab_size()) {
      throw ConfigurationError("baseline: public model missing or mismatched");
    }
    charge_ = params_.kind == BaselineKind::kGnmax
                  ? GnmaxCharge(params_.alpha, params_.sigma)
                  : SaCharge(params_.alpha, models_.size(),
                             params_.laplace_scale);
  }

  StepOutcome Respond(std::span<const TokenId> context, Rng& rng) override {
    const bool forced = ledger_.stopped() && stop_pending_;
    stop_pending_ = false;
    ledger_.RecordQuery();
    StepOutcome out;
    if (!ledger_.stopped()) {
      const std::vector<double> charges(models_.size(), charge_);
      out.charges = charges;
      if (ledger_.Charge(charges)) {
        if (params_.kind == BaselineKind::kGnmax) {
          const GnmaxRelease r = GnmaxPredict(
              models_, context, {params_.sigma, params_.alpha}, rng);
          out.pmf = Pmf::PointMass(public_model_->vocab_size(), r.token);
          out.token = r.token;
        } else {
          const SaRelease r = SaPredict(
              models_, context, {params_.laplace_scale, params_.alpha}, rng);
          out.pmf = r.pmf;
          out.token = Sample(out.pmf, rng);
        }
      } else {
        ledger_.Stop();
        out.stop_issued = true;
      }
    } else {
      out.charges.assign(models_.size(), 0.0);
      out.stop_issued = forced;
    }
    if (ledger_.stopped()) {
      out.stopped = true;
      out.pmf = public_model_->NextTokenPmf(context);
      out.token = Sample(out.pmf, rng);
    }
    out.context_hash = ContextHash(context);
    out.remaining = ledger_.remaining();
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
  std::size_t k() const override { return models_.size(); }
  std::string_view mechanism() const override {
    return params_.kind == BaselineKind::kGnmax ? "gnmax" : "sa";
  }
  double per_query_charge() const { return charge_; }
  const PrivacyLedger& ledger() const { return ledger_; }
  const ModelList& models() const { return models_; }

 private:
  ModelList models_;
  std::shared_ptr<const LanguageModel> public_model_;
  BaselineParams params_;
  PrivacyLedger ledger_;
  double charge_ = 0.0;
  std::size_t t_ = 0;
  bool stop_pending_ = false;
};

}  // namespace submix

#endif  // SUBMIX_BASELINES_HPP_
