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

// Finite-vocabulary probability mass functions and the Renyi divergence
// family. All logarithms are natural.

#ifndef SUBMIX_PROBDIST_HPP_
#define SUBMIX_PROBDIST_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "submix/error.hpp"
#include "submix/random.hpp"

namespace submix {

using TokenId = std::uint32_t;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

class Pmf;
namespace internal {
// Library-internal producers whose output is normalized by construction.
struct PmfFactory {
  static Pmf Make(std::vector<double> probs);
};
}  // namespace internal

// A categorical distribution over token ids [0, vocab_size).
//
// Invariants: every entry is >= 0 and the entries sum to 1 within
// kSumTolerance. Construction from raw probabilities validates both.
class Pmf {
 public:
  static constexpr double kSumTolerance = 1e-9;

  Pmf() = default;

  explicit Pmf(std::vector<double> probs) : probs_(std::move(probs)) {
    Validate();
  }

  static Pmf Uniform(std::size_t vocab_size) {
    if (vocab_size == 0) throw ParameterError("Pmf: empty vocabulary");
    return Pmf(std::vector<double>(vocab_size, 1.0 / vocab_size), Trusted{});
  }

  static Pmf PointMass(std::size_t vocab_size, TokenId token) {
    if (token >= vocab_size) throw DimensionError("Pmf: token out of range");
    std::vector<double> p(vocab_size, 0.0);
    p[token] = 1.0;
    return Pmf(std::move(p), Trusted{});
  }

  // Normalizes nonnegative weights. Throws if all weights are zero.
  static Pmf FromWeights(std::vector<double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || std::isinf(w)) {
        throw ParameterError("Pmf: weights must be finite and nonnegative");
      }
      total += w;
    }
    if (!(total > 0.0)) throw ParameterError("Pmf: weights sum to zero");
    for (double& w : weights) w /= total;
    return Pmf(std::move(weights), Trusted{});
  }

  std::size_t vocab_size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }
  const std::vector<double>& values() const { return probs_; }

  bool StrictlyPositive() const {
    return std::all_of(probs_.begin(), probs_.end(),
                       [](double v) { return v > 0.0; });
  }

  TokenId Argmax() const {
    return static_cast<TokenId>(
        std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
  }

  friend bool operator==(const Pmf& a, const Pmf& b) {
    return a.probs_ == b.probs_;
  }

 private:
  struct Trusted {};
  Pmf(std::vector<double> probs, Trusted) : probs_(std::move(probs)) {}

  void Validate() const {
    if (probs_.empty()) throw ParameterError("Pmf: empty vocabulary");
    double total = 0.0;
    for (double v : probs_) {
      if (!(v >= 0.0) || std::isinf(v)) {
        throw ParameterError("Pmf: entries must be finite and nonnegative");
      }
      total += v;
    }
    if (std::fabs(total - 1.0) > kSumTolerance) {
      throw ParameterError("Pmf: entries sum to " + std::to_string(total));
    }
  }

  friend struct internal::PmfFactory;

  std::vector<double> probs_;
};

// Order of a Renyi divergence: a real number > 1, or infinity (which selects
// the max divergence).
class RenyiOrder {
 public:
  explicit RenyiOrder(double alpha) : alpha_(alpha) {
    if (!(alpha > 1.0)) {
      throw ParameterError("Renyi order must be > 1, got " +
                           std::to_string(alpha));
    }
  }
  static RenyiOrder Infinity() { return RenyiOrder(kInfinity); }

  double value() const { return alpha_; }
  bool is_infinite() const { return std::isinf(alpha_); }

 private:
  double alpha_;
};

namespace internal {

inline Pmf PmfFactory::Make(std::vector<double> probs) {
  return Pmf(std::move(probs), Pmf::Trusted{});
}

inline void CheckSameVocab(const Pmf& p, const Pmf& q) {
  if (p.vocab_size() != q.vocab_size()) {
    throw DimensionError("vocabulary size mismatch: " +
                         std::to_string(p.vocab_size()) + " vs " +
                         std::to_string(q.vocab_size()));
  }
}

// Mean of equally weighted values written as ref + sum_j (x_j - ref) / n so
// that n identical inputs reproduce the input bit-for-bit.
inline double ShiftedMean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const double ref = xs.front();
  double acc = 0.0;
  for (double x : xs) acc += (x - ref);
  return ref + acc / static_cast<double>(xs.size());
}

inline std::vector<double> Renormalized(std::vector<double> v) {
  double total = 0.0;
  for (double x : v) total += x;
  if (total != 1.0) {
    for (double& x : v) x /= total;
  }
  return v;
}

}  // namespace internal

// max over x in supp(p) of ln p(x) - ln q(x); infinity if p puts mass where
// q has none.
inline double MaxDivergence(const Pmf& p, const Pmf& q) {
  internal::CheckSameVocab(p, q);
  double best = 0.0;
  for (std::size_t x = 0; x < p.vocab_size(); ++x) {
    if (p[x] <= 0.0) continue;
    if (q[x] <= 0.0) return kInfinity;
    best = std::max(best, std::log(p[x]) - std::log(q[x]));
  }
  return best;
}

// D_alpha(p || q) = ln(sum_x p(x)^alpha q(x)^(1-alpha)) / (alpha - 1).
// Terms with p(x) = 0 contribute nothing; p(x) > 0 = q(x) gives infinity.
inline double RenyiDivergence(const Pmf& p, const Pmf& q, RenyiOrder order) {
  internal::CheckSameVocab(p, q);
  if (order.is_infinite()) return MaxDivergence(p, q);
  if (p == q) return 0.0;
  const double a = order.value();

  double sum = 0.0;
  bool overflow = false;
  for (std::size_t x = 0; x < p.vocab_size(); ++x) {
    if (p[x] <= 0.0) continue;
    if (q[x] <= 0.0) return kInfinity;
    const double term = p[x] * std::pow(p[x] / q[x], a - 1.0);
    if (!std::isfinite(term)) {
      overflow = true;
      break;
    }
    sum += term;
  }
  if (overflow || !std::isfinite(sum)) {
    // Log-sum-exp over a*ln p + (1-a)*ln q.
    std::vector<double> logs;
    logs.reserve(p.vocab_size());
    for (std::size_t x = 0; x < p.vocab_size(); ++x) {
      if (p[x] <= 0.0) continue;
      if (q[x] <= 0.0) return kInfinity;
      logs.push_back(a * std::log(p[x]) + (1.0 - a) * std::log(q[x]));
    }
    const double m = *std::max_element(logs.begin(), logs.end());
    double s = 0.0;
    for (double l : logs) s += std::exp(l - m);
    return std::max(0.0, (m + std::log(s)) / (a - 1.0));
  }
  return std::max(0.0, std::log(sum) / (a - 1.0));
}

inline double SymRenyiDivergence(const Pmf& p, const Pmf& q,
                                 RenyiOrder order) {
  return std::max(RenyiDivergence(p, q, order), RenyiDivergence(q, p, order));
}

// lambda * p + (1 - lambda) * q. The endpoints return an operand unchanged.
inline Pmf Mix(double lambda, const Pmf& p, const Pmf& q) {
  internal::CheckSameVocab(p, q);
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ParameterError("mixing weight must lie in [0, 1], got " +
                         std::to_string(lambda));
  }
  if (lambda == 0.0) return q;
  if (lambda == 1.0) return p;
  std::vector<double> r(p.vocab_size());
  for (std::size_t x = 0; x < r.size(); ++x) {
    r[x] = lambda * p[x] + (1.0 - lambda) * q[x];
  }
  return internal::PmfFactory::Make(internal::Renormalized(std::move(r)));
}

// Equal-weight average of one or more pmfs. Averaging n copies of the same
// pmf returns that pmf exactly.
inline Pmf Average(std::span<const Pmf> pmfs) {
  if (pmfs.empty()) throw ParameterError("Average: no distributions");
  const std::size_t v = pmfs.front().vocab_size();
  for (const Pmf& p : pmfs) internal::CheckSameVocab(pmfs.front(), p);
  if (pmfs.size() == 1) return pmfs.front();
  std::vector<double> column(pmfs.size());
  std::vector<double> r(v);
  bool all_equal = true;
  for (std::size_t x = 0; x < v; ++x) {
    for (std::size_t j = 0; j < pmfs.size(); ++j) {
      column[j] = pmfs[j][x];
      all_equal = all_equal && column[j] == column[0];
    }
    r[x] = internal::ShiftedMean(column);
  }
  if (all_equal) return pmfs.front();
  return internal::PmfFactory::Make(internal::Renormalized(std::move(r)));
}

// Inverse-CDF draw in token-id order. Consumes exactly one engine call.
inline TokenId Sample(const Pmf& p, Rng& rng) {
  const double u = Uniform01(rng);
  double cumulative = 0.0;
  TokenId last_supported = 0;
  for (std::size_t x = 0; x < p.vocab_size(); ++x) {
    if (p[x] <= 0.0) continue;
    cumulative += p[x];
    last_supported = static_cast<TokenId>(x);
    if (u < cumulative) return last_supported;
  }
  return last_supported;
}

// Entries proportional to p(x)^(1/tau); zero entries stay zero. tau = 1 is
// the identity.
inline Pmf TemperatureScale(const Pmf& p, double tau) {
  if (!(tau > 0.0) || std::isinf(tau)) {
    throw ParameterError("temperature must be positive and finite");
  }
  if (tau == 1.0) return p;
  double max_log = -kInfinity;
  for (double v : p.probs()) {
    if (v > 0.0) max_log = std::max(max_log, std::log(v));
  }
  std::vector<double> r(p.vocab_size(), 0.0);
  double total = 0.0;
  for (std::size_t x = 0; x < r.size(); ++x) {
    if (p[x] <= 0.0) continue;
    r[x] = std::exp((std::log(p[x]) - max_log) / tau);
    total += r[x];
  }
  for (double& v : r) v /= total;
  return internal::PmfFactory::Make(std::move(r));
}

inline double LInfDistance(const Pmf& p, const Pmf& q) {
  internal::CheckSameVocab(p, q);
  double d = 0.0;
  for (std::size_t x = 0; x < p.vocab_size(); ++x) {
    d = std::max(d, std::fabs(p[x] - q[x]));
  }
  return d;
}

}  // namespace submix

#endif  // SUBMIX_PROBDIST_HPP_
