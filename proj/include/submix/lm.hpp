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

// Next-token model interface and the additively smoothed n-gram backend.
//
// "Fine-tuning" an n-gram model adds weighted private counts on top of the
// public counts, so fine-tuning on the empty set returns the public model.

#ifndef SUBMIX_LM_HPP_
#define SUBMIX_LM_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "submix/corpus.hpp"
#include "submix/error.hpp"
#include "submix/probdist.hpp"

namespace submix {

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  // Distribution of the next token given everything seen so far. Must be
  // deterministic for a fixed model and context.
  virtual Pmf NextTokenPmf(std::span<const TokenId> context) const = 0;
  virtual std::size_t vocab_size() const = 0;
};

// Context-independent model; the trivial backend for protocol tests.
class ConstantModel final : public LanguageModel {
 public:
  explicit ConstantModel(Pmf pmf) : pmf_(std::move(pmf)) {}
  Pmf NextTokenPmf(std::span<const TokenId>) const override { return pmf_; }
  std::size_t vocab_size() const override { return pmf_.vocab_size(); }

 private:
  Pmf pmf_;
};

struct NGramParams {
  std::size_t order = 3;
  double k_add = 0.1;
};

// Count-table model: P(z | c) = (count(c, z) + k_add) / (total(c) + k_add V),
// where c is the last (order - 1) tokens of the context. Contexts shorter than
// order - 1 occur at document starts and are keyed by their full length.
class NGramModel final : public LanguageModel {
 public:
  static constexpr std::string_view kFormatName = "submix-ngram";
  static constexpr int kFormatVersion = 1;

  NGramModel(std::size_t vocab_size, NGramParams params)
      : vocab_size_(vocab_size), params_(params) {
    if (vocab_size == 0) throw ParameterError("n-gram: empty vocabulary");
    if (params.order < 1) throw ParameterError("n-gram: order must be >= 1");
    if (!(params.k_add > 0.0)) {
      throw ParameterError("n-gram: smoothing constant must be > 0");
    }
  }

  // Adds `weight` to the count of every (context, next token) window of the
  // document.
  void AddDocument(std::span<const TokenId> doc, double weight = 1.0) {
    if (!(weight > 0.0) || std::isinf(weight)) {
      throw ParameterError("n-gram: count weight must be positive and finite");
    }
    const std::size_t span_len = params_.order - 1;
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (doc[i] >= vocab_size_) {
        throw DimensionError("n-gram: token id " + std::to_string(doc[i]) +
                             " outside vocabulary of " +
                             std::to_string(vocab_size_));
      }
      const std::size_t start = i >= span_len ? i - span_len : 0;
      TokenSeq key(doc.begin() + start, doc.begin() + i);
      ContextCounts& cc = table_[std::move(key)];
      cc.counts[doc[i]] += weight;
      cc.total += weight;
    }
  }

  Pmf NextTokenPmf(std::span<const TokenId> context) const override {
    const double k = params_.k_add;
    const double v = static_cast<double>(vocab_size_);
    auto it = table_.find(Key(context));
    if (it == table_.end()) return Pmf::Uniform(vocab_size_);
    const ContextCounts& cc = it->second;
    const double denom = cc.total + k * v;
    std::vector<double> probs(vocab_size_, k / denom);
    for (const auto& [token, count] : cc.counts) {
      probs[token] = (count + k) / denom;
    }
    return Pmf(std::move(probs));
  }

  double Count(std::span<const TokenId> context, TokenId token) const {
    auto it = table_.find(Key(context));
    if (it == table_.end()) return 0.0;
    auto jt = it->second.counts.find(token);
    return jt == it->second.counts.end() ? 0.0 : jt->second;
  }

  double ContextTotal(std::span<const TokenId> context) const {
    auto it = table_.find(Key(context));
    return it == table_.end() ? 0.0 : it->second.total;
  }

  std::size_t vocab_size() const override { return vocab_size_; }
  std::size_t order() const { return params_.order; }
  double k_add() const { return params_.k_add; }
  const NGramParams& params() const { return params_; }
  std::size_t num_contexts() const { return table_.size(); }

  nlohmann::json ToJson() const {
    nlohmann::json contexts = nlohmann::json::array();
    for (const auto& [key, cc] : table_) {
      nlohmann::json counts = nlohmann::json::array();
      for (const auto& [token, count] : cc.counts) {
        counts.push_back({token, count});
      }
      contexts.push_back({{"context", key}, {"total", cc.total},
                          {"counts", std::move(counts)}});
    }
    return {{"format", kFormatName},
            {"version", kFormatVersion},
            {"vocab_size", vocab_size_},
            {"order", params_.order},
            {"k_add", params_.k_add},
            {"contexts", std::move(contexts)}};
  }

  static NGramModel FromJson(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("format") || !j["format"].is_string() ||
        j["format"].get<std::string>() != kFormatName) {
      throw FormatError("not an n-gram model file (bad header)");
    }
    if (!j.contains("version") || !j["version"].is_number_integer()) {
      throw FormatError("n-gram model file has no version");
    }
    if (j["version"].get<int>() != kFormatVersion) {
      throw VersionError("n-gram model format version " +
                         std::to_string(j["version"].get<int>()) +
                         " is not supported (expected " +
                         std::to_string(kFormatVersion) + ")");
    }
    try {
      NGramModel model(j.at("vocab_size").get<std::size_t>(),
                       NGramParams{j.at("order").get<std::size_t>(),
                                   j.at("k_add").get<double>()});
      for (const auto& entry : j.at("contexts")) {
        auto key = entry.at("context").get<TokenSeq>();
        ContextCounts cc;
        cc.total = entry.at("total").get<double>();
        for (const auto& pair : entry.at("counts")) {
          const auto token = pair.at(0).get<TokenId>();
          if (token >= model.vocab_size_) {
            throw FormatError("n-gram model file: token out of range");
          }
          cc.counts[token] = pair.at(1).get<double>();
        }
        model.table_.emplace(std::move(key), std::move(cc));
      }
      return model;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed n-gram model file: ") +
                        e.what());
    }
  }

  void Save(const std::filesystem::path& path) const {
    WriteFile(path, ToJson().dump() + "\n");
  }

  static NGramModel Load(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(ReadFile(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
    return FromJson(j);
  }

 private:
  struct ContextCounts {
    std::map<TokenId, double> counts;
    double total = 0.0;
  };

  TokenSeq Key(std::span<const TokenId> context) const {
    const std::size_t span_len = params_.order - 1;
    const std::size_t start =
        context.size() > span_len ? context.size() - span_len : 0;
    return TokenSeq(context.begin() + start, context.end());
  }

  std::size_t vocab_size_;
  NGramParams params_;
  std::map<TokenSeq, ContextCounts> table_;
};

// The public model: counts accumulated over every document with weight 1.
// An empty corpus yields the uniform model.
inline NGramModel Pretrain(std::span<const TokenSeq> documents,
                           std::size_t vocab_size, NGramParams params = {}) {
  NGramModel model(vocab_size, params);
  for (const auto& doc : documents) {
    if (!doc.empty()) model.AddDocument(doc, 1.0);
  }
  return model;
}

// Copy of `base` with `weight` times the subpart's counts added. `base` is
// left untouched.
inline NGramModel FineTune(const NGramModel& base,
                           std::span<const UserCorpus> subpart,
                           double weight = 10.0) {
  if (!(weight > 0.0)) throw ParameterError("fine-tune weight must be > 0");
  NGramModel model = base;
  for (const auto& user : subpart) {
    for (const auto& doc : user.documents) {
      if (!doc.empty()) model.AddDocument(doc, weight);
    }
  }
  return model;
}

// Elementwise mean of the two models' next-token distributions.
inline Pmf AvgPairPmf(const LanguageModel& a, const LanguageModel& b,
                      std::span<const TokenId> context) {
  if (a.vocab_size() != b.vocab_size()) {
    throw DimensionError("model pair has mismatched vocabularies");
  }
  const Pmf pair[2] = {a.NextTokenPmf(context), b.NextTokenPmf(context)};
  return Average(pair);
}

}  // namespace submix

#endif  // SUBMIX_LM_HPP_
