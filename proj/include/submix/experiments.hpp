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

// Evaluation harness: predictive perplexity of models and live protocols,
// privacy/utility sweeps, and the secret-code extraction game.

#ifndef SUBMIX_EXPERIMENTS_HPP_
#define SUBMIX_EXPERIMENTS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "submix/accounting.hpp"
#include "submix/baselines.hpp"
#include "submix/corpus.hpp"
#include "submix/error.hpp"
#include "submix/lm.hpp"
#include "submix/probdist.hpp"
#include "submix/protocol.hpp"
#include "submix/random.hpp"

namespace submix {

// ---------------------------------------------------------------------------
// Perplexity

// Negative log-likelihood of `next` after `context`. May be stateful (a live
// protocol answers one query per call).
using TokenScorer =
    std::function<double(std::span<const TokenId> context, TokenId next)>;

struct PerplexityReport {
  std::string mechanism;
  double epsilon = 0.0;
  double alpha = 0.0;
  double budget = 0.0;
  double perplexity = 0.0;  // mean over samples
  std::vector<double> per_sample;
  std::size_t tokens = 0;
};

// exp(mean NLL) per sample over a context truncated to the last `window`
// tokens, averaged across samples. Stops after `max_tokens` scored tokens; a
// partially scored sample counts with the tokens it has.
inline PerplexityReport EvaluatePerplexity(
    const TokenScorer& score, std::span<const TokenSeq> heldout,
    std::size_t window, std::size_t max_tokens = SIZE_MAX) {
  if (window < 1) throw ParameterError("context window L must be >= 1");
  PerplexityReport report;
  for (const TokenSeq& sample : heldout) {
    if (sample.empty()) throw ParameterError("empty held-out sample");
    if (report.tokens >= max_tokens) break;
    double nll = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < sample.size() && report.tokens < max_tokens;
         ++i) {
      const std::size_t start = i > window ? i - window : 0;
      std::span<const TokenId> context(sample.data() + start, i - start);
      nll += score(context, sample[i]);
      ++n;
      ++report.tokens;
    }
    report.per_sample.push_back(std::exp(nll / static_cast<double>(n)));
  }
  if (!report.per_sample.empty()) {
    double total = 0.0;
    for (double p : report.per_sample) total += p;
    report.perplexity = total / static_cast<double>(report.per_sample.size());
  }
  return report;
}

inline double NegLog(double p) { return p > 0.0 ? -std::log(p) : kInfinity; }

inline TokenScorer ModelScorer(const LanguageModel& model) {
  return [&model](std::span<const TokenId> context, TokenId next) {
    return NegLog(model.NextTokenPmf(context)[next]);
  };
}

// Scores with the pmf the protocol sampled from. Every call is a real query
// and is charged as such.
inline TokenScorer ProtocolScorer(PredictionProtocol& protocol, Rng& rng) {
  return [&protocol, &rng](std::span<const TokenId> context, TokenId next) {
    return NegLog(protocol.Respond(context, rng).pmf[next]);
  };
}

// GNMax releases a token, not a distribution; pre-stop queries are scored
// with the lower bound on -ln q_x, post-stop ones with the public model.
inline TokenScorer GnmaxScorer(BaselineSession& session, double sigma,
                               Rng& rng) {
  return [&session, sigma, &rng](std::span<const TokenId> context,
                                 TokenId next) {
    const StepOutcome out = session.Respond(context, rng);
    if (out.stopped) return NegLog(out.pmf[next]);
    const auto votes = ArgmaxVotes(session.models(), context);
    return GnmaxPerplexityLowerBound(votes, next, sigma);
  };
}

// Consecutive chunks of at most `len` tokens from each document.
inline std::vector<TokenSeq> ChunkSequences(std::span<const TokenSeq> docs,
                                            std::size_t len) {
  if (len < 1) throw ParameterError("chunk length must be >= 1");
  std::vector<TokenSeq> out;
  for (const auto& doc : docs) {
    for (std::size_t s = 0; s < doc.size(); s += len) {
      const std::size_t e = std::min(doc.size(), s + len);
      out.emplace_back(doc.begin() + s, doc.begin() + e);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepData {
  std::shared_ptr<const NGramModel> public_model;
  std::vector<UserCorpus> users;
  std::vector<TokenSeq> heldout;
};

struct SweepGrid {
  std::vector<std::string> mechanisms = {"submix"};
  std::vector<double> epsilons = {1.0};
  std::vector<double> alphas = {2.0};
  std::vector<std::size_t> budgets = {256};
  std::vector<std::size_t> ks = {4};
  std::size_t window = 32;
  double weight = 10.0;
  std::optional<double> beta;  // overrides eps / B for SubMix
  DivergenceMode mode = DivergenceMode::kSymmetric;
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

struct SweepRow {
  std::string mechanism;
  double epsilon = 0.0;
  double alpha = 0.0;
  std::size_t budget = 0;
  std::size_t k = 0;
  double beta = 0.0;
  double perplexity = 0.0;
  std::size_t tokens = 0;
  std::uint64_t seed = 0;
};

// Evaluates one grid point: a fresh session answering up to B held-out tokens.
inline SweepRow RunSweepPoint(const SweepData& data, const SweepGrid& grid,
                              const std::string& mechanism, double epsilon,
                              double alpha, std::size_t budget, std::size_t k,
                              std::uint64_t point_seed,
                              const std::shared_ptr<const SubMixEnsemble>& ens,
                              const ModelList& part_models) {
  SweepRow row{mechanism, epsilon, alpha, budget, k, 0.0, 0.0, 0, point_seed};
  Rng rng(point_seed);
  PerplexityReport report;
  const double per_query = BetaFromBudget(epsilon, static_cast<double>(budget));
  if (mechanism == "submix") {
    ProtocolParams params;
    params.alpha = alpha;
    params.epsilon = epsilon;
    params.beta = grid.beta.value_or(per_query);
    params.step = {grid.mode, grid.temperature, 1e-6};
    row.beta = params.beta;
    SubMixSession session(ens, params);
    report = EvaluatePerplexity(ProtocolScorer(session, rng), data.heldout,
                                grid.window, budget);
  } else if (mechanism == "sa") {
    BaselineParams params;
    params.kind = BaselineKind::kSubsampleAggregate;
    params.alpha = alpha;
    params.epsilon = epsilon;
    params.laplace_scale = CalibrateLaplaceScale(alpha, k, per_query);
    row.beta = per_query;
    BaselineSession session(part_models, data.public_model, params);
    report = EvaluatePerplexity(ProtocolScorer(session, rng), data.heldout,
                                grid.window, budget);
  } else if (mechanism == "gnmax") {
    BaselineParams params;
    params.kind = BaselineKind::kGnmax;
    params.alpha = alpha;
    params.epsilon = epsilon;
    params.sigma = CalibrateGnmaxSigma(alpha, per_query);
    row.beta = per_query;
    BaselineSession session(part_models, data.public_model, params);
    report = EvaluatePerplexity(GnmaxScorer(session, params.sigma, rng),
                                data.heldout, grid.window, budget);
  } else if (mechanism == "public") {
    report = EvaluatePerplexity(ModelScorer(*data.public_model), data.heldout,
                                grid.window, budget);
  } else {
    throw ConfigurationError("unknown mechanism: " + mechanism);
  }
  row.perplexity = report.perplexity;
  row.tokens = report.tokens;
  return row;
}

// Grid order: k, then mechanism, epsilon, B, alpha. Each point's session seed
// is derived from the master seed and the point's index.
inline std::vector<SweepRow> RunSweep(const SweepData& data,
                                      const SweepGrid& grid) {
  if (grid.mechanisms.empty() || grid.epsilons.empty() ||
      grid.alphas.empty() || grid.budgets.empty() || grid.ks.empty()) {
    throw ConfigurationError("sweep grid has an empty axis");
  }
  if (!data.public_model) throw ConfigurationError("sweep: no public model");
  std::vector<SweepRow> rows;
  std::uint64_t index = 0;
  for (std::size_t k : grid.ks) {
    auto ensemble = std::make_shared<const SubMixEnsemble>(TrainSubMix(
        data.public_model, data.users, k, grid.weight, grid.seed));
    const ModelList part_models = TrainPartModels(
        *data.public_model, data.users, k, grid.weight, grid.seed);
    for (const auto& mechanism : grid.mechanisms) {
      for (double epsilon : grid.epsilons) {
        for (std::size_t budget : grid.budgets) {
          for (double alpha : grid.alphas) {
            rows.push_back(RunSweepPoint(data, grid, mechanism, epsilon, alpha,
                                         budget, k,
                                         DeriveSeed(grid.seed, index++),
                                         ensemble, part_models));
          }
        }
      }
    }
  }
  return rows;
}

inline std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string SweepToCsv(std::span<const SweepRow> rows) {
  std::string out = "mechanism,epsilon,alpha,B,k,beta,perplexity,tokens,seed\n";
  for (const auto& r : rows) {
    out += r.mechanism + "," + FormatDouble(r.epsilon) + "," +
           FormatDouble(r.alpha) + "," + std::to_string(r.budget) + "," +
           std::to_string(r.k) + "," + FormatDouble(r.beta) + "," +
           FormatDouble(r.perplexity) + "," + std::to_string(r.tokens) + "," +
           std::to_string(r.seed) + "\n";
  }
  return out;
}

inline nlohmann::ordered_json SweepToJson(std::span<const SweepRow> rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    arr.push_back({{"mechanism", r.mechanism},
                   {"epsilon", JsonNumber(r.epsilon)},
                   {"alpha", JsonNumber(r.alpha)},
                   {"B", r.budget},
                   {"k", r.k},
                   {"beta", JsonNumber(r.beta)},
                   {"perplexity", JsonNumber(r.perplexity)},
                   {"tokens", r.tokens},
                   {"seed", r.seed}});
  }
  return arr;
}

// ---------------------------------------------------------------------------
// Synthetic utility corpus

struct MarkovCorpusParams {
  std::size_t alphabet = 8;
  std::size_t public_docs = 40;
  std::size_t users = 32;
  std::size_t docs_per_user = 4;
  std::size_t heldout_docs = 8;
  std::size_t doc_len = 64;
  double private_peak = 0.7;  // mass on each state's favored successor
};

struct TextCorpus {
  std::vector<std::string> public_docs;
  std::vector<RawUser> users;
  std::vector<std::string> heldout;
};

// Letters 'a'.. from two first-order chains: a diffuse public chain and a
// peaked private chain. Users and held-out text follow the private chain, so
// fine-tuning on users lowers held-out perplexity.
inline TextCorpus SynthesizeMarkovCorpus(const MarkovCorpusParams& p,
                                         std::uint64_t seed) {
  if (p.alphabet < 2 || p.alphabet > 26) {
    throw ParameterError("Markov alphabet size must be in [2, 26]");
  }
  if (p.doc_len < 1) throw ParameterError("Markov document length must be >= 1");
  Rng rng(seed);
  const std::size_t a = p.alphabet;
  std::vector<Pmf> pub_rows;
  std::vector<Pmf> priv_rows;
  for (std::size_t s = 0; s < a; ++s) {
    std::vector<double> w(a);
    for (double& x : w) x = 0.5 + Uniform01(rng);
    pub_rows.push_back(Pmf::FromWeights(w));
    const std::size_t favored = UniformIndex(rng, a);
    std::vector<double> q(a, (1.0 - p.private_peak) / static_cast<double>(a));
    q[favored] += p.private_peak;
    priv_rows.push_back(Pmf::FromWeights(q));
  }
  auto walk = [&](const std::vector<Pmf>& rows) {
    std::string doc;
    std::size_t state = UniformIndex(rng, a);
    for (std::size_t i = 0; i < p.doc_len; ++i) {
      doc.push_back(static_cast<char>('a' + state));
      state = Sample(rows[state], rng);
    }
    return doc;
  };
  TextCorpus corpus;
  for (std::size_t i = 0; i < p.public_docs; ++i) {
    corpus.public_docs.push_back(walk(pub_rows));
  }
  for (std::size_t u = 0; u < p.users; ++u) {
    RawUser user{"user-" + std::to_string(u), {}};
    for (std::size_t d = 0; d < p.docs_per_user; ++d) {
      user.documents.push_back(walk(priv_rows));
    }
    corpus.users.push_back(std::move(user));
  }
  for (std::size_t i = 0; i < p.heldout_docs; ++i) {
    corpus.heldout.push_back(walk(priv_rows));
  }
  return corpus;
}

// Character vocabulary from the public documents, public n-gram model,
// tokenized users and held-out chunks of length `window`.
inline SweepData PrepareSweepData(const TextCorpus& corpus,
                                  const NGramParams& params,
                                  std::size_t window, Vocab* vocab_out = nullptr) {
  Vocab vocab = Vocab::Build(TokenizationMode::kCharacter, corpus.public_docs);
  std::vector<TokenSeq> public_docs;
  for (const auto& d : corpus.public_docs) public_docs.push_back(vocab.Tokenize(d));
  SweepData data;
  data.public_model = std::make_shared<const NGramModel>(
      Pretrain(public_docs, vocab.size(), params));
  data.users = TokenizeUsers(corpus.users, vocab);
  std::vector<TokenSeq> heldout;
  for (const auto& d : corpus.heldout) heldout.push_back(vocab.Tokenize(d));
  data.heldout = ChunkSequences(heldout, window);
  if (vocab_out) *vocab_out = std::move(vocab);
  return data;
}

// ---------------------------------------------------------------------------
// Extraction attack

// Samples from a fixed model with no accounting: the public model, or a
// non-private fine-tuned reference.
class ModelSession final : public PredictionProtocol {
 public:
  ModelSession(std::shared_ptr<const LanguageModel> model, std::string name)
      : model_(std::move(model)), name_(std::move(name)) {}

  StepOutcome Respond(std::span<const TokenId> context, Rng& rng) override {
    StepOutcome out;
    out.t = ++t_;
    out.context_hash = ContextHash(context);
    out.pmf = model_->NextTokenPmf(context);
    out.token = Sample(out.pmf, rng);
    return out;
  }
  void IssueStop() override {}
  bool stopped() const override { return false; }
  std::size_t k() const override { return 0; }
  std::string_view mechanism() const override { return name_; }

 private:
  std::shared_ptr<const LanguageModel> model_;
  std::string name_;
  std::size_t t_ = 0;
};

using ProtocolFactory = std::function<std::unique_ptr<PredictionProtocol>()>;

struct AttackParams {
  std::size_t ell = 4;
  std::size_t g = 100;
  bool shared_session = true;
  double epsilon = kInfinity;
  double alpha = 2.0;
  std::size_t k = 3;
};

struct AttackReport {
  std::size_t g = 0;
  std::size_t hits = 0;
  double hit_rate = 0.0;
  std::size_t ell = 0;
  std::size_t m = 0;
  std::size_t k = 0;
  double epsilon = 0.0;
  double alpha = 0.0;
  std::vector<double> per_candidate;     // fraction of generations equal to code i
  std::size_t stopped_generations = 0;   // finished by the public model
  std::optional<double> fano_bound;      // at user level, needs alpha > 2
  std::vector<std::string> generations;
};

// Generates g codes of ell tokens after `prompt` and counts exact matches.
inline AttackReport ExtractionAttack(const ProtocolFactory& factory,
                                     const TokenSeq& prompt,
                                     const std::vector<std::string>& codes,
                                     const Vocab& vocab,
                                     const AttackParams& params, Rng& rng) {
  if (params.ell < 1 || params.g < 1) {
    throw ParameterError("attack needs ell >= 1 and g >= 1");
  }
  AttackReport report;
  report.g = params.g;
  report.ell = params.ell;
  report.m = codes.size();
  report.k = params.k;
  report.epsilon = params.epsilon;
  report.alpha = params.alpha;
  std::vector<std::size_t> counts(codes.size(), 0);
  std::unique_ptr<PredictionProtocol> protocol;
  for (std::size_t gen = 0; gen < params.g; ++gen) {
    if (!protocol || !params.shared_session) protocol = factory();
    TokenSeq context = prompt;
    bool stopped = false;
    for (std::size_t j = 0; j < params.ell; ++j) {
      const StepOutcome out = protocol->Respond(context, rng);
      stopped = stopped || out.stopped;
      context.push_back(out.token);
    }
    if (stopped) ++report.stopped_generations;
    std::string text = vocab.Detokenize(
        std::span<const TokenId>(context).subspan(prompt.size()));
    for (std::size_t i = 0; i < codes.size(); ++i) {
      if (text == codes[i]) {
        ++counts[i];
        ++report.hits;
        break;
      }
    }
    report.generations.push_back(std::move(text));
  }
  report.hit_rate =
      static_cast<double>(report.hits) / static_cast<double>(params.g);
  for (std::size_t c : counts) {
    report.per_candidate.push_back(static_cast<double>(c) /
                                   static_cast<double>(params.g));
  }
  if (params.alpha > 2.0 && codes.size() >= 2 && params.epsilon >= 0.0) {
    const RenyiPair user = PartitionToUser(params.alpha, params.epsilon);
    report.fano_bound = FanoExtractabilityBound(1, user.epsilon,
                                                static_cast<double>(codes.size()));
  }
  return report;
}

inline nlohmann::ordered_json AttackToJson(const AttackReport& r) {
  nlohmann::ordered_json j;
  j["g"] = r.g;
  j["hits"] = r.hits;
  j["hit_rate"] = r.hit_rate;
  j["ell"] = r.ell;
  j["m"] = r.m;
  j["k"] = r.k;
  j["epsilon"] = JsonNumber(r.epsilon);
  j["alpha"] = JsonNumber(r.alpha);
  j["per_candidate"] = JsonNumbers(r.per_candidate);
  j["stopped_generations"] = r.stopped_generations;
  j["fano_bound"] = r.fano_bound ? JsonNumber(*r.fano_bound) : nullptr;
  j["generations"] = r.generations;
  return j;
}

// The digit-mode code-extraction setup: m users each holding one templated
// sentence with a secret code, and a public corpus containing the template
// filled with every ell-digit code exactly once.
struct AttackSetup {
  Vocab vocab{TokenizationMode::kDigit};
  CodeCorpus corpus;
  std::vector<UserCorpus> users;
  std::shared_ptr<const NGramModel> public_model;
  TokenSeq prompt;
};

inline constexpr std::string_view kDefaultCodeTemplate = "My number is: {}";

inline AttackSetup BuildAttackSetup(std::size_t m, std::size_t ell,
                                    std::uint64_t seed,
                                    const std::string& templ =
                                        std::string(kDefaultCodeTemplate),
                                    double k_add = 0.1) {
  AttackSetup s;
  s.corpus = SynthesizeCodeCorpus(m, ell, templ, seed);
  const std::uint64_t space = CodeSpaceSize(ell);
  if (space > 1000000) {
    throw CapacityError("public code corpus too large for ell = " +
                        std::to_string(ell));
  }
  std::vector<std::string> public_texts;
  public_texts.reserve(space);
  for (std::uint64_t v = 0; v < space; ++v) {
    public_texts.push_back(FillTemplate(templ, FormatCode(v, ell)));
  }
  s.vocab = Vocab::Build(TokenizationMode::kDigit, public_texts);
  std::vector<TokenSeq> docs;
  docs.reserve(space);
  for (const auto& t : public_texts) docs.push_back(s.vocab.Tokenize(t));
  s.public_model = std::make_shared<const NGramModel>(
      Pretrain(docs, s.vocab.size(), NGramParams{ell + 1, k_add}));
  s.users = TokenizeUsers(s.corpus.users, s.vocab);
  s.prompt = s.vocab.Tokenize(s.corpus.prompt);
  return s;
}

// ---------------------------------------------------------------------------
// Extractability

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};

inline WilsonInterval Wilson(std::size_t successes, std::size_t trials,
                             double z = 1.96) {
  if (trials == 0) return {};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// Builds a mechanism whose private data contains candidate `i`.
using CandidateFactory =
    std::function<std::unique_ptr<PredictionProtocol>(std::size_t i)>;
// Interacts with a mechanism and names the candidate it believes was planted.
using Adversary = std::function<std::size_t(PredictionProtocol&, Rng&)>;

struct ExtractabilityReport {
  std::vector<double> rates;
  std::vector<WilsonInterval> intervals;
  double min_rate = 0.0;
  std::size_t argmin = 0;
  std::size_t trials_per_candidate = 0;
};

inline ExtractabilityReport EstimateExtractability(
    const CandidateFactory& factory, std::size_t m,
    std::size_t trials_per_candidate, const Adversary& adversary, Rng& rng) {
  if (m < 1 || trials_per_candidate < 1) {
    throw ParameterError("extractability needs m >= 1 and trials >= 1");
  }
  ExtractabilityReport report;
  report.trials_per_candidate = trials_per_candidate;
  report.min_rate = kInfinity;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t wins = 0;
    for (std::size_t t = 0; t < trials_per_candidate; ++t) {
      auto mechanism = factory(i);
      if (adversary(*mechanism, rng) == i) ++wins;
    }
    const double rate = static_cast<double>(wins) /
                        static_cast<double>(trials_per_candidate);
    report.rates.push_back(rate);
    report.intervals.push_back(Wilson(wins, trials_per_candidate));
    if (rate < report.min_rate) {
      report.min_rate = rate;
      report.argmin = i;
    }
  }
  return report;
}

// Samples `generations` completions of `ell` tokens and guesses the
// candidate matched most often; ties and no matches are broken uniformly.
inline Adversary MostFrequentCandidate(TokenSeq prompt,
                                       std::vector<std::string> candidates,
                                       const Vocab& vocab, std::size_t ell,
                                       std::size_t generations) {
  return [prompt = std::move(prompt), candidates = std::move(candidates),
          &vocab, ell, generations](PredictionProtocol& protocol,
                                    Rng& rng) -> std::size_t {
    std::vector<std::size_t> counts(candidates.size(), 0);
    for (std::size_t gen = 0; gen < generations; ++gen) {
      TokenSeq context = prompt;
      for (std::size_t j = 0; j < ell; ++j) {
        context.push_back(protocol.Respond(context, rng).token);
      }
      const std::string text = vocab.Detokenize(
          std::span<const TokenId>(context).subspan(prompt.size()));
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (text == candidates[i]) ++counts[i];
      }
    }
    const std::size_t best = *std::max_element(counts.begin(), counts.end());
    std::vector<std::size_t> top;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] == best) top.push_back(i);
    }
    return top[UniformIndex(rng, top.size())];
  };
}

}  // namespace submix

#endif  // SUBMIX_EXPERIMENTS_HPP_
