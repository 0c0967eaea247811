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

// Command-line driver: train, predict, eval, sweep, attack and convert.
//
// Every run writes its resolved configuration to <output-dir>/config.toml;
// `submix --config <that file>` reproduces the run. Exit codes: 0 success,
// 1 runtime error, 2 configuration or capacity error.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "submix/submix.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace submix {
namespace {

constexpr std::string_view kManifestFormat = "submix-ensemble";
constexpr int kManifestVersion = 1;

struct CommonArgs {
  std::string output_dir = "submix-out";
};

struct TrainArgs {
  std::string corpus;
  std::string public_path;
  std::string vocab_path;
  std::string tokenization = "char";
  std::size_t k = 2;
  std::size_t order = 3;
  double k_add = 0.1;
  double weight = 10.0;
  std::uint64_t seed = 0;
};

struct SessionArgs {
  std::string model_dir;
  double alpha = 2.0;
  double epsilon = 1.0;
  std::optional<double> beta;
  std::optional<double> budget;
  std::string mode = "symmetric";
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

struct PredictArgs {
  SessionArgs session;
  std::string input = "-";
  bool halt_on_stop = false;
};

struct EvalArgs {
  SessionArgs session;
  std::string heldout;
  std::string mechanism = "submix";
  std::size_t window = 32;
};

struct SweepArgs {
  bool synthetic = false;
  std::uint64_t synthetic_seed = 0;
  std::string corpus;
  std::string public_path;
  std::string heldout;
  std::string tokenization = "char";
  std::vector<std::string> mechanisms = {"submix", "public"};
  std::vector<double> epsilons = {0.25, 1.0, 4.0, 16.0};
  std::vector<double> alphas = {2.0};
  std::vector<std::size_t> budgets = {256};
  std::vector<std::size_t> ks = {4};
  std::size_t window = 32;
  std::size_t order = 2;
  double k_add = 0.1;
  double weight = 10.0;
  std::optional<double> beta;
  std::uint64_t seed = 0;
};

struct AttackArgs {
  std::string mechanism = "submix";
  std::size_t m = 6;
  std::size_t ell = 4;
  std::size_t g = 100;
  std::size_t k = 3;
  double alpha = 2.0;
  double epsilon = 1.0;
  std::optional<double> beta;
  double weight = 10.0;
  double nonprivate_weight = 1e6;
  double k_add = 0.1;
  bool fresh_sessions = false;
  std::string templ = std::string(kDefaultCodeTemplate);
  std::uint64_t seed = 0;
};

struct ConvertArgs {
  bool rs = false;
  bool fano = false;
  bool rdp2dp = false;
  bool p2u = false;
  bool u2p = false;
  bool group = false;
  bool rs_ppl = false;
  std::string claim;
  double alpha = 2.0;
  double epsilon = 1.0;
  double delta = 1e-5;
  std::uint64_t budget = 1;
  double c = 1.0;
  std::uint64_t kappa = 1;
  double m = 2.0;
  double n_users = 1.0;
  double k_parts = 1.0;
  double p = 1.0;
  double p_pub = 1.0;
};

std::string Fixed5(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.5g", v);
  return buf;
}

void WriteJson(const fs::path& path, const ordered_json& j) {
  WriteFile(path, j.dump(2) + "\n");
}

DivergenceMode ParseDivergenceMode(const std::string& s) {
  if (s == "symmetric") return DivergenceMode::kSymmetric;
  if (s == "directed") return DivergenceMode::kDirected;
  throw ConfigurationError("unknown divergence mode: " + s);
}

// ---------------------------------------------------------------------------
// train

std::vector<std::string> PublicDocuments(const std::string& path) {
  if (path.empty()) return {};
  return ReadLines(path);
}

Vocab ResolveVocab(const std::string& vocab_path, TokenizationMode mode,
                   const std::vector<std::string>& public_docs,
                   const std::vector<RawUser>& users) {
  if (!vocab_path.empty()) return LoadVocab(vocab_path, mode);
  if (!public_docs.empty()) return Vocab::Build(mode, public_docs);
  std::vector<std::string> texts;
  for (const auto& u : users) {
    texts.insert(texts.end(), u.documents.begin(), u.documents.end());
  }
  return Vocab::Build(mode, texts);
}

int CmdTrain(const TrainArgs& a, const fs::path& out) {
  if (a.corpus.empty()) throw ConfigurationError("train: --corpus is required");
  const TokenizationMode mode = ParseMode(a.tokenization);
  const auto raw_users = LoadUsers(a.corpus);
  const auto public_docs = PublicDocuments(a.public_path);
  const Vocab vocab = ResolveVocab(a.vocab_path, mode, public_docs, raw_users);
  const auto users = TokenizeUsers(raw_users, vocab);

  std::vector<TokenSeq> public_tokens;
  for (const auto& d : public_docs) public_tokens.push_back(vocab.Tokenize(d));
  auto public_model = std::make_shared<const NGramModel>(
      Pretrain(public_tokens, vocab.size(), NGramParams{a.order, a.k_add}));
  const SubMixEnsemble ensemble =
      TrainSubMix(public_model, users, a.k, a.weight, a.seed);

  SaveVocab(vocab, out / "vocab.json");
  public_model->Save(out / "public.json");
  ordered_json parts = ordered_json::array();
  const Partition& partition = *ensemble.provenance();
  for (std::size_t i = 0; i < ensemble.k(); ++i) {
    const std::string first = "part-" + std::to_string(i) + "-a.json";
    const std::string second = "part-" + std::to_string(i) + "-b.json";
    static_cast<const NGramModel&>(*ensemble.part(i).first).Save(out / first);
    static_cast<const NGramModel&>(*ensemble.part(i).second).Save(out / second);
    parts.push_back(
        {{"first", {{"file", first}, {"users", partition.parts[i].first}}},
         {"second", {{"file", second}, {"users", partition.parts[i].second}}}});
  }
  ordered_json manifest;
  manifest["format"] = kManifestFormat;
  manifest["version"] = kManifestVersion;
  manifest["k"] = ensemble.k();
  manifest["tokenization"] = ModeName(mode);
  manifest["vocab"] = "vocab.json";
  manifest["public"] = "public.json";
  manifest["partition_seed"] = partition.seed;
  manifest["order"] = a.order;
  manifest["k_add"] = a.k_add;
  manifest["weight"] = a.weight;
  manifest["users"] = users.size();
  manifest["parts"] = std::move(parts);
  WriteJson(out / "manifest.json", manifest);
  std::cout << "trained k=" << ensemble.k() << " parts over " << users.size()
            << " users; vocabulary " << vocab.size() << " tokens\n";
  return 0;
}

struct LoadedEnsemble {
  Vocab vocab;
  std::shared_ptr<const NGramModel> public_model;
  std::shared_ptr<const SubMixEnsemble> ensemble;
};

LoadedEnsemble LoadEnsemble(const fs::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(ReadFile(dir / "manifest.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("manifest.json: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != kManifestFormat) {
    throw FormatError("not an ensemble manifest: " + (dir / "manifest.json").string());
  }
  if (manifest.value("version", 0) != kManifestVersion) {
    throw VersionError("unsupported ensemble manifest version");
  }
  try {
    LoadedEnsemble le{LoadVocab(dir / manifest.at("vocab").get<std::string>(),
                                ParseMode(manifest.at("tokenization").get<std::string>())),
                      nullptr, nullptr};
    le.public_model = std::make_shared<const NGramModel>(
        NGramModel::Load(dir / manifest.at("public").get<std::string>()));
    std::vector<PartModels> parts;
    Partition partition;
    partition.seed = manifest.at("partition_seed").get<std::uint64_t>();
    for (const auto& p : manifest.at("parts")) {
      parts.push_back(PartModels{
          std::make_shared<NGramModel>(NGramModel::Load(
              dir / p.at("first").at("file").get<std::string>())),
          std::make_shared<NGramModel>(NGramModel::Load(
              dir / p.at("second").at("file").get<std::string>()))});
      partition.parts.push_back(
          {p.at("first").at("users").get<std::vector<std::string>>(),
           p.at("second").at("users").get<std::vector<std::string>>()});
    }
    if (le.public_model->vocab_size() != le.vocab.size()) {
      throw FormatError("model and vocabulary sizes disagree");
    }
    le.ensemble = std::make_shared<const SubMixEnsemble>(
        le.public_model, std::move(parts), std::move(partition));
    return le;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed manifest: " + std::string(e.what()));
  }
}

ProtocolParams ResolveProtocol(const SessionArgs& a) {
  ProtocolParams p;
  p.alpha = a.alpha;
  p.epsilon = a.epsilon;
  if (a.beta) {
    p.beta = *a.beta;
  } else if (a.budget) {
    p.beta = BetaFromBudget(a.epsilon, *a.budget);
  } else {
    throw ConfigurationError("set --beta or a query budget --budget");
  }
  p.step.mode = ParseDivergenceMode(a.mode);
  p.step.temperature = a.temperature;
  return p;
}

// ---------------------------------------------------------------------------
// predict

int CmdPredict(const PredictArgs& a, const fs::path& out) {
  if (a.session.model_dir.empty()) {
    throw ConfigurationError("predict: --model-dir is required");
  }
  const LoadedEnsemble le = LoadEnsemble(a.session.model_dir);
  SubMixSession session(le.ensemble, ResolveProtocol(a.session));
  Rng rng(a.session.seed);

  std::vector<std::string> lines;
  {
    std::string line;
    if (a.input == "-") {
      while (std::getline(std::cin, line)) lines.push_back(line);
    } else {
      std::ifstream in(a.input);
      if (!in) throw IoError("cannot open " + a.input);
      while (std::getline(in, line)) lines.push_back(line);
    }
  }

  std::string transcript;
  std::string tokens;
  SessionTranscript tr;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    TokenSeq context;
    try {
      if (!line.empty() && line.front() == '{') {
        const auto j = nlohmann::json::parse(line);
        if (j.contains("tokens")) {
          context = j.at("tokens").get<TokenSeq>();
          for (TokenId id : context) {
            if (id >= le.vocab.size()) throw DimensionError("token id out of range");
          }
        } else {
          context = le.vocab.Tokenize(j.at("context").get<std::string>());
        }
      } else {
        context = le.vocab.Tokenize(line);
      }
    } catch (const std::exception& e) {
      ordered_json err;
      err["line"] = i + 1;
      err["error"] = e.what();
      transcript += err.dump() + "\n";
      continue;
    }
    StepOutcome step = session.Respond(context, rng);
    transcript += StepToJson(step).dump() + "\n";
    tokens += le.vocab.Token(step.token) + "\n";
    std::cout << le.vocab.Token(step.token) << "\n";
    const bool halt = a.halt_on_stop && step.stopped;
    tr.Append(std::move(step));
    if (halt) break;
  }
  WriteFile(out / "transcript.jsonl", transcript);
  WriteFile(out / "tokens.txt", tokens);
  ordered_json summary;
  summary["queries"] = tr.steps.size();
  summary["stop_index"] = tr.stop_index ? ordered_json(*tr.stop_index) : nullptr;
  summary["released_leakage"] = JsonNumbers(ReleasedLeakage(tr, le.ensemble->k()));
  summary["remaining"] = JsonNumbers(session.ledger().remaining());
  WriteJson(out / "summary.json", summary);
  return 0;
}

// ---------------------------------------------------------------------------
// eval

int CmdEval(const EvalArgs& a, const fs::path& out) {
  if (a.session.model_dir.empty() || a.heldout.empty()) {
    throw ConfigurationError("eval: --model-dir and --heldout are required");
  }
  const LoadedEnsemble le = LoadEnsemble(a.session.model_dir);
  std::vector<TokenSeq> docs;
  for (const auto& line : ReadLines(a.heldout)) docs.push_back(le.vocab.Tokenize(line));
  const auto samples = ChunkSequences(docs, a.window);
  PerplexityReport report;
  if (a.mechanism == "public") {
    report = EvaluatePerplexity(ModelScorer(*le.public_model), samples, a.window);
  } else if (a.mechanism == "submix") {
    const ProtocolParams params = ResolveProtocol(a.session);
    SubMixSession session(le.ensemble, params);
    Rng rng(a.session.seed);
    report = EvaluatePerplexity(ProtocolScorer(session, rng), samples, a.window,
                                a.session.budget
                                    ? static_cast<std::size_t>(*a.session.budget)
                                    : SIZE_MAX);
    report.epsilon = params.epsilon;
    report.alpha = params.alpha;
  } else {
    throw ConfigurationError("eval: unknown mechanism " + a.mechanism);
  }
  report.mechanism = a.mechanism;
  report.budget = a.session.budget.value_or(0.0);
  ordered_json j;
  j["mechanism"] = report.mechanism;
  j["epsilon"] = JsonNumber(report.epsilon);
  j["alpha"] = JsonNumber(report.alpha);
  j["B"] = JsonNumber(report.budget);
  j["perplexity"] = JsonNumber(report.perplexity);
  j["tokens"] = report.tokens;
  j["per_sample"] = JsonNumbers(report.per_sample);
  WriteJson(out / "eval.json", j);
  std::cout << "perplexity " << FormatDouble(report.perplexity) << " over "
            << report.tokens << " tokens\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

int CmdSweep(const SweepArgs& a, const fs::path& out) {
  TextCorpus corpus;
  if (a.synthetic) {
    corpus = SynthesizeMarkovCorpus({}, a.synthetic_seed);
  } else {
    if (a.corpus.empty() || a.heldout.empty()) {
      throw ConfigurationError(
          "sweep: give --synthetic or both --corpus and --heldout");
    }
    corpus.users = LoadUsers(a.corpus);
    corpus.public_docs = PublicDocuments(a.public_path);
    corpus.heldout = ReadLines(a.heldout);
  }
  SweepData data;
  if (a.synthetic) {
    data = PrepareSweepData(corpus, NGramParams{a.order, a.k_add}, a.window);
  } else {
    const TokenizationMode mode = ParseMode(a.tokenization);
    const Vocab vocab = ResolveVocab("", mode, corpus.public_docs, corpus.users);
    std::vector<TokenSeq> pub;
    for (const auto& d : corpus.public_docs) pub.push_back(vocab.Tokenize(d));
    data.public_model = std::make_shared<const NGramModel>(
        Pretrain(pub, vocab.size(), NGramParams{a.order, a.k_add}));
    data.users = TokenizeUsers(corpus.users, vocab);
    std::vector<TokenSeq> held;
    for (const auto& d : corpus.heldout) held.push_back(vocab.Tokenize(d));
    data.heldout = ChunkSequences(held, a.window);
  }
  SweepGrid grid;
  grid.mechanisms = a.mechanisms;
  grid.epsilons = a.epsilons;
  grid.alphas = a.alphas;
  grid.budgets = a.budgets;
  grid.ks = a.ks;
  grid.window = a.window;
  grid.weight = a.weight;
  grid.beta = a.beta;
  grid.seed = a.seed;
  const auto rows = RunSweep(data, grid);
  WriteFile(out / "sweep.csv", SweepToCsv(rows));
  WriteJson(out / "sweep.json", ordered_json(SweepToJson(rows)));
  std::cout << SweepToCsv(rows);
  return 0;
}

// ---------------------------------------------------------------------------
// attack

int CmdAttack(const AttackArgs& a, const fs::path& out) {
  const AttackSetup setup = BuildAttackSetup(a.m, a.ell, a.seed, a.templ, a.k_add);
  AttackParams params;
  params.ell = a.ell;
  params.g = a.g;
  params.shared_session = !a.fresh_sessions;
  params.alpha = a.alpha;
  params.epsilon = a.epsilon;
  params.k = a.k;
  ProtocolFactory factory;
  if (a.mechanism == "submix") {
    auto ensemble = std::make_shared<const SubMixEnsemble>(
        TrainSubMix(setup.public_model, setup.users, a.k, a.weight, a.seed));
    ProtocolParams pp;
    pp.alpha = a.alpha;
    pp.epsilon = a.epsilon;
    pp.beta = a.beta.value_or(
        BetaFromBudget(a.epsilon, static_cast<double>(a.g * a.ell)));
    factory = [ensemble, pp] {
      return std::make_unique<SubMixSession>(ensemble, pp);
    };
  } else if (a.mechanism == "nonprivate") {
    auto model = std::make_shared<const NGramModel>(
        FineTune(*setup.public_model, setup.users, a.nonprivate_weight));
    params.epsilon = kInfinity;
    factory = [model] {
      return std::make_unique<ModelSession>(model, "nonprivate");
    };
  } else if (a.mechanism == "public") {
    params.epsilon = 0.0;
    factory = [model = setup.public_model] {
      return std::make_unique<ModelSession>(model, "public");
    };
  } else {
    throw ConfigurationError("attack: unknown mechanism " + a.mechanism);
  }
  Rng rng(DeriveSeed(a.seed, 1));
  const AttackReport report = ExtractionAttack(factory, setup.prompt,
                                               setup.corpus.codes, setup.vocab,
                                               params, rng);
  ordered_json j = AttackToJson(report);
  j["mechanism"] = a.mechanism;
  j["codes"] = setup.corpus.codes;
  j["chance"] = static_cast<double>(a.m) /
                static_cast<double>(CodeSpaceSize(a.ell));
  WriteJson(out / "attack.json", j);
  std::cout << "hit rate " << Fixed5(report.hit_rate) << " (" << report.hits
            << "/" << report.g << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// convert

int CmdConvert(const ConvertArgs& a, const fs::path& out) {
  const int ops = a.rs + a.fano + a.rdp2dp + a.p2u + a.u2p + a.group + a.rs_ppl;
  if (ops != 1) {
    throw ConfigurationError(
        "convert: choose exactly one of --rs --fano --rdp2dp --p2u --u2p "
        "--group --rs-ppl");
  }
  ordered_json result;
  double value = 0.0;
  if (a.fano) {
    value = FanoExtractabilityBound(a.kappa, a.epsilon, a.m);
    result = {{"bound", "fano"}, {"kappa", a.kappa}, {"epsilon", a.epsilon},
              {"m", a.m}, {"value", value}};
  } else if (a.rs_ppl) {
    value = RandomStoppingPerplexityBound(a.p, a.p_pub, a.c);
    result = {{"bound", "random_stopping_perplexity"}, {"p", a.p},
              {"p_pub", a.p_pub}, {"C", a.c}, {"value", value}};
  } else {
    PrivacyClaim claim;
    if (!a.claim.empty()) {
      try {
        claim = ClaimFromJson(nlohmann::json::parse(ReadFile(a.claim)));
      } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(a.claim + ": " + e.what());
      }
    } else {
      claim = RopClaim(a.alpha, a.epsilon);
    }
    if (a.rs) claim = ApplyRandomStopping(std::move(claim), a.budget, a.c);
    if (a.rdp2dp) claim = ApplyRdpToDp(std::move(claim), a.delta);
    if (a.p2u) claim = ApplyPartitionToUser(std::move(claim));
    if (a.u2p) claim = ApplyUserToPartition(std::move(claim), a.n_users, a.k_parts);
    if (a.group) claim = ApplyGroup(std::move(claim), a.kappa);
    value = claim.epsilon;
    result = ClaimToJson(claim);
  }
  std::cout << Fixed5(value) << "\n" << result.dump(2) << "\n";
  WriteJson(out / "convert.json", result);
  return 0;
}

// The selected subcommand's options as a TOML section. Values are written as
// quoted strings (arrays for multi-valued options) so that reading the file
// back yields the same values; options left empty are omitted.
std::string ResolvedConfig(const CLI::App& sub) {
  std::string out = "[" + sub.get_name() + "]\n";
  for (const CLI::Option* opt : sub.get_options()) {
    if (!opt->get_configurable() || opt->get_lnames().empty() ||
        opt->get_lnames().front() == "help") {
      continue;
    }
    std::vector<std::string> values;
    if (opt->count() > 0) {
      values = opt->results();
    } else {
      std::string d = opt->get_default_str();
      if (d.size() >= 2 && d.front() == '[' && d.back() == ']') {
        d = d.substr(1, d.size() - 2);
        std::stringstream ss(d);
        std::string item;
        while (std::getline(ss, item, ',')) values.push_back(item);
      } else if (!d.empty()) {
        values.push_back(d);
      }
    }
    if (values.empty()) continue;
    out += opt->get_lnames().front() + "=";
    if (opt->get_items_expected_max() > 1) {
      out += nlohmann::json(values).dump();
    } else {
      out += nlohmann::json(values.back()).dump();
    }
    out += "\n";
  }
  return out;
}

int Main(int argc, char** argv) {
  CLI::App app{"SubMix private next-token prediction"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "Read options from a TOML file");
  app.require_subcommand(1);
  CommonArgs common;
  app.add_option("-o,--output-dir", common.output_dir, "Output directory")
      ->envname("SUBMIX_OUTPUT_DIR")
      ->configurable(false);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Partition users and fine-tune the ensemble")
                ->configurable();
  t->add_option("--corpus", train.corpus, "Private users (JSONL or directory)");
  t->add_option("--public", train.public_path, "Public documents, one per line");
  t->add_option("--vocab", train.vocab_path, "Vocabulary file (JSON list)");
  t->add_option("--tokenization", train.tokenization, "char | word | digit");
  t->add_option("--k", train.k, "Number of parts");
  t->add_option("--order", train.order, "n-gram order");
  t->add_option("--k-add", train.k_add, "Additive smoothing constant");
  t->add_option("--weight", train.weight, "Fine-tuning count weight");
  t->add_option("--seed", train.seed, "Partition seed");

  auto add_session = [](CLI::App* sub, SessionArgs& s) {
    sub->add_option("--model-dir", s.model_dir, "Directory written by train");
    sub->add_option("--alpha", s.alpha, "Renyi order");
    sub->add_option("--epsilon", s.epsilon, "Per-part budget");
    sub->add_option("--beta", s.beta, "Per-query target leakage");
    sub->add_option("--budget", s.budget, "Query budget B; beta = epsilon / B");
    sub->add_option("--mode", s.mode, "symmetric | directed");
    sub->add_option("--temperature", s.temperature, "Sampling temperature");
    sub->add_option("--seed", s.seed, "Sampling seed");
  };

  PredictArgs predict;
  auto* p = app.add_subcommand("predict", "Answer next-token queries")->configurable();
  add_session(p, predict.session);
  p->add_option("--input", predict.input, "Contexts, one per line ('-' = stdin)");
  p->add_flag("--halt-on-stop", predict.halt_on_stop, "Exit once STOP is issued");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Held-out perplexity")->configurable();
  add_session(e, eval.session);
  e->add_option("--heldout", eval.heldout, "Held-out documents, one per line");
  e->add_option("--mechanism", eval.mechanism, "submix | public");
  e->add_option("--window", eval.window, "Context window L");

  SweepArgs sweep;
  auto* s = app.add_subcommand("sweep", "Privacy/utility grid")->configurable();
  s->add_flag("--synthetic", sweep.synthetic, "Use the synthetic Markov corpus");
  s->add_option("--synthetic-seed", sweep.synthetic_seed, "Synthetic corpus seed");
  s->add_option("--corpus", sweep.corpus, "Private users");
  s->add_option("--public", sweep.public_path, "Public documents");
  s->add_option("--heldout", sweep.heldout, "Held-out documents");
  s->add_option("--tokenization", sweep.tokenization, "char | word | digit");
  s->add_option("--mechanisms", sweep.mechanisms, "submix sa gnmax public")
      ->delimiter(',');
  s->add_option("--epsilons", sweep.epsilons, "Budgets")->delimiter(',');
  s->add_option("--alphas", sweep.alphas, "Renyi orders")->delimiter(',');
  s->add_option("--budgets", sweep.budgets, "Query budgets B")->delimiter(',');
  s->add_option("--ks", sweep.ks, "Part counts")->delimiter(',');
  s->add_option("--window", sweep.window, "Context window L");
  s->add_option("--order", sweep.order, "n-gram order");
  s->add_option("--k-add", sweep.k_add, "Additive smoothing constant");
  s->add_option("--weight", sweep.weight, "Fine-tuning count weight");
  s->add_option("--beta", sweep.beta, "Fixed beta instead of epsilon / B");
  s->add_option("--seed", sweep.seed, "Master seed");

  AttackArgs attack;
  auto* at = app.add_subcommand("attack", "Secret-code extraction game")->configurable();
  at->add_option("--mechanism", attack.mechanism, "submix | nonprivate | public");
  at->add_option("--m", attack.m, "Number of secret codes (users)");
  at->add_option("--ell", attack.ell, "Code length in digits");
  at->add_option("--g", attack.g, "Number of generations");
  at->add_option("--k", attack.k, "Number of parts");
  at->add_option("--alpha", attack.alpha, "Renyi order");
  at->add_option("--epsilon", attack.epsilon, "Per-part budget");
  at->add_option("--beta", attack.beta, "Per-query target (default eps/(g ell))");
  at->add_option("--weight", attack.weight, "Fine-tuning count weight");
  at->add_option("--nonprivate-weight", attack.nonprivate_weight,
                 "Count weight of the non-private reference");
  at->add_option("--k-add", attack.k_add, "Additive smoothing constant");
  at->add_flag("--fresh-sessions", attack.fresh_sessions,
               "New session (budget) per generation");
  at->add_option("--template", attack.templ, "Sentence with a {} placeholder");
  at->add_option("--seed", attack.seed, "Seed");

  ConvertArgs convert;
  auto* c = app.add_subcommand("convert", "Privacy-notion conversions")->configurable();
  c->add_flag("--rs", convert.rs, "Random stopping: eps + ln(CB)");
  c->add_flag("--fano", convert.fano, "Fano extractability bound");
  c->add_flag("--rdp2dp", convert.rdp2dp, "RDP to (eps, delta)-DP");
  c->add_flag("--p2u", convert.p2u, "Partition level to user level");
  c->add_flag("--u2p", convert.u2p, "User level to partition level");
  c->add_flag("--group", convert.group, "Group privacy");
  c->add_flag("--rs-ppl", convert.rs_ppl, "Random-stopping perplexity bound");
  c->add_option("--claim", convert.claim, "Input claim JSON (default: ROP origin)");
  c->add_option("--alpha", convert.alpha, "Renyi order");
  c->add_option("--eps", convert.epsilon, "Epsilon");
  c->add_option("--delta", convert.delta, "Delta");
  c->add_option("--B", convert.budget, "Query budget");
  c->add_option("--C", convert.c, "Expansion factor");
  c->add_option("--kappa", convert.kappa, "Group size / string multiplicity");
  c->add_option("--m", convert.m, "Number of candidate strings");
  c->add_option("--n", convert.n_users, "Number of users");
  c->add_option("--k", convert.k_parts, "Number of parts");
  c->add_option("--p", convert.p, "Pre-termination perplexity");
  c->add_option("--p-pub", convert.p_pub, "Public-model perplexity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const fs::path out(common.output_dir);
  try {
    fs::create_directories(out);
    CLI::App* sub = app.get_subcommands().front();
    WriteFile(out / "config.toml", ResolvedConfig(*sub));
    if (sub == t) return CmdTrain(train, out);
    if (sub == p) return CmdPredict(predict, out);
    if (sub == e) return CmdEval(eval, out);
    if (sub == s) return CmdSweep(sweep, out);
    if (sub == at) return CmdAttack(attack, out);
    return CmdConvert(convert, out);
  } catch (const ConfigurationError& ex) {
    std::cerr << "configuration error: " << ex.what() << "\n";
    return 2;
  } catch (const CapacityError& ex) {
    std::cerr << "capacity error: " << ex.what() << "\n";
    return 2;
  } catch (const ParameterError& ex) {
    std::cerr << "parameter error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}

}  // namespace
}  // namespace submix

int main(int argc, char** argv) { return submix::Main(argc, argv); }
