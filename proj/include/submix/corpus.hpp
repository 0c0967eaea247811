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

// User-level corpora, tokenization, and the randomized k-part partition with
// two subparts per part.

#ifndef SUBMIX_CORPUS_HPP_
#define SUBMIX_CORPUS_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "submix/error.hpp"
#include "submix/probdist.hpp"
#include "submix/random.hpp"

namespace submix {

using TokenSeq = std::vector<TokenId>;

enum class TokenizationMode {
  kCharacter,  // one token per UTF-8 code point
  kWord,       // whitespace-separated words; detokenize joins with ' '
  kDigit,      // each ASCII digit is a token; each maximal non-digit run is one
};

inline std::string_view ModeName(TokenizationMode mode) {
  switch (mode) {
    case TokenizationMode::kCharacter:
      return "char";
    case TokenizationMode::kWord:
      return "word";
    case TokenizationMode::kDigit:
      return "digit";
  }
  return "char";
}

inline TokenizationMode ParseMode(std::string_view name) {
  if (name == "char" || name == "character") return TokenizationMode::kCharacter;
  if (name == "word" || name == "whitespace") return TokenizationMode::kWord;
  if (name == "digit") return TokenizationMode::kDigit;
  throw ParameterError("unknown tokenization mode: " + std::string(name));
}

inline bool IsAsciiDigit(char c) { return c >= '0' && c <= '9'; }

// Splits text into token strings under the given mode.
inline std::vector<std::string> SplitTokens(std::string_view text,
                                            TokenizationMode mode) {
  std::vector<std::string> out;
  switch (mode) {
    case TokenizationMode::kCharacter: {
      std::size_t i = 0;
      while (i < text.size()) {
        const auto lead = static_cast<unsigned char>(text[i]);
        std::size_t len = 1;
        if (lead >= 0xF0 && lead < 0xF8) {
          len = 4;
        } else if (lead >= 0xE0 && lead < 0xF0) {
          len = 3;
        } else if (lead >= 0xC0 && lead < 0xE0) {
          len = 2;
        }
        len = std::min(len, text.size() - i);
        out.emplace_back(text.substr(i, len));
        i += len;
      }
      break;
    }
    case TokenizationMode::kWord: {
      std::istringstream in{std::string(text)};
      std::string word;
      while (in >> word) out.push_back(word);
      break;
    }
    case TokenizationMode::kDigit: {
      std::size_t i = 0;
      while (i < text.size()) {
        if (IsAsciiDigit(text[i])) {
          out.emplace_back(1, text[i]);
          ++i;
          continue;
        }
        std::size_t j = i;
        while (j < text.size() && !IsAsciiDigit(text[j])) ++j;
        out.emplace_back(text.substr(i, j - i));
        i = j;
      }
      break;
    }
  }
  return out;
}

// Bijective token-string <-> id map. Id 0 is reserved for the unknown token.
class Vocab {
 public:
  static constexpr TokenId kUnknown = 0;
  static constexpr std::string_view kUnknownToken = "<unk>";

  explicit Vocab(TokenizationMode mode = TokenizationMode::kCharacter)
      : mode_(mode) {
    tokens_.emplace_back(kUnknownToken);
    ids_.emplace(std::string(kUnknownToken), kUnknown);
  }

  // Collects every token string appearing in `texts` (sorted, so the result
  // does not depend on text order). Digit mode always contains "0".."9".
  static Vocab Build(TokenizationMode mode,
                     const std::vector<std::string>& texts) {
    std::set<std::string> seen;
    if (mode == TokenizationMode::kDigit) {
      for (char c = '0'; c <= '9'; ++c) seen.emplace(1, c);
    }
    for (const auto& text : texts) {
      for (auto& tok : SplitTokens(text, mode)) seen.insert(std::move(tok));
    }
    Vocab vocab(mode);
    for (const auto& tok : seen) vocab.Add(tok);
    return vocab;
  }

  // `tokens` is the full id-ordered list; element 0 must be the unknown
  // token.
  static Vocab FromTokens(TokenizationMode mode,
                          const std::vector<std::string>& tokens) {
    if (tokens.empty() || tokens.front() != kUnknownToken) {
      throw FormatError("vocab: first entry must be \"<unk>\"");
    }
    Vocab vocab(mode);
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      if (vocab.Contains(tokens[i])) {
        throw FormatError("vocab: duplicate token \"" + tokens[i] + "\"");
      }
      vocab.Add(tokens[i]);
    }
    return vocab;
  }

  TokenId Add(const std::string& token) {
    auto it = ids_.find(token);
    if (it != ids_.end()) return it->second;
    const auto id = static_cast<TokenId>(tokens_.size());
    tokens_.push_back(token);
    ids_.emplace(token, id);
    return id;
  }

  bool Contains(const std::string& token) const {
    return ids_.count(token) != 0;
  }
  TokenId Id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnknown : it->second;
  }
  const std::string& Token(TokenId id) const {
    if (id >= tokens_.size()) throw DimensionError("vocab: id out of range");
    return tokens_[id];
  }

  std::size_t size() const { return tokens_.size(); }
  TokenizationMode mode() const { return mode_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  TokenSeq Tokenize(std::string_view text) const {
    TokenSeq out;
    for (const auto& tok : SplitTokens(text, mode_)) out.push_back(Id(tok));
    return out;
  }

  std::string Detokenize(std::span<const TokenId> ids) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (mode_ == TokenizationMode::kWord && i > 0) out.push_back(' ');
      out += Token(ids[i]);
    }
    return out;
  }

 private:
  TokenizationMode mode_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

// One user's raw documents before tokenization.
struct RawUser {
  std::string user_id;
  std::vector<std::string> documents;
};

struct UserCorpus {
  std::string user_id;
  std::vector<TokenSeq> documents;
};

inline std::vector<UserCorpus> TokenizeUsers(const std::vector<RawUser>& raw,
                                             const Vocab& vocab) {
  std::vector<UserCorpus> out;
  out.reserve(raw.size());
  std::unordered_set<std::string> ids;
  for (const auto& user : raw) {
    if (!ids.insert(user.user_id).second) {
      throw ParameterError("duplicate user id: " + user.user_id);
    }
    UserCorpus uc{user.user_id, {}};
    for (const auto& doc : user.documents) {
      uc.documents.push_back(vocab.Tokenize(doc));
    }
    out.push_back(std::move(uc));
  }
  return out;
}

// Cuts a single token stream into consecutive fixed-length blocks, one
// synthetic user per block. The final short block is kept.
inline std::vector<UserCorpus> BlockUsers(std::span<const TokenId> stream,
                                          std::size_t block_len,
                                          const std::string& prefix = "block") {
  if (block_len == 0) throw ParameterError("block length must be positive");
  std::vector<UserCorpus> out;
  for (std::size_t start = 0; start < stream.size(); start += block_len) {
    const std::size_t end = std::min(stream.size(), start + block_len);
    UserCorpus uc{prefix + "-" + std::to_string(out.size()), {}};
    uc.documents.emplace_back(stream.begin() + start, stream.begin() + end);
    out.push_back(std::move(uc));
  }
  return out;
}

// k parts, each split into two disjoint subparts of user ids.
struct Partition {
  struct Part {
    std::vector<std::string> first;
    std::vector<std::string> second;
    std::size_t size() const { return first.size() + second.size(); }
  };
  std::vector<Part> parts;
  std::uint64_t seed = 0;

  std::size_t k() const { return parts.size(); }
  friend bool operator==(const Partition& a, const Partition& b) {
    if (a.seed != b.seed || a.parts.size() != b.parts.size()) return false;
    for (std::size_t i = 0; i < a.parts.size(); ++i) {
      if (a.parts[i].first != b.parts[i].first ||
          a.parts[i].second != b.parts[i].second) {
        return false;
      }
    }
    return true;
  }
};

// Uniformly random balanced k-fold partition. Part sizes differ by at most
// one (larger parts first); an odd part puts its extra user in the first
// subpart.
inline Partition MakePartition(const std::vector<std::string>& user_ids,
                               std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ParameterError("partition needs k >= 2 parts");
  if (user_ids.size() < 2 * k) {
    throw CapacityError("partition into " + std::to_string(k) +
                        " parts needs at least " + std::to_string(2 * k) +
                        " users, got " + std::to_string(user_ids.size()));
  }
  {
    std::unordered_set<std::string> seen(user_ids.begin(), user_ids.end());
    if (seen.size() != user_ids.size()) {
      throw ParameterError("partition: user ids are not unique");
    }
  }
  std::vector<std::size_t> order(user_ids.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[UniformIndex(rng, i)]);
  }

  Partition partition;
  partition.seed = seed;
  const std::size_t base = user_ids.size() / k;
  const std::size_t extra = user_ids.size() % k;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t size = base + (i < extra ? 1 : 0);
    const std::size_t first_size = (size + 1) / 2;
    Partition::Part part;
    for (std::size_t j = 0; j < size; ++j) {
      const auto& id = user_ids[order[cursor++]];
      (j < first_size ? part.first : part.second).push_back(id);
    }
    partition.parts.push_back(std::move(part));
  }
  return partition;
}

inline Partition MakePartition(const std::vector<UserCorpus>& users,
                               std::size_t k, std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(users.size());
  for (const auto& u : users) ids.push_back(u.user_id);
  return MakePartition(ids, k, seed);
}

// Selects the users named in `ids`, in that order.
inline std::vector<UserCorpus> SelectUsers(
    const std::vector<UserCorpus>& users, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const UserCorpus*> by_id;
  for (const auto& u : users) by_id.emplace(u.user_id, &u);
  std::vector<UserCorpus> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ParameterError("unknown user id: " + id);
    out.push_back(*it->second);
  }
  return out;
}

// Synthetic "one templated sentence per user" corpus with secret codes.
struct CodeCorpus {
  std::vector<RawUser> users;
  std::vector<std::string> codes;  // zero-padded, codes[i] belongs to users[i]
  std::string prompt;              // template text before the placeholder
};

inline std::string FormatCode(std::uint64_t value, std::size_t digits) {
  std::string s = std::to_string(value);
  if (s.size() < digits) s.insert(0, digits - s.size(), '0');
  return s;
}

inline std::uint64_t CodeSpaceSize(std::size_t digits) {
  if (digits == 0 || digits > 18) {
    throw ParameterError("code length must be in [1, 18]");
  }
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < digits; ++i) n *= 10;
  return n;
}

// Draws `count` distinct values uniformly from [0, n) (Floyd's algorithm);
// returned in draw order.
inline std::vector<std::uint64_t> SampleWithoutReplacement(std::uint64_t n,
                                                           std::size_t count,
                                                           Rng& rng) {
  if (count > n) throw CapacityError("cannot draw more values than exist");
  std::unordered_set<std::uint64_t> chosen;
  std::vector<std::uint64_t> out;
  out.reserve(count);
  for (std::uint64_t j = n - count; j < n; ++j) {
    const std::uint64_t t = UniformIndex(rng, j + 1);
    const std::uint64_t pick = chosen.count(t) ? j : t;
    chosen.insert(pick);
    out.push_back(pick);
  }
  // Floyd yields a uniform subset, not a uniform order.
  for (std::size_t i = out.size(); i > 1; --i) {
    std::swap(out[i - 1], out[UniformIndex(rng, i)]);
  }
  return out;
}

// Fills the "{}" placeholder of `templ` (or appends when absent).
inline std::string FillTemplate(const std::string& templ,
                                const std::string& code) {
  const auto pos = templ.find("{}");
  if (pos == std::string::npos) return templ + code;
  return templ.substr(0, pos) + code + templ.substr(pos + 2);
}

inline std::string TemplatePrompt(const std::string& templ) {
  const auto pos = templ.find("{}");
  return pos == std::string::npos ? templ : templ.substr(0, pos);
}

inline CodeCorpus SynthesizeCodeCorpus(std::size_t m, std::size_t digits,
                                       const std::string& templ,
                                       std::uint64_t seed) {
  if (m == 0) throw ParameterError("code corpus needs m >= 1 users");
  const std::uint64_t space = CodeSpaceSize(digits);
  if (m > space) {
    throw CapacityError(std::to_string(m) + " distinct " +
                        std::to_string(digits) + "-digit codes do not exist");
  }
  Rng rng(seed);
  CodeCorpus corpus;
  corpus.prompt = TemplatePrompt(templ);
  for (std::uint64_t value : SampleWithoutReplacement(space, m, rng)) {
    std::string code = FormatCode(value, digits);
    corpus.users.push_back(RawUser{"user-" + std::to_string(corpus.users.size()),
                                   {FillTemplate(templ, code)}});
    corpus.codes.push_back(std::move(code));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Files

inline std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void WriteFile(const std::filesystem::path& path,
                      std::string_view contents) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

// Non-empty lines of a UTF-8 text file, one document each.
inline std::vector<std::string> ReadLines(const std::filesystem::path& path) {
  std::istringstream in(ReadFile(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

// JSON-lines with {"user_id": ..., "text": ...}; repeated ids append
// documents to the same user. Users keep first-appearance order.
inline std::vector<RawUser> LoadUsersJsonl(const std::filesystem::path& path) {
  std::istringstream in(ReadFile(path));
  std::vector<RawUser> users;
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " +
                        e.what());
    }
    if (!j.is_object() || !j.contains("user_id") || !j.contains("text") ||
        !j["text"].is_string()) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected {user_id, text}");
    }
    const std::string id = j["user_id"].is_string()
                               ? j["user_id"].get<std::string>()
                               : j["user_id"].dump();
    auto [it, inserted] = index.emplace(id, users.size());
    if (inserted) users.push_back(RawUser{id, {}});
    users[it->second].documents.push_back(j["text"].get<std::string>());
  }
  return users;
}

// One subdirectory per user; every regular file inside is one document.
// Users and files are visited in lexicographic order.
inline std::vector<RawUser> LoadUsersDirectory(
    const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<RawUser> users;
  for (const auto& dir : dirs) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    RawUser user{dir.filename().string(), {}};
    for (const auto& f : files) user.documents.push_back(ReadFile(f));
    users.push_back(std::move(user));
  }
  return users;
}

inline std::vector<RawUser> LoadUsers(const std::filesystem::path& path) {
  return std::filesystem::is_directory(path) ? LoadUsersDirectory(path)
                                             : LoadUsersJsonl(path);
}

// Vocab file: JSON list of token strings in id order.
inline void SaveVocab(const Vocab& vocab, const std::filesystem::path& path) {
  WriteFile(path, nlohmann::json(vocab.tokens()).dump() + "\n");
}

inline Vocab LoadVocab(const std::filesystem::path& path,
                       TokenizationMode mode) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw FormatError(path.string() + ": expected a list");
  std::vector<std::string> tokens;
  for (const auto& t : j) {
    if (!t.is_string()) throw FormatError(path.string() + ": non-string token");
    tokens.push_back(t.get<std::string>());
  }
  return Vocab::FromTokens(mode, tokens);
}

}  // namespace submix

#endif  // SUBMIX_CORPUS_HPP_
