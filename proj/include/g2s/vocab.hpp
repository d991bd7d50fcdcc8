#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "g2s/errors.hpp"
#include "g2s/graph.hpp"

namespace g2s {

/// Shared source/target token table. Special tokens hold fixed low ids.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kSos = 1;
  static constexpr std::size_t kEos = 2;
  static constexpr std::size_t kUnk = 3;
  static constexpr std::size_t kSuper = 4;
  static constexpr std::size_t kStart = 5;
  static constexpr std::size_t kEnd = 6;

  static const std::array<std::string, 7>& specials() {
    static const std::array<std::string, 7> s{"<PAD>", "<SOS>", "<EOS>", "<UNK>", kSuperToken, "START", "END"};
    return s;
  }

  Vocabulary() {
    for (const auto& t : specials()) push(t);
  }

  /// Specials first, then `tokens` (duplicates and specials dropped) in
  /// sorted order.
  static Vocabulary from_tokens(std::span<const std::string> tokens) {
    Vocabulary v;
    std::set<std::string> sorted(tokens.begin(), tokens.end());
    for (const auto& t : sorted)
      if (!v.contains(t)) v.push(t);
    return v;
  }

  /// Exact id list as produced by `tokens()`; used when loading checkpoints.
  static Vocabulary from_ordered(const std::vector<std::string>& tokens) {
    Vocabulary v;
    if (tokens.size() < specials().size() ||
        !std::equal(specials().begin(), specials().end(), tokens.begin())) {
      throw ValidationError("vocabulary does not start with the special tokens");
    }
    for (std::size_t i = specials().size(); i < tokens.size(); ++i) {
      if (v.contains(tokens[i])) throw ValidationError("duplicate vocabulary token: " + tokens[i]);
      v.push(tokens[i]);
    }
    return v;
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  bool contains(const std::string& t) const { return ids_.count(t) != 0; }

  std::size_t id(const std::string& t) const {
    auto it = ids_.find(t);
    return it == ids_.end() ? kUnk : it->second;
  }

  const std::string& token(std::size_t id) const {
    if (id >= tokens_.size()) throw ArgumentError("token id " + std::to_string(id) + " out of vocabulary");
    return tokens_[id];
  }

  std::vector<std::size_t> encode(std::span<const std::string> toks) const {
    std::vector<std::size_t> out;
    out.reserve(toks.size());
    for (const auto& t : toks) out.push_back(id(t));
    return out;
  }

  std::vector<std::string> decode(std::span<const std::size_t> ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (std::size_t i : ids) out.push_back(token(i));
    return out;
  }

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  void push(const std::string& t) {
    ids_.emplace(t, tokens_.size());
    tokens_.push_back(t);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
};

/// Every node-attribute token and target token of `samples`, plus specials.
inline Vocabulary build_vocabulary(std::span<const Sample> samples) {
  std::vector<std::string> toks;
  for (const Sample& s : samples) {
    for (const Attr& a : s.graph.attrs()) toks.insert(toks.end(), a.begin(), a.end());
    toks.insert(toks.end(), s.target.begin(), s.target.end());
  }
  return Vocabulary::from_tokens(toks);
}

}  // namespace g2s
