#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "g2s/errors.hpp"
#include "g2s/graph.hpp"
#include "g2s/model.hpp"

namespace g2s {

using TokenSeq = std::vector<std::string>;

/// Fraction of exact matches between predictions and references.
inline double exact_match_rate(std::span<const TokenSeq> predictions, std::span<const TokenSeq> references) {
  if (predictions.size() != references.size()) throw ArgumentError("prediction/reference count mismatch");
  if (predictions.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) hits += predictions[i] == references[i];
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

inline std::vector<TokenSeq> decode_all(const Model& model, std::span<const Sample> samples, std::size_t beam,
                                        std::size_t max_len) {
  std::vector<TokenSeq> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back(model.decode(s.graph, beam, max_len));
  return out;
}

/// Decode length limit: twice the longest target in `training`. Evaluation
/// falls back to the evaluated set itself when no limit is given.
inline std::size_t default_max_len(std::span<const Sample> training) {
  std::size_t longest = 0;
  for (const Sample& s : training) longest = std::max(longest, s.target.size());
  return std::max<std::size_t>(1, 2 * longest);
}

/// Path accuracy: share of samples whose beam-search output equals the target.
inline double evaluate_path_accuracy(const Model& model, std::span<const Sample> samples, std::size_t beam,
                                     std::size_t max_len = 0) {
  if (samples.empty()) throw ArgumentError("evaluation set is empty");
  if (max_len == 0) max_len = default_max_len(samples);
  std::vector<TokenSeq> refs;
  for (const Sample& s : samples) refs.push_back(s.target);
  return exact_match_rate(decode_all(model, samples, beam, max_len), refs);
}

/// Corpus BLEU-4 on a 0-1 scale: geometric mean of the clipped 1..4-gram
/// precisions pooled over the corpus, times the brevity penalty
/// exp(1 - r/c) when the candidates are shorter than the references.
/// Any zero n-gram precision yields 0.
inline double bleu4(std::span<const TokenSeq> candidates, std::span<const TokenSeq> references) {
  if (candidates.size() != references.size()) throw ArgumentError("candidate/reference count mismatch");
  if (candidates.empty()) throw ArgumentError("BLEU needs a non-empty corpus");
  constexpr std::size_t kMaxN = 4;
  std::size_t matched[kMaxN] = {};
  std::size_t total[kMaxN] = {};
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const TokenSeq& c = candidates[i];
    const TokenSeq& r = references[i];
    cand_len += c.size();
    ref_len += r.size();
    for (std::size_t n = 1; n <= kMaxN; ++n) {
      if (c.size() < n) continue;
      std::map<std::vector<std::string>, std::size_t> ref_counts;
      for (std::size_t j = 0; j + n <= r.size(); ++j) ++ref_counts[TokenSeq(r.begin() + j, r.begin() + j + n)];
      std::map<std::vector<std::string>, std::size_t> cand_counts;
      for (std::size_t j = 0; j + n <= c.size(); ++j) ++cand_counts[TokenSeq(c.begin() + j, c.begin() + j + n)];
      for (const auto& [gram, count] : cand_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matched[n - 1] += std::min(count, it->second);
      }
      total[n - 1] += c.size() - n + 1;
    }
  }
  double log_sum = 0.0;
  for (std::size_t n = 0; n < kMaxN; ++n) {
    if (matched[n] == 0 || total[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched[n]) / static_cast<double>(total[n]));
  }
  const double bp =
      cand_len >= ref_len ? 1.0 : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return bp * std::exp(log_sum / kMaxN);
}

inline double evaluate_bleu(const Model& model, std::span<const Sample> samples, std::size_t beam,
                            std::size_t max_len = 0) {
  if (samples.empty()) throw ArgumentError("evaluation set is empty");
  if (max_len == 0) max_len = default_max_len(samples);
  std::vector<TokenSeq> refs;
  for (const Sample& s : samples) refs.push_back(s.target);
  return bleu4(decode_all(model, samples, beam, max_len), refs);
}

}  // namespace g2s
