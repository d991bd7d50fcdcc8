#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "g2s/errors.hpp"

namespace g2s {

struct BeamResult {
  std::vector<std::size_t> tokens;  // without the end token
  double log_prob = 0.0;
  bool completed = false;  // false: no hypothesis emitted the end token
};

/// Length-bounded beam search over an autoregressive model.
///
/// `step(state, prev_token)` returns `{log_probs over the vocabulary, next
/// state}`. Each round expands every live hypothesis by every token and keeps
/// the `beam` best candidates; those ending in `eos` are set aside as
/// finished. Candidates are ranked by log-probability, ties by the smaller
/// token sequence. The search stops once the best finished hypothesis beats
/// every live one (scores only decrease) or after `max_len` rounds. Without
/// any finished hypothesis the best full-length live one is returned.
template <class State, class StepFn>
BeamResult beam_search(StepFn&& step, State initial, std::size_t sos, std::optional<std::size_t> eos,
                       std::size_t beam, std::size_t max_len) {
  if (beam < 1) throw ArgumentError("beam width must be at least 1");
  if (max_len < 1) throw ArgumentError("max_len must be at least 1");

  struct Hyp {
    std::vector<std::size_t> tokens;
    double log_prob;
    std::shared_ptr<const State> state;
  };
  struct Candidate {
    std::size_t parent;
    std::size_t token;
    double log_prob;
    std::shared_ptr<const State> state;
  };
  const auto better = [](double lp_a, const std::vector<std::size_t>& a, double lp_b,
                         const std::vector<std::size_t>& b) { return lp_a != lp_b ? lp_a > lp_b : a < b; };

  std::vector<Hyp> live{Hyp{{}, 0.0, std::make_shared<const State>(std::move(initial))}};
  std::optional<BeamResult> best_done;

  for (std::size_t round = 0; round < max_len && !live.empty(); ++round) {
    std::vector<Candidate> cands;
    for (std::size_t h = 0; h < live.size(); ++h) {
      const std::size_t prev = live[h].tokens.empty() ? sos : live[h].tokens.back();
      auto [log_probs, next] = step(*live[h].state, prev);
      auto shared = std::make_shared<const State>(std::move(next));
      for (std::size_t t = 0; t < log_probs.size(); ++t) {
        cands.push_back(Candidate{h, t, live[h].log_prob + log_probs[t], shared});
      }
    }
    // Rank with the full token sequence as tie-breaker.
    std::vector<std::vector<std::size_t>> seqs(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) {
      seqs[i] = live[cands[i].parent].tokens;
      seqs[i].push_back(cands[i].token);
    }
    std::vector<std::size_t> order(cands.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t keep = std::min(beam, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return better(cands[a].log_prob, seqs[a], cands[b].log_prob, seqs[b]);
                      });
    std::vector<Hyp> next_live;
    for (std::size_t r = 0; r < keep; ++r) {
      const std::size_t i = order[r];
      if (eos && cands[i].token == *eos) {
        std::vector<std::size_t> toks = live[cands[i].parent].tokens;
        if (!best_done || better(cands[i].log_prob, toks, best_done->log_prob, best_done->tokens)) {
          best_done = BeamResult{std::move(toks), cands[i].log_prob, true};
        }
      } else {
        next_live.push_back(Hyp{std::move(seqs[i]), cands[i].log_prob, cands[i].state});
      }
    }
    live = std::move(next_live);
    if (best_done && (live.empty() || best_done->log_prob >= live.front().log_prob)) break;
  }
  if (best_done) return *best_done;
  if (live.empty()) return {};
  return BeamResult{live.front().tokens, live.front().log_prob, false};
}

}  // namespace g2s
