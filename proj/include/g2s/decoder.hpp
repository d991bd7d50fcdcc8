#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "g2s/autodiff.hpp"
#include "g2s/encoder.hpp"
#include "g2s/errors.hpp"
#include "g2s/layers.hpp"
#include "g2s/params.hpp"

namespace g2s {

struct DecoderConfig {
  std::size_t hidden_dim = 80;
  std::size_t attn_dim = 80;
  double dropout = 0.5;
  bool attention = true;
};

/// Decoder weights. The token embedding is the shared "embed" matrix.
inline void add_decoder_params(ParamSet& params, const DecoderConfig& cfg, std::size_t embed_dim,
                               std::size_t node_dim, std::size_t vocab_size, Rng& rng) {
  add_lstm_params(params, "dec.lstm", embed_dim + node_dim, cfg.hidden_dim, rng);
  if (cfg.attention) {
    params.add("dec.attn.W", xavier_uniform(cfg.hidden_dim, cfg.attn_dim, rng));
    params.add("dec.attn.U", xavier_uniform(node_dim, cfg.attn_dim, rng));
    params.add("dec.attn.v", xavier_uniform(cfg.attn_dim, 1, rng));
  }
  add_dense_params(params, "dec.out", cfg.hidden_dim + node_dim, vocab_size, rng);
}

struct Attention {
  Var context;  // [1, node_dim]
  Var alpha;    // [1, V]
};

/// e_j = v^T tanh(s W + z_j U), alpha = softmax(e), context = alpha z.
/// `projected_nodes` is z U, which does not change across decode steps.
inline Attention attend_projected(const Var& s_prev, const Var& z, const Var& projected_nodes, const Var& w,
                                  const Var& v) {
  Var scores = matmul(tanh(add_row(projected_nodes, matmul(s_prev, w))), v);  // [V, 1]
  Var alpha = softmax_rows(reshape(scores, Shape{1, z.rows()}));
  return {matmul(alpha, z), alpha};
}

inline Attention compute_attention(const Var& s_prev, const Var& z, const Var& w, const Var& u, const Var& v) {
  return attend_projected(s_prev, z, matmul(z, u), w, v);
}

using DecoderState = LstmState;

struct StepOutput {
  Var logits;  // [1, vocab]
  DecoderState state;
  Var alpha;   // invalid when attention is off
};

/// Decoder bound to one encoded graph on one tape.
///
/// Attention is queried with the previous hidden state s_{i-1}; the LSTM
/// then consumes CONCAT(embed(y_{i-1}), c_i) and the output layer reads
/// CONCAT(s_i, c_i) through dropout. With attention off the context is the
/// graph embedding at every step.
class DecoderRun {
 public:
  DecoderRun(Tape& tape, ParamSet& params, const DecoderConfig& cfg, const EncodedGraph& enc)
      : tape_(tape),
        cfg_(cfg),
        z_(enc.nodes.z),
        graph_(enc.graph.vec),
        embed_(tape.param(params.get("embed"))),
        lstm_w_(tape.param(params.get("dec.lstm.W"))),
        lstm_b_(tape.param(params.get("dec.lstm.b"))),
        out_w_(tape.param(params.get("dec.out.W"))),
        out_b_(tape.param(params.get("dec.out.b"))),
        proj_w_(tape.param(params.get("enc.proj.W"))),
        proj_b_(tape.param(params.get("enc.proj.b"))) {
    if (cfg.attention) {
      attn_w_ = tape.param(params.get("dec.attn.W"));
      attn_v_ = tape.param(params.get("dec.attn.v"));
      projected_ = matmul(z_, tape.param(params.get("dec.attn.U")));
    }
  }

  std::size_t vocab_size() const { return embed_.rows(); }

  /// s_0 = tanh(graph_embedding W_proj + b), cell state zero.
  DecoderState initial_state() const {
    return {dense_layer(graph_, proj_w_, proj_b_, Activation::tanh),
            tape_.constant(Tensor(Shape{1, cfg_.hidden_dim}))};
  }

  struct Hidden {
    DecoderState state;
    Var context;
    Var alpha;
  };

  Hidden advance(const DecoderState& state, std::size_t y_prev) const {
    if (y_prev >= vocab_size()) throw ArgumentError("token id " + std::to_string(y_prev) + " out of vocabulary");
    Var context = graph_;
    Var alpha;
    if (cfg_.attention) {
      Attention a = attend_projected(state.h, z_, projected_, attn_w_, attn_v_);
      context = a.context;
      alpha = a.alpha;
    }
    Var x = concat_cols({gather_rows(embed_, {y_prev}), context});
    return {lstm_step(x, state, lstm_w_, lstm_b_), context, alpha};
  }

  /// CONCAT(s_i, c_i) after dropout, ready for the output layer.
  Var readout_input(const Hidden& h, Rng& rng, bool training) const {
    return dropout(concat_cols({h.state.h, h.context}), cfg_.dropout, rng, training);
  }

  Var logits(const Var& readout_rows) const { return add_row(matmul(readout_rows, out_w_), out_b_); }

  StepOutput decode_step(const DecoderState& state, std::size_t y_prev, Rng& rng, bool training) const {
    Hidden h = advance(state, y_prev);
    return {logits(readout_input(h, rng, training)), h.state, h.alpha};
  }

  /// Mean NLL of `target_ids` followed by `eos`, teacher forced from `sos`.
  Var sequence_loss(std::span<const std::size_t> target_ids, std::size_t sos, std::size_t eos, Rng& rng,
                    bool training) const {
    if (target_ids.empty()) throw ArgumentError("sequence_loss needs a non-empty target");
    DecoderState st = initial_state();
    std::vector<Var> rows;
    std::vector<std::size_t> gold;
    rows.reserve(target_ids.size() + 1);
    std::size_t prev = sos;
    for (std::size_t i = 0; i <= target_ids.size(); ++i) {
      Hidden h = advance(st, prev);
      rows.push_back(readout_input(h, rng, training));
      st = h.state;
      const std::size_t next = i < target_ids.size() ? target_ids[i] : eos;
      gold.push_back(next);
      prev = next;
    }
    return cross_entropy(logits(concat_rows(rows)), std::move(gold));
  }

 private:
  Tape& tape_;
  DecoderConfig cfg_;
  Var z_;
  Var graph_;
  Var embed_;
  Var lstm_w_, lstm_b_;
  Var out_w_, out_b_;
  Var proj_w_, proj_b_;
  Var attn_w_, attn_v_;
  Var projected_;
};

}  // namespace g2s
