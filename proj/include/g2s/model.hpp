#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "g2s/autodiff.hpp"
#include "g2s/beam.hpp"
#include "g2s/decoder.hpp"
#include "g2s/encoder.hpp"
#include "g2s/graph.hpp"
#include "g2s/params.hpp"
#include "g2s/vocab.hpp"

namespace g2s {

struct ModelConfig {
  EncoderConfig encoder;
  DecoderConfig decoder;
};

/// Graph encoder plus attention decoder sharing one vocabulary and one
/// parameter set.
class Model {
 public:
  Model(const ModelConfig& cfg, Vocabulary vocab, std::uint64_t seed) : cfg_(cfg), vocab_(std::move(vocab)) {
    if (cfg_.encoder.feat_dim == 0 || cfg_.encoder.hidden_dim == 0 || cfg_.decoder.hidden_dim == 0) {
      throw ArgumentError("model dimensions must be positive");
    }
    Rng rng(seed);
    add_encoder_params(params_, cfg_.encoder, vocab_.size(), cfg_.decoder.hidden_dim, rng);
    add_decoder_params(params_, cfg_.decoder, cfg_.encoder.feat_dim, cfg_.encoder.node_dim(), vocab_.size(), rng);
    params_.zero_grad();
  }

  Model(const ModelConfig& cfg, Vocabulary vocab, ParamSet params)
      : cfg_(cfg), vocab_(std::move(vocab)), params_(std::move(params)) {}

  const ModelConfig& config() const noexcept { return cfg_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  ParamSet& params() noexcept { return params_; }
  const ParamSet& params() const noexcept { return params_; }

  EncodedGraph encode(Tape& tape, const DirectedGraph& g, Rng& rng) {
    return encode_graph(tape, g, vocab_, params_, cfg_.encoder, rng);
  }

  /// Teacher-forced mean NLL of the sample's target (plus end token).
  Var loss(Tape& tape, const Sample& s, Rng& rng, bool training) {
    EncodedGraph enc = encode(tape, s.graph, rng);
    DecoderRun dec(tape, params_, cfg_.decoder, enc);
    const auto ids = vocab_.encode(s.target);
    return dec.sequence_loss(ids, Vocabulary::kSos, Vocabulary::kEos, rng, training);
  }

  /// Beam search decode; `rng` only matters for the LSTM aggregator and
  /// neighbor sampling.
  BeamResult decode_ids(const DirectedGraph& g, std::size_t beam, std::size_t max_len, Rng& rng) const {
    Tape tape(false);
    ParamSet& params = frozen_params();
    EncodedGraph enc = encode_graph(tape, g, vocab_, params, cfg_.encoder, rng);
    DecoderRun dec(tape, params, cfg_.decoder, enc);
    Rng unused(0);
    auto step = [&](const DecoderState& st, std::size_t prev) {
      StepOutput out = dec.decode_step(st, prev, unused, false);
      return std::make_pair(log_softmax(std::span<const double>(out.logits.value().data)), out.state);
    };
    return beam_search<DecoderState>(step, dec.initial_state(), Vocabulary::kSos, Vocabulary::kEos, beam, max_len);
  }

  std::vector<std::string> decode(const DirectedGraph& g, std::size_t beam, std::size_t max_len) const {
    Rng rng(0);
    const BeamResult r = decode_ids(g, beam, max_len, rng);
    return vocab_.decode(r.tokens);
  }

 private:
  // Only for tapes built with gradients disabled, which never write to
  // the tensors they are handed.
  ParamSet& frozen_params() const { return const_cast<ParamSet&>(params_); }

  ModelConfig cfg_;
  Vocabulary vocab_;
  ParamSet params_;
};

}  // namespace g2s
