#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "g2s/autodiff.hpp"
#include "g2s/errors.hpp"
#include "g2s/graph.hpp"
#include "g2s/layers.hpp"
#include "g2s/params.hpp"
#include "g2s/vocab.hpp"

namespace g2s {

enum class AggregatorKind { mean, lstm, pooling };
enum class DirectionMode { bi, fwd, bwd };
enum class GraphEmbeddingKind { pooling, supernode };
enum class PoolKind { max, min, avg };
enum class FeatureMode { lookup, mean, lstm };
enum class Direction { fwd, bwd };

inline AggregatorKind parse_aggregator(const std::string& s) {
  if (s == "mean") return AggregatorKind::mean;
  if (s == "lstm") return AggregatorKind::lstm;
  if (s == "pooling") return AggregatorKind::pooling;
  throw ArgumentError("unknown aggregator kind: " + s);
}

inline std::string to_string(AggregatorKind k) {
  switch (k) {
    case AggregatorKind::mean: return "mean";
    case AggregatorKind::lstm: return "lstm";
    case AggregatorKind::pooling: return "pooling";
  }
  return "?";
}

inline DirectionMode parse_direction(const std::string& s) {
  if (s == "bi") return DirectionMode::bi;
  if (s == "fwd") return DirectionMode::fwd;
  if (s == "bwd") return DirectionMode::bwd;
  throw ArgumentError("unknown direction mode: " + s);
}

inline std::string to_string(DirectionMode d) {
  switch (d) {
    case DirectionMode::bi: return "bi";
    case DirectionMode::fwd: return "fwd";
    case DirectionMode::bwd: return "bwd";
  }
  return "?";
}

inline GraphEmbeddingKind parse_graph_embedding(const std::string& s) {
  if (s == "pooling") return GraphEmbeddingKind::pooling;
  if (s == "supernode") return GraphEmbeddingKind::supernode;
  throw ArgumentError("unknown graph embedding method: " + s);
}

inline std::string to_string(GraphEmbeddingKind k) {
  return k == GraphEmbeddingKind::pooling ? "pooling" : "supernode";
}

inline PoolKind parse_pool(const std::string& s) {
  if (s == "max") return PoolKind::max;
  if (s == "min") return PoolKind::min;
  if (s == "avg") return PoolKind::avg;
  throw ArgumentError("unknown pooling kind: " + s);
}

inline std::string to_string(PoolKind k) {
  switch (k) {
    case PoolKind::max: return "max";
    case PoolKind::min: return "min";
    case PoolKind::avg: return "avg";
  }
  return "?";
}

inline FeatureMode parse_feature_mode(const std::string& s) {
  if (s == "lookup") return FeatureMode::lookup;
  if (s == "mean") return FeatureMode::mean;
  if (s == "lstm") return FeatureMode::lstm;
  throw ArgumentError("unknown feature mode: " + s);
}

inline std::string to_string(FeatureMode m) {
  switch (m) {
    case FeatureMode::lookup: return "lookup";
    case FeatureMode::mean: return "mean";
    case FeatureMode::lstm: return "lstm";
  }
  return "?";
}

struct EncoderConfig {
  std::size_t feat_dim = 40;
  std::size_t hidden_dim = 40;
  std::size_t hops = 6;
  // Hops past this one reuse its parameters.
  std::size_t max_distinct_hops = 10;
  AggregatorKind aggregator = AggregatorKind::mean;
  DirectionMode direction = DirectionMode::bi;
  GraphEmbeddingKind graph_embedding = GraphEmbeddingKind::pooling;
  PoolKind pool = PoolKind::max;
  FeatureMode feature_mode = FeatureMode::mean;
  bool share_direction_weights = false;
  // Embedding rows start uniform in (-embed_init, embed_init).
  double embed_init = 0.1;
  // 0 disables neighbor sampling.
  std::size_t neighbor_cap = 0;

  std::size_t num_directions() const { return direction == DirectionMode::bi ? 2 : 1; }
  std::size_t node_dim() const { return hidden_dim * num_directions(); }

  std::vector<Direction> directions() const {
    switch (direction) {
      case DirectionMode::bi: return {Direction::fwd, Direction::bwd};
      case DirectionMode::fwd: return {Direction::fwd};
      case DirectionMode::bwd: return {Direction::bwd};
    }
    return {};
  }

  std::size_t hop_group(std::size_t hop) const { return std::min(hop, max_distinct_hops); }
  std::size_t hop_input_dim(std::size_t hop) const { return hop_group(hop) == 1 ? feat_dim : hidden_dim; }

  std::string hop_prefix(std::size_t hop, Direction dir) const {
    const std::string d = share_direction_weights ? "shared" : (dir == Direction::fwd ? "fwd" : "bwd");
    return "enc.hop" + std::to_string(hop_group(hop)) + "." + d;
  }
};

/// Registers every encoder parameter, including the projection from the
/// graph embedding to a decoder hidden state of width `decoder_hidden`.
inline void add_encoder_params(ParamSet& params, const EncoderConfig& cfg, std::size_t vocab_size,
                               std::size_t decoder_hidden, Rng& rng) {
  if (cfg.hops < 1) throw ArgumentError("hop count must be at least 1");
  if (cfg.max_distinct_hops < 1) throw ArgumentError("max_distinct_hops must be at least 1");
  params.add("embed", uniform_tensor(Shape{vocab_size, cfg.feat_dim}, cfg.embed_init, rng));
  if (cfg.feature_mode == FeatureMode::lstm) add_lstm_params(params, "enc.attr_lstm", cfg.feat_dim, cfg.feat_dim, rng);
  const std::size_t groups = std::min(cfg.hops, cfg.max_distinct_hops);
  for (std::size_t g = 1; g <= groups; ++g) {
    for (Direction dir : cfg.directions()) {
      const std::string prefix = cfg.hop_prefix(g, dir);
      if (params.contains(prefix + ".W")) continue;
      const std::size_t in = cfg.hop_input_dim(g);
      if (cfg.aggregator == AggregatorKind::pooling) add_dense_params(params, prefix + ".pool", in, in, rng);
      if (cfg.aggregator == AggregatorKind::lstm) add_lstm_params(params, prefix + ".lstm", in, in, rng);
      params.add(prefix + ".W", xavier_uniform(2 * in, cfg.hidden_dim, rng));
    }
  }
  const std::size_t zd = cfg.node_dim();
  if (cfg.graph_embedding == GraphEmbeddingKind::pooling) add_dense_params(params, "enc.graph", zd, zd, rng);
  add_dense_params(params, "enc.proj", zd, decoder_hidden, rng);
}

/// Initial feature matrix [V, feat_dim]. Single-token attributes are plain
/// embedding rows. Multi-token attributes use the mean of their rows, the
/// final state of an LSTM over them (`lstm`), or their first token only
/// (`lookup`). Unknown tokens map to <UNK>.
inline Var init_node_features(Tape& tape, const DirectedGraph& g, const Vocabulary& vocab, ParamSet& params,
                              const EncoderConfig& cfg) {
  Var embed = tape.param(params.get("embed"));
  const std::size_t v_count = g.num_nodes();
  const bool single = std::all_of(g.attrs().begin(), g.attrs().end(), [](const Attr& a) { return a.size() == 1; });
  if (single || cfg.feature_mode == FeatureMode::lookup) {
    std::vector<std::size_t> ids;
    ids.reserve(v_count);
    for (const Attr& a : g.attrs()) ids.push_back(vocab.id(a.front()));
    return gather_rows(embed, std::move(ids));
  }
  if (cfg.feature_mode == FeatureMode::mean) {
    std::vector<std::size_t> ids;
    RowGroups groups(v_count);
    for (NodeId v = 0; v < v_count; ++v) {
      for (const auto& t : g.attr(v)) {
        groups[v].push_back(ids.size());
        ids.push_back(vocab.id(t));
      }
    }
    return segment_mean(gather_rows(embed, std::move(ids)), groups);
  }
  Var w = tape.param(params.get("enc.attr_lstm.W"));
  Var b = tape.param(params.get("enc.attr_lstm.b"));
  std::vector<Var> rows;
  rows.reserve(v_count);
  for (NodeId v = 0; v < v_count; ++v) {
    const Attr& a = g.attr(v);
    if (a.size() == 1) {
      rows.push_back(gather_rows(embed, {vocab.id(a[0])}));
      continue;
    }
    LstmState st{tape.constant(Tensor(Shape{1, cfg.feat_dim})), tape.constant(Tensor(Shape{1, cfg.feat_dim}))};
    for (const auto& t : a) st = lstm_step(gather_rows(embed, {vocab.id(t)}), st, w, b);
    rows.push_back(st.h);
  }
  return concat_rows(rows);
}

namespace detail {

// Final hidden state of an LSTM run over `seq` rows in order.
inline Var lstm_over(Tape& tape, std::span<const Var> seq, const Var& w, const Var& b, std::size_t hidden) {
  LstmState st{tape.constant(Tensor(Shape{1, hidden})), tape.constant(Tensor(Shape{1, hidden}))};
  for (const Var& x : seq) st = lstm_step(x, st, w, b);
  return st.h;
}

}  // namespace detail

/// Combines neighbor representations (each a [1, d] row) into one [1, d] row.
///
/// mean: elementwise mean. pooling: elementwise max of relu(h W_pool + b).
/// lstm: final hidden state over one random permutation drawn from `rng`;
/// the list is put in a canonical order first, so the draw alone decides
/// the processing order. Mean and pooling are bit-identical under any
/// permutation of `reps`.
inline Var aggregate(std::span<const Var> reps, AggregatorKind kind, std::size_t hop, Direction dir,
                     ParamSet& params, const EncoderConfig& cfg, Rng& rng) {
  if (reps.empty()) throw ArgumentError("aggregate needs at least one neighbor");
  Tape& tape = reps[0].tape();
  const std::string prefix = cfg.hop_prefix(hop, dir);
  switch (kind) {
    case AggregatorKind::mean: return rows_mean(concat_rows(reps));
    case AggregatorKind::pooling: {
      Var h = concat_rows(reps);
      return rows_max(dense_layer(h, tape.param(params.get(prefix + ".pool.W")),
                                  tape.param(params.get(prefix + ".pool.b")), Activation::relu));
    }
    case AggregatorKind::lstm: {
      std::vector<Var> order(reps.begin(), reps.end());
      std::stable_sort(order.begin(), order.end(),
                       [](const Var& a, const Var& b) { return a.value().data < b.value().data; });
      rng.shuffle(order);
      return detail::lstm_over(tape, order, tape.param(params.get(prefix + ".lstm.W")),
                               tape.param(params.get(prefix + ".lstm.b")), reps[0].cols());
    }
  }
  throw ArgumentError("unknown aggregator kind");
}

/// Node embeddings z [V, node_dim]: CONCAT of final forward and backward
/// representations (only one half for single-direction modes).
struct NodeEmbeddings {
  Var z;
};

struct GraphEmbedding {
  Var vec;  // [1, node_dim]
  GraphEmbeddingKind method;
};

/// K-hop bi-directional embedding of every node.
///
/// h0 = a_v in each direction. At hop k each node aggregates its neighbors'
/// hop k-1 representations (zero row when it has none), concatenates its own
/// hop k-1 representation and applies relu(CONCAT(self, agg) W^k).
inline NodeEmbeddings encode_nodes(Tape& tape, const DirectedGraph& g, const Vocabulary& vocab, ParamSet& params,
                                   const EncoderConfig& cfg, Rng& rng) {
  if (cfg.hops < 1) throw ArgumentError("hop count must be at least 1");
  const std::size_t n = g.num_nodes();
  Var features = init_node_features(tape, g, vocab, params, cfg);
  std::vector<Var> halves;
  for (Direction dir : cfg.directions()) {
    Var h = features;
    for (std::size_t k = 1; k <= cfg.hops; ++k) {
      const std::string prefix = cfg.hop_prefix(k, dir);
      RowGroups groups(n);
      for (NodeId v = 0; v < n; ++v) {
        const auto& nb = dir == Direction::fwd ? g.forward(v) : g.backward(v);
        groups[v] = cfg.neighbor_cap ? sample_neighbors(nb, cfg.neighbor_cap, rng) : nb;
      }
      Var agg;
      switch (cfg.aggregator) {
        case AggregatorKind::mean: agg = segment_mean(h, groups); break;
        case AggregatorKind::pooling:
          agg = segment_max(dense_layer(h, tape.param(params.get(prefix + ".pool.W")),
                                        tape.param(params.get(prefix + ".pool.b")), Activation::relu),
                            groups);
          break;
        case AggregatorKind::lstm: {
          Var w = tape.param(params.get(prefix + ".lstm.W"));
          Var b = tape.param(params.get(prefix + ".lstm.b"));
          const std::size_t width = h.cols();
          std::vector<Var> rows;
          rows.reserve(n);
          for (NodeId v = 0; v < n; ++v) {
            if (groups[v].empty()) {
              rows.push_back(tape.constant(Tensor(Shape{1, width})));
              continue;
            }
            std::vector<NodeId> order = groups[v];
            std::sort(order.begin(), order.end());
            rng.shuffle(order);
            std::vector<Var> seq;
            seq.reserve(order.size());
            for (NodeId u : order) seq.push_back(gather_rows(h, {u}));
            rows.push_back(detail::lstm_over(tape, seq, w, b, width));
          }
          agg = concat_rows(rows);
          break;
        }
      }
      Var pre = matmul(concat_cols({h, agg}), tape.param(params.get(prefix + ".W")));
      h = relu(pre);
    }
    halves.push_back(h);
  }
  return {halves.size() == 1 ? halves[0] : concat_cols(halves)};
}

/// Graph embedding by pooling relu(z W + b) over nodes (max by default).
inline GraphEmbedding graph_embedding_pooling(const NodeEmbeddings& z, ParamSet& params, const EncoderConfig& cfg) {
  Tape& tape = z.z.tape();
  Var dense = dense_layer(z.z, tape.param(params.get("enc.graph.W")), tape.param(params.get("enc.graph.b")),
                          Activation::relu);
  Var pooled;
  switch (cfg.pool) {
    case PoolKind::max: pooled = rows_max(dense); break;
    case PoolKind::min: pooled = rows_min(dense); break;
    case PoolKind::avg: pooled = rows_mean(dense); break;
  }
  return {pooled, GraphEmbeddingKind::pooling};
}

/// Node embeddings plus a graph embedding, per the configured method.
///
/// For the supernode method the graph is augmented with the supernode, its
/// embedding row becomes the graph embedding, and the remaining rows (the
/// original nodes, in order) are returned as node embeddings.
struct EncodedGraph {
  NodeEmbeddings nodes;
  GraphEmbedding graph;
};

inline GraphEmbedding graph_embedding_supernode(Tape& tape, const DirectedGraph& g, const Vocabulary& vocab,
                                                ParamSet& params, const EncoderConfig& cfg, Rng& rng,
                                                NodeEmbeddings* original_nodes = nullptr) {
  auto [augmented, super] = add_supernode(g);
  NodeEmbeddings z = encode_nodes(tape, augmented, vocab, params, cfg, rng);
  if (original_nodes) {
    std::vector<std::size_t> keep(g.num_nodes());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    original_nodes->z = gather_rows(z.z, std::move(keep));
  }
  return {gather_rows(z.z, {super}), GraphEmbeddingKind::supernode};
}

inline EncodedGraph encode_graph(Tape& tape, const DirectedGraph& g, const Vocabulary& vocab, ParamSet& params,
                                 const EncoderConfig& cfg, Rng& rng) {
  if (g.num_nodes() == 0) throw ArgumentError("cannot encode an empty graph");
  if (cfg.graph_embedding == GraphEmbeddingKind::supernode) {
    NodeEmbeddings nodes;
    GraphEmbedding ge = graph_embedding_supernode(tape, g, vocab, params, cfg, rng, &nodes);
    return {nodes, ge};
  }
  NodeEmbeddings nodes = encode_nodes(tape, g, vocab, params, cfg, rng);
  return {nodes, graph_embedding_pooling(nodes, params, cfg)};
}

}  // namespace g2s
