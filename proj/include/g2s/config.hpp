#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "g2s/errors.hpp"
#include "g2s/model.hpp"

namespace g2s {

enum class Task { path, bleu };

inline Task parse_task(const std::string& s) {
  if (s == "path") return Task::path;
  if (s == "bleu") return Task::bleu;
  throw ArgumentError("unknown task: " + s + " (expected path or bleu)");
}

inline std::string to_string(Task t) { return t == Task::path ? "path" : "bleu"; }

/// Everything that determines a training run besides the data.
struct TrainConfig {
  double lr = 0.001;
  std::size_t batch_size = 30;
  double dropout = 0.5;
  double clip_norm = 20.0;
  std::size_t hop_K = 6;
  std::size_t feat_dim = 40;
  // Decoder state size; node embeddings are enc_hidden per direction.
  std::size_t hidden = 80;
  std::size_t enc_hidden = 40;
  std::size_t attn_dim = 80;
  std::size_t beam = 5;
  // Beam used for the per-epoch dev metric.
  std::size_t dev_beam = 1;
  AggregatorKind aggregator = AggregatorKind::mean;
  GraphEmbeddingKind graph_embedding = GraphEmbeddingKind::pooling;
  PoolKind pool = PoolKind::max;
  FeatureMode feature_mode = FeatureMode::mean;
  DirectionMode direction = DirectionMode::bi;
  bool attention = true;
  bool share_direction_weights = false;
  double embed_init = 0.1;
  std::size_t max_distinct_hops = 10;
  std::size_t neighbor_cap = 0;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  // Stop as soon as the dev metric reaches this value (0 disables).
  double target_dev_metric = 0.0;
  Task task = Task::path;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(lr >= 0.0)) throw ArgumentError("lr must be non-negative");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ArgumentError("dropout must lie in [0, 1)");
    if (!(clip_norm > 0.0)) throw ArgumentError("clip_norm must be positive");
    for (auto [name, v] : {std::pair{"batch_size", batch_size}, {"hop_K", hop_K}, {"feat_dim", feat_dim},
                           {"hidden", hidden}, {"enc_hidden", enc_hidden}, {"attn_dim", attn_dim},
                           {"beam", beam}, {"dev_beam", dev_beam}, {"max_distinct_hops", max_distinct_hops},
                           {"max_epochs", max_epochs}, {"patience", patience}}) {
      if (v == 0) throw ArgumentError(std::string(name) + " must be positive");
    }
  }

  ModelConfig model_config() const {
    ModelConfig m;
    m.encoder.feat_dim = feat_dim;
    m.encoder.hidden_dim = enc_hidden;
    m.encoder.hops = hop_K;
    m.encoder.max_distinct_hops = max_distinct_hops;
    m.encoder.aggregator = aggregator;
    m.encoder.direction = direction;
    m.encoder.graph_embedding = graph_embedding;
    m.encoder.pool = pool;
    m.encoder.feature_mode = feature_mode;
    m.encoder.share_direction_weights = share_direction_weights;
    m.encoder.embed_init = embed_init;
    m.encoder.neighbor_cap = neighbor_cap;
    m.decoder.hidden_dim = hidden;
    m.decoder.attn_dim = attn_dim;
    m.decoder.dropout = dropout;
    m.decoder.attention = attention;
    return m;
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"lr", c.lr},
                     {"batch_size", c.batch_size},
                     {"dropout", c.dropout},
                     {"clip_norm", c.clip_norm},
                     {"hop_K", c.hop_K},
                     {"feat_dim", c.feat_dim},
                     {"hidden", c.hidden},
                     {"enc_hidden", c.enc_hidden},
                     {"attn_dim", c.attn_dim},
                     {"beam", c.beam},
                     {"dev_beam", c.dev_beam},
                     {"aggregator", to_string(c.aggregator)},
                     {"graph_embedding", to_string(c.graph_embedding)},
                     {"pool", to_string(c.pool)},
                     {"feature_mode", to_string(c.feature_mode)},
                     {"direction", to_string(c.direction)},
                     {"attention", c.attention},
                     {"share_direction_weights", c.share_direction_weights},
                     {"embed_init", c.embed_init},
                     {"max_distinct_hops", c.max_distinct_hops},
                     {"neighbor_cap", c.neighbor_cap},
                     {"max_epochs", c.max_epochs},
                     {"patience", c.patience},
                     {"target_dev_metric", c.target_dev_metric},
                     {"task", to_string(c.task)},
                     {"seed", c.seed}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (!j.is_object()) throw ArgumentError("config must be a JSON object");
  const nlohmann::json known = TrainConfig{};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ArgumentError("unknown config field: " + key);
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("lr", c.lr);
    get("batch_size", c.batch_size);
    get("dropout", c.dropout);
    get("clip_norm", c.clip_norm);
    get("hop_K", c.hop_K);
    get("feat_dim", c.feat_dim);
    get("hidden", c.hidden);
    get("enc_hidden", c.enc_hidden);
    get("attn_dim", c.attn_dim);
    get("beam", c.beam);
    get("dev_beam", c.dev_beam);
    if (j.contains("aggregator")) c.aggregator = parse_aggregator(j.at("aggregator").get<std::string>());
    if (j.contains("graph_embedding"))
      c.graph_embedding = parse_graph_embedding(j.at("graph_embedding").get<std::string>());
    if (j.contains("pool")) c.pool = parse_pool(j.at("pool").get<std::string>());
    if (j.contains("feature_mode")) c.feature_mode = parse_feature_mode(j.at("feature_mode").get<std::string>());
    if (j.contains("direction")) c.direction = parse_direction(j.at("direction").get<std::string>());
    get("attention", c.attention);
    get("share_direction_weights", c.share_direction_weights);
    get("embed_init", c.embed_init);
    get("max_distinct_hops", c.max_distinct_hops);
    get("neighbor_cap", c.neighbor_cap);
    get("max_epochs", c.max_epochs);
    get("patience", c.patience);
    get("target_dev_metric", c.target_dev_metric);
    if (j.contains("task")) c.task = parse_task(j.at("task").get<std::string>());
    get("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("bad config value: ") + e.what());
  }
  c.validate();
}

}  // namespace g2s
