#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "g2s/checkpoint.hpp"
#include "g2s/config.hpp"
#include "g2s/errors.hpp"
#include "g2s/metrics.hpp"
#include "g2s/model.hpp"
#include "g2s/vocab.hpp"

namespace g2s {

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_metric = 0.0;
  double wall_time = 0.0;  // seconds since training started
};

inline void to_json(nlohmann::json& j, const EpochLog& e) {
  j = nlohmann::json{
      {"epoch", e.epoch}, {"train_loss", e.train_loss}, {"dev_metric", e.dev_metric}, {"wall_time", e.wall_time}};
}

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> history;
  std::string stop_reason;
};

inline double dev_metric(const Model& model, const TrainConfig& cfg, std::span<const Sample> dev,
                         std::size_t max_len = 0) {
  return cfg.task == Task::path ? evaluate_path_accuracy(model, dev, cfg.dev_beam, max_len)
                                : evaluate_bleu(model, dev, cfg.dev_beam, max_len);
}

/// Mini-batch training: per-sample gradients accumulated over each batch,
/// averaged, clipped to `clip_norm`, then one Adam step. The dev metric is
/// computed after every epoch and the best epoch's parameters are kept.
inline TrainResult train(const TrainConfig& cfg, std::span<const Sample> train_set, std::span<const Sample> dev_set,
                         const std::function<void(const EpochLog&)>& on_epoch = {},
                         std::optional<Vocabulary> vocab = std::nullopt) {
  cfg.validate();
  if (train_set.empty()) throw ArgumentError("training set is empty");
  if (dev_set.empty()) throw ArgumentError("dev set is empty");
  if (!vocab) vocab = build_vocabulary(train_set);

  Model model(cfg.model_config(), *vocab, cfg.seed);
  ParamSet& params = model.params();
  const Rng master(cfg.seed);
  Rng shuffle_rng = master.derive(1);
  Rng noise_rng = master.derive(2);

  const std::size_t max_len = default_max_len(train_set);
  TrainResult result{Checkpoint{cfg, *vocab, params, 0, -1.0, max_len}, {}, "max_epochs"};
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t since_best = 0;
  const auto t0 = std::chrono::steady_clock::now();

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        try {
          Tape tape;
          Var loss = model.loss(tape, train_set[idx], noise_rng, true);
          loss_sum += loss.value().item();
          backward(loss, params);
        } catch (const NumericError& e) {
          throw NumericError("non-finite value while training on sample " + std::to_string(idx) + " (epoch " +
                             std::to_string(epoch) + "): " + e.what());
        }
      }
      params.scale_grad(1.0 / static_cast<double>(end - start));
      params.clip_global_norm(cfg.clip_norm);
      params.adam_step(cfg.lr);
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(order.size());
    log.dev_metric = dev_metric(model, cfg, dev_set, max_len);
    log.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(log);
    if (on_epoch) on_epoch(log);

    if (log.dev_metric > result.best.best_dev_metric) {
      result.best.params = params;
      result.best.epoch = epoch;
      result.best.best_dev_metric = log.dev_metric;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      result.stop_reason = "patience";
      break;
    }
    if (cfg.target_dev_metric > 0.0 && log.dev_metric >= cfg.target_dev_metric) {
      result.stop_reason = "target_dev_metric";
      break;
    }
  }
  return result;
}

}  // namespace g2s
