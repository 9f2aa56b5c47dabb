#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "logsd/embedder.hpp"
#include "logsd/masking.hpp"
#include "logsd/model.hpp"
#include "logsd/sequencer.hpp"
#include "logsd/tensor_nn.hpp"

namespace logsd::trainer {

struct TrainConfig {
  double lr_start = 1e-2;
  double lr_end = 1e-4;
  double decay_power = 1.0;
  double weight_decay = 1e-4;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 20;
  double min_rel_improvement = 1e-4;
  std::size_t max_seq_len = 256;
  std::uint64_t seed = 42;

  void validate() const;
};

/// Polynomial decay from lr_start at epoch 0 to lr_end at the last epoch.
double lr_at(std::size_t epoch, const TrainConfig& config);

/// Adaptive moment estimation with decoupled weight decay:
///   p <- p * (1 - lr * wd) - lr * m_hat / (sqrt(v_hat) + eps)
class AdamW {
 public:
  AdamW(const nn::ParamSet& like, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8);

  void step(nn::ParamSet& params, const nn::ParamSet& grads, double lr);
  std::size_t steps() const { return t_; }

 private:
  nn::ParamSet m_;
  nn::ParamSet v_;
  double weight_decay_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

/// Running mean of representation rows.
class CenterAccumulator {
 public:
  explicit CenterAccumulator(std::size_t dim) : sum_(dim, 0.0) {}
  void add(const nn::Tensor& z);
  std::size_t count() const { return count_; }
  std::vector<double> mean() const;

 private:
  std::vector<double> sum_;
  std::size_t count_ = 0;
};

/// Mean of the given representation rows.
std::vector<double> update_center(std::span<const nn::Tensor> representations);

/// Stops after `patience` consecutive epochs without a relative improvement
/// larger than min_rel_improvement over the best monitor value so far.
class EarlyStopper {
 public:
  EarlyStopper(std::size_t patience, double min_rel_improvement)
      : patience_(patience), min_rel_(min_rel_improvement) {}
  /// Returns true when training should stop.
  bool update(double monitor);
  std::size_t stale_epochs() const { return stale_; }

 private:
  std::size_t patience_;
  double min_rel_;
  double best_ = 0.0;
  bool has_best_ = false;
  std::size_t stale_ = 0;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double reconstruction = 0.0;
  double oneclass = 0.0;
  double prediction = 0.0;
  double total = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  model::Model model;
  std::vector<double> center;
  masking::FrequencyTable frequencies;
  std::vector<EpochLog> log;
  bool early_stopped = false;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Trains on normal-only sequences (anomalous labels are a DataError).
TrainResult train(std::span<const sequencer::EventSequence> train_normals,
                  const embedder::EmbeddingTable& table, const model::ModelConfig& model_config,
                  const masking::MaskConfig& mask_config, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// CSV: epoch,L_r,L_o,L_p,L,lr
void write_loss_log(const std::filesystem::path& path, std::span<const EpochLog> log,
                    const std::string& config_hash);

}  // namespace logsd::trainer
