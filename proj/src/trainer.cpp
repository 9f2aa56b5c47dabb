#include "logsd/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

namespace logsd::trainer {

void TrainConfig::validate() const {
  if (!(lr_start > 0.0) || !(lr_end > 0.0)) throw ConfigError("learning rates must be positive");
  if (lr_end > lr_start) throw ConfigError("lr_end must not exceed lr_start");
  if (!(decay_power > 0.0)) throw ConfigError("decay_power must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (patience == 0) throw ConfigError("patience must be positive");
  if (max_seq_len == 0) throw ConfigError("max_seq_len must be positive");
}

double lr_at(std::size_t epoch, const TrainConfig& config) {
  if (config.max_epochs <= 1) return config.lr_start;
  const double progress =
      std::min(1.0, static_cast<double>(epoch) / static_cast<double>(config.max_epochs - 1));
  return config.lr_end +
         (config.lr_start - config.lr_end) * std::pow(1.0 - progress, config.decay_power);
}

AdamW::AdamW(const nn::ParamSet& like, double weight_decay, double beta1, double beta2,
             double eps)
    : m_(like.zeros_like()),
      v_(like.zeros_like()),
      weight_decay_(weight_decay),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

void AdamW::step(nn::ParamSet& params, const nn::ParamSet& grads, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double decay = 1.0 - lr * weight_decay_;
  auto m_it = m_.begin();
  auto v_it = v_.begin();
  auto g_it = grads.begin();
  for (auto& [name, p] : params) {
    auto& m = m_it->second;
    auto& v = v_it->second;
    const auto& g = g_it->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] = p[i] * decay - lr * m_hat / (std::sqrt(v_hat) + eps_);
    }
    ++m_it;
    ++v_it;
    ++g_it;
  }
}

void CenterAccumulator::add(const nn::Tensor& z) {
  const std::size_t l = sum_.size();
  if (z.rank() != 2 || z.dim(1) != l) throw std::invalid_argument("center: dimension mismatch");
  for (std::size_t i = 0; i < z.dim(0); ++i) {
    for (std::size_t j = 0; j < l; ++j) sum_[j] += z[i * l + j];
  }
  count_ += z.dim(0);
}

std::vector<double> CenterAccumulator::mean() const {
  if (count_ == 0) throw std::logic_error("center: no representations accumulated");
  std::vector<double> c = sum_;
  for (auto& v : c) v /= static_cast<double>(count_);
  return c;
}

std::vector<double> update_center(std::span<const nn::Tensor> representations) {
  if (representations.empty()) throw std::invalid_argument("update_center: nothing to average");
  CenterAccumulator acc(representations.front().dim(1));
  for (const auto& z : representations) acc.add(z);
  return acc.mean();
}

bool EarlyStopper::update(double monitor) {
  if (!has_best_ || monitor < best_ * (1.0 - min_rel_)) {
    best_ = monitor;
    has_best_ = true;
    stale_ = 0;
    return false;
  }
  ++stale_;
  return stale_ >= patience_;
}

TrainResult train(std::span<const sequencer::EventSequence> train_normals,
                  const embedder::EmbeddingTable& table, const model::ModelConfig& model_config,
                  const masking::MaskConfig& mask_config, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  mask_config.validate();
  if (train_normals.empty()) throw DataError("training set is empty");
  for (const auto& s : train_normals) {
    if (s.label != Label::kNormal) {
      throw DataError("training set contains anomalous sequence '" + s.seq_id + "'");
    }
  }
  if (table.dim() != model_config.dim) {
    throw ConfigError("embedding dimension " + std::to_string(table.dim()) +
                      " does not match model dimension " + std::to_string(model_config.dim));
  }

  TrainResult result{model::Model(model_config, derive_seed(config.seed, "init")),
                     {},
                     masking::FrequencyTable::from_sequences(train_normals),
                     {},
                     false};
  auto& model = result.model;
  const auto scheme = model_config.variant.masking;
  const std::size_t l = model_config.rep_dim();

  AdamW opt(model.params(), config.weight_decay);
  EarlyStopper stopper(config.patience, config.min_rel_improvement);
  std::vector<std::size_t> order(train_normals.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> center;
  std::uint64_t batch_index = 0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, "epoch" + std::to_string(epoch)));
    shuffle_rng.shuffle(order.begin(), order.end());
    const double lr = lr_at(epoch, config);

    CenterAccumulator epoch_center(l);
    EpochLog entry;
    entry.epoch = epoch + 1;
    entry.lr = lr;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<const sequencer::EventSequence*> members;
      for (std::size_t i = start; i < end; ++i) members.push_back(&train_normals[order[i]]);
      const auto batch = embedder::build_batch(
          std::span<const sequencer::EventSequence* const>(members), table, config.max_seq_len);

      const double kappa =
          scheme == masking::Scheme::kNone ? 1.0 : masking::sample_kappa(mask_config, batch_index);
      const auto plan = masking::plan_batch(
          batch, scheme, kappa, derive_seed(mask_config.seed, "plan") ^ batch_index);

      if (center.empty()) {
        // First batch of the first epoch seeds the center before L_o is used.
        const auto inputs = model::subnet_inputs(model_config.variant, batch.x, plan);
        const auto first = model.encode(inputs.ae_input, batch.pad_mask, "ae");
        center = update_center(std::span<const nn::Tensor>(&first.z, 1));
      }

      auto grads = model.params().zeros_like();
      model::StepResult step;
      try {
        step = model::loss_and_gradients(model, batch, plan, center, &grads);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch + 1) + " batch " +
                           std::to_string(start / config.batch_size) + ": " + e.what());
      }
      if (!std::isfinite(step.loss.total)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) + " batch " +
                           std::to_string(start / config.batch_size));
      }
      opt.step(model.params(), grads, lr);
      epoch_center.add(step.z_a);

      const double w = static_cast<double>(batch.size());
      entry.reconstruction += w * step.loss.reconstruction;
      entry.oneclass += w * step.loss.oneclass;
      entry.prediction += w * step.loss.prediction;
      entry.total += w * step.loss.total;
      ++batch_index;
    }
    const double n = static_cast<double>(order.size());
    entry.reconstruction /= n;
    entry.oneclass /= n;
    entry.prediction /= n;
    entry.total /= n;
    center = epoch_center.mean();
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
    if (stopper.update(entry.total)) {
      result.early_stopped = epoch + 1 < config.max_epochs;
      break;
    }
  }
  model.params().check_finite("trained parameters");
  result.center = std::move(center);
  return result;
}

void write_loss_log(const std::filesystem::path& path, std::span<const EpochLog> log,
                    const std::string& config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write loss log " + path.string());
  out << "# config_hash=" << config_hash << "\n";
  out << "epoch,L_r,L_o,L_p,L,lr\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << format_double(e.reconstruction) << ',' << format_double(e.oneclass)
        << ',' << format_double(e.prediction) << ',' << format_double(e.total) << ','
        << format_double(e.lr) << '\n';
  }
  if (!out) throw DataError("write failed for loss log " + path.string());
}

}  // namespace logsd::trainer
