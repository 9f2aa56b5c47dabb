#pragma once

// Dual network: an auto-encoder (AE, teacher) and an encoder-only subnet (EO,
// student) sharing one encoder architecture: parallel time convolutions with
// ReLU, channel concatenation, masked mean pooling to a representation z. The
// AE decoder is a single width-expanding transposed convolution.
//
// Losses
//   L_r  masked MSE between X and X_hat over the reconstruction mask
//   L_o  (1/N) sum_i |z_i - c|^2, c held constant
//   L_p  (1/(N l)) sum_i |z_i - z'_i|^2, z_i treated as a fixed target
//   L    alpha L_r + L_p + L_o (single-network variants drop L_p)

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "logsd/embedder.hpp"
#include "logsd/masking.hpp"
#include "logsd/tensor_nn.hpp"

namespace logsd::model {

enum class Network { kSingle, kDual };
enum class Reconstruction { kGlobal, kLocal, kG2L };

/// Three-letter variant code: network (s|d), masking (n|r|f), reconstruction
/// (g = global, l = local, f = global-to-local). "dff" is the full model.
struct Variant {
  Network network = Network::kDual;
  masking::Scheme masking = masking::Scheme::kFrequency;
  Reconstruction reconstruction = Reconstruction::kG2L;

  static Variant parse(std::string_view code);
  std::string code() const;
  bool dual() const { return network == Network::kDual; }
};

inline const std::vector<std::string> kAblationCodes = {"sng", "srl", "sfl", "srf", "sff",
                                                       "dng", "drl", "dfl", "drf", "dff"};

struct ModelConfig {
  std::size_t dim = 32;
  std::size_t hidden = 128;  // channels per kernel size
  std::vector<int> kernels = {3, 4, 5};
  double alpha = 50.0;
  Variant variant;

  std::size_t rep_dim() const { return hidden * kernels.size(); }
  void validate() const;
};

struct EncoderOutput {
  std::vector<nn::Tensor> pre;  // per kernel, N x C x L before ReLU
  nn::Tensor features;          // N x (K*C) x L after ReLU
  nn::Tensor z;                 // N x (K*C)
};

struct AeOutput {
  EncoderOutput encoder;
  nn::Tensor x_hat;  // N x L x d
};

class Model {
 public:
  Model(ModelConfig config, std::uint64_t init_seed);
  /// Wraps existing parameters (checkpoint load). Names and shapes are checked.
  Model(ModelConfig config, nn::ParamSet params);

  const ModelConfig& config() const { return config_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }

  /// prefix is "ae" or "eo".
  EncoderOutput encode(const nn::Tensor& x, const nn::Mask& pad_mask,
                       std::string_view prefix) const;
  AeOutput ae_forward(const nn::Tensor& x, const nn::Mask& pad_mask) const;
  nn::Tensor eo_forward(const nn::Tensor& x_c, const nn::Mask& pad_mask) const;

  /// Overwrites EO encoder weights with the AE encoder's.
  void copy_ae_encoder_to_eo();

  static std::string conv_weight(std::string_view prefix, int k);
  static std::string conv_bias(std::string_view prefix, int k);

 private:
  void check_params() const;

  ModelConfig config_;
  nn::ParamSet params_;
};

double loss_reconstruction(const nn::Tensor& x, const nn::Tensor& x_hat,
                           const masking::MaskPlan& plan, const nn::Mask& pad_mask,
                           Reconstruction paradigm);
double loss_oneclass(const nn::Tensor& z, std::span<const double> center);
double loss_prediction(const nn::Tensor& z_a, const nn::Tensor& z_e);
double total_loss(double l_r, double l_p, double l_o, double alpha);

struct LossParts {
  double reconstruction = 0.0;
  double oneclass = 0.0;
  double prediction = 0.0;
  double total = 0.0;
};

/// Reconstruction mask for a paradigm: all real positions (global) or the
/// focus positions (local, global-to-local).
const nn::Mask& reconstruction_mask(const masking::MaskPlan& plan, const nn::Mask& pad_mask,
                                    Reconstruction paradigm);

/// Inputs the two subnets see under a variant.
struct SubnetInputs {
  nn::Tensor ae_input;
  nn::Tensor eo_input;  // empty for single-network variants
};
SubnetInputs subnet_inputs(const Variant& variant, const nn::Tensor& x,
                           const masking::MaskPlan& plan);

struct StepResult {
  LossParts loss;
  nn::Tensor z_a;
  nn::Tensor x_hat;
  nn::Tensor grad_x_hat;  // dL/dX_hat, filled when gradients are requested
};

/// Forward pass and, when `grads` is non-null, backward pass for one batch.
/// `grads` must come from params().zeros_like(); gradients are accumulated.
/// When `teacher` is given, L_p uses it instead of this pass's Z_a.
StepResult loss_and_gradients(const Model& model, const embedder::SequenceBatch& batch,
                              const masking::MaskPlan& plan, std::span<const double> center,
                              nn::ParamSet* grads, const nn::Tensor* teacher = nullptr);

/// Per-sequence anomaly scores for one plan: (1/l)|z_i - z'_i|^2 for dual
/// variants, per-sequence reconstruction error for single ones.
std::vector<double> batch_scores(const Model& model, const embedder::SequenceBatch& batch,
                                 const masking::MaskPlan& plan);

/// Scores averaged over the inference kappa ensemble with per-sequence plans
/// from the frozen training frequencies.
std::vector<double> sequence_scores(const Model& model, const masking::FrequencyTable& freq,
                                    const masking::MaskConfig& mask_config,
                                    std::span<const sequencer::EventSequence> sequences,
                                    const embedder::EmbeddingTable& table, std::size_t l_max,
                                    std::size_t batch_size = 64);

}  // namespace logsd::model
