#include "logsd/model.hpp"

#include <algorithm>
#include <stdexcept>

#include "logsd/kernels.hpp"

namespace logsd::model {

Variant Variant::parse(std::string_view code) {
  if (code.size() != 3) throw ConfigError("variant code must have 3 letters: '" +
                                          std::string(code) + "'");
  Variant v;
  switch (code[0]) {
    case 's': v.network = Network::kSingle; break;
    case 'd': v.network = Network::kDual; break;
    default: throw ConfigError("unknown network letter in variant '" + std::string(code) + "'");
  }
  try {
    v.masking = masking::parse_scheme(code[1]);
  } catch (const ConfigError&) {
    throw ConfigError("unknown masking letter in variant '" + std::string(code) + "'");
  }
  switch (code[2]) {
    case 'g': v.reconstruction = Reconstruction::kGlobal; break;
    case 'l': v.reconstruction = Reconstruction::kLocal; break;
    case 'f': v.reconstruction = Reconstruction::kG2L; break;
    default:
      throw ConfigError("unknown reconstruction letter in variant '" + std::string(code) + "'");
  }
  if (v.masking == masking::Scheme::kNone && v.reconstruction != Reconstruction::kGlobal) {
    throw ConfigError("variant '" + std::string(code) +
                      "': no masking is only valid with global reconstruction");
  }
  return v;
}

std::string Variant::code() const {
  std::string s;
  s += network == Network::kDual ? 'd' : 's';
  s += masking::scheme_code(masking);
  s += reconstruction == Reconstruction::kGlobal  ? 'g'
       : reconstruction == Reconstruction::kLocal ? 'l'
                                                  : 'f';
  return s;
}

void ModelConfig::validate() const {
  if (dim == 0 || hidden == 0) throw ConfigError("model dimensions must be positive");
  if (kernels.empty()) throw ConfigError("at least one kernel size is required");
  for (int k : kernels) {
    if (k < 1) throw ConfigError("kernel sizes must be positive");
  }
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    for (std::size_t j = i + 1; j < kernels.size(); ++j) {
      if (kernels[i] == kernels[j]) throw ConfigError("kernel sizes must be distinct");
    }
  }
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  Variant::parse(variant.code());
}

std::string Model::conv_weight(std::string_view prefix, int k) {
  return std::string(prefix) + ".conv" + std::to_string(k) + ".weight";
}

std::string Model::conv_bias(std::string_view prefix, int k) {
  return std::string(prefix) + ".conv" + std::to_string(k) + ".bias";
}

Model::Model(ModelConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
  config_.validate();
  const std::size_t d = config_.dim, ch = config_.hidden;
  auto add_encoder = [&](std::string_view prefix) {
    Rng rng(derive_seed(init_seed, std::string(prefix) + ".encoder"));
    for (int k : config_.kernels) {
      const std::size_t fan_in = static_cast<std::size_t>(k) * d;
      nn::init_uniform(params_.add(conv_weight(prefix, k),
                                   nn::Tensor({ch, static_cast<std::size_t>(k), d})),
                       fan_in, rng);
      nn::init_uniform(params_.add(conv_bias(prefix, k), nn::Tensor({ch})), fan_in, rng);
    }
  };
  add_encoder("ae");
  {
    Rng rng(derive_seed(init_seed, "ae.decoder"));
    const std::size_t fan_in = config_.rep_dim();
    nn::init_uniform(params_.add("ae.dec.weight", nn::Tensor({config_.rep_dim(), 1, d})), fan_in,
                     rng);
    nn::init_uniform(params_.add("ae.dec.bias", nn::Tensor({d})), fan_in, rng);
  }
  if (config_.variant.dual()) add_encoder("eo");
}

Model::Model(ModelConfig config, nn::ParamSet params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  check_params();
}

void Model::check_params() const {
  const std::size_t d = config_.dim, ch = config_.hidden;
  auto expect = [&](const std::string& name, std::vector<std::size_t> shape) {
    if (!params_.contains(name)) throw DataError("checkpoint is missing parameter '" + name + "'");
    if (params_.get(name).shape() != shape) {
      throw DataError("parameter '" + name + "' has shape " +
                      params_.get(name).shape_string());
    }
  };
  std::size_t expected = 0;
  auto expect_encoder = [&](std::string_view prefix) {
    for (int k : config_.kernels) {
      expect(conv_weight(prefix, k), {ch, static_cast<std::size_t>(k), d});
      expect(conv_bias(prefix, k), {ch});
      expected += 2;
    }
  };
  expect_encoder("ae");
  expect("ae.dec.weight", {config_.rep_dim(), 1, d});
  expect("ae.dec.bias", {d});
  expected += 2;
  if (config_.variant.dual()) expect_encoder("eo");
  if (params_.count() != expected) throw DataError("checkpoint has unexpected extra parameters");
}

EncoderOutput Model::encode(const nn::Tensor& x, const nn::Mask& pad_mask,
                            std::string_view prefix) const {
  if (x.rank() != 3 || x.dim(2) != config_.dim) {
    throw std::invalid_argument("encoder input " + x.shape_string() + " does not match dim " +
                                std::to_string(config_.dim));
  }
  const std::size_t n_seq = x.dim(0), len = x.dim(1), ch = config_.hidden;
  const std::size_t n_k = config_.kernels.size();
  EncoderOutput out;
  out.features = nn::Tensor({n_seq, n_k * ch, len});
  for (std::size_t ki = 0; ki < n_k; ++ki) {
    const int k = config_.kernels[ki];
    auto pre = nn::conv_time(x, params_.get(conv_weight(prefix, k)),
                             params_.get(conv_bias(prefix, k)));
    for (std::size_t n = 0; n < n_seq; ++n) {
      const double* src = pre.ptr() + n * ch * len;
      double* dst = out.features.ptr() + (n * n_k * ch + ki * ch) * len;
      for (std::size_t i = 0; i < ch * len; ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
    }
    out.pre.push_back(std::move(pre));
  }
  out.z = nn::masked_mean_pool(out.features, pad_mask);
  return out;
}

AeOutput Model::ae_forward(const nn::Tensor& x, const nn::Mask& pad_mask) const {
  AeOutput out;
  out.encoder = encode(x, pad_mask, "ae");
  out.x_hat = nn::tconv_embed(out.encoder.features, params_.get("ae.dec.weight"),
                              params_.get("ae.dec.bias"));
  return out;
}

nn::Tensor Model::eo_forward(const nn::Tensor& x_c, const nn::Mask& pad_mask) const {
  if (!config_.variant.dual()) throw std::logic_error("single-network variant has no EO subnet");
  return encode(x_c, pad_mask, "eo").z;
}

void Model::copy_ae_encoder_to_eo() {
  for (int k : config_.kernels) {
    params_.get(conv_weight("eo", k)) = params_.get(conv_weight("ae", k));
    params_.get(conv_bias("eo", k)) = params_.get(conv_bias("ae", k));
  }
}

const nn::Mask& reconstruction_mask(const masking::MaskPlan& plan, const nn::Mask& pad_mask,
                                    Reconstruction paradigm) {
  return paradigm == Reconstruction::kGlobal ? pad_mask : plan.focus_positions;
}

double loss_reconstruction(const nn::Tensor& x, const nn::Tensor& x_hat,
                           const masking::MaskPlan& plan, const nn::Mask& pad_mask,
                           Reconstruction paradigm) {
  return nn::masked_mse(x, x_hat, reconstruction_mask(plan, pad_mask, paradigm));
}

double loss_oneclass(const nn::Tensor& z, std::span<const double> center) {
  if (z.rank() != 2 || z.dim(1) != center.size()) {
    throw std::invalid_argument("loss_oneclass: center size mismatch");
  }
  const std::size_t n = z.dim(0), l = z.dim(1);
  if (n == 0) return 0.0;
  const auto& kt = kernels::active();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += kt.sq_dist(z.ptr() + i * l, center.data(), l);
  return s / static_cast<double>(n);
}

double loss_prediction(const nn::Tensor& z_a, const nn::Tensor& z_e) {
  if (!z_a.same_shape(z_e) || z_a.rank() != 2) {
    throw std::invalid_argument("loss_prediction: shape mismatch");
  }
  if (z_a.size() == 0) return 0.0;
  const auto& kt = kernels::active();
  return kt.sq_dist(z_a.ptr(), z_e.ptr(), z_a.size()) / static_cast<double>(z_a.size());
}

double total_loss(double l_r, double l_p, double l_o, double alpha) {
  return alpha * l_r + l_p + l_o;
}

SubnetInputs subnet_inputs(const Variant& variant, const nn::Tensor& x,
                           const masking::MaskPlan& plan) {
  SubnetInputs in;
  const bool masked = variant.masking != masking::Scheme::kNone;
  nn::Tensor x_c = masked ? masking::apply_focus_mask(x, plan) : x;
  in.ae_input = variant.reconstruction == Reconstruction::kLocal ? x_c : x;
  if (variant.dual()) in.eo_input = std::move(x_c);
  return in;
}

namespace {

void encoder_backward(const Model& model, std::string_view prefix, const nn::Tensor& input,
                      const EncoderOutput& enc, const nn::Tensor& grad_features,
                      nn::ParamSet& grads) {
  const auto& cfg = model.config();
  const std::size_t n_seq = input.dim(0), len = input.dim(1), ch = cfg.hidden;
  const std::size_t n_k = cfg.kernels.size();
  for (std::size_t ki = 0; ki < n_k; ++ki) {
    const int k = cfg.kernels[ki];
    nn::Tensor grad_pre({n_seq, ch, len});
    for (std::size_t n = 0; n < n_seq; ++n) {
      const double* src = grad_features.ptr() + (n * n_k * ch + ki * ch) * len;
      std::copy(src, src + ch * len, grad_pre.ptr() + n * ch * len);
    }
    nn::relu_backward(enc.pre[ki], grad_pre);
    nn::conv_time_backward(input, model.params().get(Model::conv_weight(prefix, k)), grad_pre,
                           grads.get(Model::conv_weight(prefix, k)),
                           grads.get(Model::conv_bias(prefix, k)));
  }
}

}  // namespace

StepResult loss_and_gradients(const Model& model, const embedder::SequenceBatch& batch,
                              const masking::MaskPlan& plan, std::span<const double> center,
                              nn::ParamSet* grads, const nn::Tensor* teacher) {
  const auto& cfg = model.config();
  const auto& variant = cfg.variant;
  const auto inputs = subnet_inputs(variant, batch.x, plan);
  const auto& rmask = reconstruction_mask(plan, batch.pad_mask, variant.reconstruction);

  StepResult res;
  auto ae = model.ae_forward(inputs.ae_input, batch.pad_mask);
  res.loss.reconstruction = nn::masked_mse(batch.x, ae.x_hat, rmask);
  res.loss.oneclass = loss_oneclass(ae.encoder.z, center);

  EncoderOutput eo;
  const nn::Tensor* target = teacher ? teacher : &ae.encoder.z;
  if (variant.dual()) {
    eo = model.encode(inputs.eo_input, batch.pad_mask, "eo");
    res.loss.prediction = loss_prediction(*target, eo.z);
    res.loss.total = total_loss(res.loss.reconstruction, res.loss.prediction, res.loss.oneclass,
                                cfg.alpha);
  } else {
    res.loss.total = cfg.alpha * res.loss.reconstruction + res.loss.oneclass;
  }

  if (grads != nullptr) {
    const std::size_t n_seq = batch.size();
    const std::size_t l = cfg.rep_dim();

    res.grad_x_hat = nn::Tensor(ae.x_hat.shape());
    nn::masked_mse_backward(ae.x_hat, batch.x, rmask, cfg.alpha, res.grad_x_hat);

    nn::Tensor grad_features(ae.encoder.features.shape());
    nn::tconv_embed_backward(ae.encoder.features, model.params().get("ae.dec.weight"),
                             res.grad_x_hat, grad_features, grads->get("ae.dec.weight"),
                             grads->get("ae.dec.bias"), rmask);

    // One-class term; the center is a constant.
    nn::Tensor grad_z({n_seq, l});
    const double oc = 2.0 / static_cast<double>(n_seq);
    for (std::size_t i = 0; i < n_seq; ++i) {
      for (std::size_t j = 0; j < l; ++j) {
        grad_z[i * l + j] = oc * (ae.encoder.z[i * l + j] - center[j]);
      }
    }
    nn::masked_mean_pool_backward(grad_z, batch.pad_mask, grad_features);
    encoder_backward(model, "ae", inputs.ae_input, ae.encoder, grad_features, *grads);

    if (variant.dual()) {
      // Prediction term reaches the student only.
      nn::Tensor grad_ze({n_seq, l});
      const double pc = 2.0 / static_cast<double>(n_seq * l);
      for (std::size_t i = 0; i < n_seq * l; ++i) grad_ze[i] = pc * (eo.z[i] - (*target)[i]);
      nn::Tensor grad_eo_features(eo.features.shape());
      nn::masked_mean_pool_backward(grad_ze, batch.pad_mask, grad_eo_features);
      encoder_backward(model, "eo", inputs.eo_input, eo, grad_eo_features, *grads);
    }
    grads->check_finite("gradient");
  }

  res.z_a = std::move(ae.encoder.z);
  res.x_hat = std::move(ae.x_hat);
  return res;
}

std::vector<double> batch_scores(const Model& model, const embedder::SequenceBatch& batch,
                                 const masking::MaskPlan& plan) {
  const auto& cfg = model.config();
  const auto inputs = subnet_inputs(cfg.variant, batch.x, plan);
  const std::size_t n_seq = batch.size();
  const auto& kt = kernels::active();
  std::vector<double> scores(n_seq, 0.0);

  if (cfg.variant.dual()) {
    const auto z_a = model.encode(inputs.ae_input, batch.pad_mask, "ae").z;
    const auto z_e = model.encode(inputs.eo_input, batch.pad_mask, "eo").z;
    const std::size_t l = cfg.rep_dim();
    for (std::size_t i = 0; i < n_seq; ++i) {
      scores[i] = kt.sq_dist(z_a.ptr() + i * l, z_e.ptr() + i * l, l) / static_cast<double>(l);
    }
    return scores;
  }

  const auto ae = model.ae_forward(inputs.ae_input, batch.pad_mask);
  const auto& rmask = reconstruction_mask(plan, batch.pad_mask, cfg.variant.reconstruction);
  const std::size_t len = batch.length(), d = batch.dim();
  for (std::size_t i = 0; i < n_seq; ++i) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t r = i * len + t;
      if (!rmask[r]) continue;
      total += kt.sq_dist(batch.x.ptr() + r * d, ae.x_hat.ptr() + r * d, d);
      ++count;
    }
    scores[i] = count ? total / static_cast<double>(count * d) : 0.0;
  }
  return scores;
}

std::vector<double> sequence_scores(const Model& model, const masking::FrequencyTable& freq,
                                    const masking::MaskConfig& mask_config,
                                    std::span<const sequencer::EventSequence> sequences,
                                    const embedder::EmbeddingTable& table, std::size_t l_max,
                                    std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  const auto scheme = model.config().variant.masking;
  masking::MaskConfig mc = mask_config;
  mc.scheme = scheme;
  const auto kappas = mc.inference_kappas();

  std::vector<double> out(sequences.size(), 0.0);
  for (std::size_t start = 0; start < sequences.size(); start += batch_size) {
    const std::size_t end = std::min(sequences.size(), start + batch_size);
    const auto batch = embedder::build_batch(sequences.subspan(start, end - start), table, l_max);
    for (double kappa : kappas) {
      const auto plan = masking::plan_per_sequence(batch, freq, scheme, kappa, mc.seed);
      const auto s = batch_scores(model, batch, plan);
      for (std::size_t i = 0; i < s.size(); ++i) out[start + i] += s[i];
    }
  }
  for (auto& v : out) v /= static_cast<double>(kappas.size());
  return out;
}

}  // namespace logsd::model
