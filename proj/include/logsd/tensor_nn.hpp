#pragma once

// Dense float64 tensors and the handful of differentiable layers the model is
// built from. Every forward op has a hand-written backward; there is no tape.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "logsd/common.hpp"

namespace logsd::nn {

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::initializer_list<std::size_t> shape, double fill = 0.0)
      : Tensor(std::vector<std::size_t>(shape), fill) {}

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double* ptr() { return data_.data(); }
  const double* ptr() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Rank-2 and rank-3 row-major accessors.
  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  void fill(double v);
  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Row-major N x L selector; nonzero = selected.
using Mask = std::vector<std::uint8_t>;

/// Same-length convolution over the time axis.
/// x: N x L x d, w: C x k x d, b: C  ->  N x C x L
/// out[n,c,t] = b[c] + sum_{i,j} x[n, t+i-k/2, j] * w[c,i,j], zeros outside [0, L).
Tensor conv_time(const Tensor& x, const Tensor& w, const Tensor& b);
/// Accumulates into grad_w / grad_b (and grad_x when non-null).
void conv_time_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, Tensor& grad_w,
                        Tensor& grad_b, Tensor* grad_x = nullptr);

/// Width-expanding transposed convolution, kernel height 1.
/// f: N x C x L, w: C x 1 x d, b: d  ->  N x L x d
Tensor tconv_embed(const Tensor& f, const Tensor& w, const Tensor& b);
/// `rows`, when non-empty, lists the (n, t) rows whose output gradient may be
/// nonzero; other rows are skipped.
void tconv_embed_backward(const Tensor& f, const Tensor& w, const Tensor& grad_out,
                          Tensor& grad_f, Tensor& grad_w, Tensor& grad_b,
                          std::span<const std::uint8_t> rows = {});

/// f: N x C x L -> N x C, mean over selected time steps. Throws DataError on a
/// row with no selected position.
Tensor masked_mean_pool(const Tensor& f, std::span<const std::uint8_t> mask);
void masked_mean_pool_backward(const Tensor& grad_out, std::span<const std::uint8_t> mask,
                               Tensor& grad_f);

/// Sum of squared row differences over selected (n, t) rows of N x L x d
/// tensors, divided by (selected rows * d). Zero rows selected gives 0.
double masked_mse(const Tensor& a, const Tensor& b, std::span<const std::uint8_t> mask);
/// grad_a += scale * d masked_mse / d a.
void masked_mse_backward(const Tensor& a, const Tensor& b, std::span<const std::uint8_t> mask,
                         double scale, Tensor& grad_a);

Tensor relu(const Tensor& x);
/// Zeroes grad where the pre-activation was not positive.
void relu_backward(const Tensor& pre, Tensor& grad);

/// Named parameter tensors with unique names, in insertion order.
class ParamSet {
 public:
  Tensor& add(const std::string& name, Tensor value);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t count() const { return items_.size(); }
  std::size_t total_size() const;
  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  /// Same names and shapes, all zeros.
  ParamSet zeros_like() const;
  /// Throws NumericError naming the first parameter with a non-finite entry.
  void check_finite(const std::string& what) const;

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
};

/// Uniform in +-sqrt(1/fan_in).
void init_uniform(Tensor& t, std::size_t fan_in, Rng& rng);

}  // namespace logsd::nn
