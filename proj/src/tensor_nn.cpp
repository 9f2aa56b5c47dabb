#include "logsd/tensor_nn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "logsd/kernels.hpp"

namespace logsd::nn {
namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  const std::size_t n =
      std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
  data_.assign(n, fill);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

Tensor conv_time(const Tensor& x, const Tensor& w, const Tensor& b) {
  require(x.rank() == 3 && w.rank() == 3 && b.rank() == 1, "conv_time: bad ranks");
  const std::size_t n_seq = x.dim(0), len = x.dim(1), d = x.dim(2);
  const std::size_t ch = w.dim(0), k = w.dim(1);
  require(w.dim(2) == d, "conv_time: weight width " + w.shape_string() + " vs input " +
                             x.shape_string());
  require(b.dim(0) == ch, "conv_time: bias size mismatch");
  require(k >= 1, "conv_time: empty kernel");

  const auto& kt = kernels::active();
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  Tensor out({n_seq, ch, len});
  std::vector<double> acc(ch);
  for (std::size_t n = 0; n < n_seq; ++n) {
    for (std::size_t t = 0; t < len; ++t) {
      const std::ptrdiff_t first = static_cast<std::ptrdiff_t>(t) - pad;
      const std::size_t i0 = first < 0 ? static_cast<std::size_t>(-first) : 0;
      const std::size_t i1 =
          std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(k),
                                   static_cast<std::ptrdiff_t>(len) - first);
      std::copy(b.ptr(), b.ptr() + ch, acc.begin());
      if (i1 > i0) {
        const double* xblock = x.ptr() + (n * len + static_cast<std::size_t>(first + i0)) * d;
        kt.dot_rows(w.ptr() + i0 * d, ch, k * d, xblock, (i1 - i0) * d, acc.data());
      }
      for (std::size_t c = 0; c < ch; ++c) out[(n * ch + c) * len + t] = acc[c];
    }
  }
  return out;
}

void conv_time_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, Tensor& grad_w,
                        Tensor& grad_b, Tensor* grad_x) {
  const std::size_t n_seq = x.dim(0), len = x.dim(1), d = x.dim(2);
  const std::size_t ch = w.dim(0), k = w.dim(1);
  require(grad_out.shape() == std::vector<std::size_t>{n_seq, ch, len},
          "conv_time_backward: grad_out shape");
  require(grad_w.same_shape(w) && grad_b.size() == ch, "conv_time_backward: grad shapes");
  if (grad_x) require(grad_x->same_shape(x), "conv_time_backward: grad_x shape");

  const auto& kt = kernels::active();
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  for (std::size_t n = 0; n < n_seq; ++n) {
    for (std::size_t t = 0; t < len; ++t) {
      const std::ptrdiff_t first = static_cast<std::ptrdiff_t>(t) - pad;
      const std::size_t i0 = first < 0 ? static_cast<std::size_t>(-first) : 0;
      const std::size_t i1 =
          std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(k),
                                   static_cast<std::ptrdiff_t>(len) - first);
      const std::size_t span_len = i1 > i0 ? (i1 - i0) * d : 0;
      const std::size_t xoff = (n * len + static_cast<std::size_t>(first + i0)) * d;
      for (std::size_t c = 0; c < ch; ++c) {
        const double g = grad_out[(n * ch + c) * len + t];
        if (g == 0.0) continue;
        grad_b[c] += g;
        if (span_len == 0) continue;
        kt.axpy(g, x.ptr() + xoff, grad_w.ptr() + c * k * d + i0 * d, span_len);
        if (grad_x) kt.axpy(g, w.ptr() + c * k * d + i0 * d, grad_x->ptr() + xoff, span_len);
      }
    }
  }
}

Tensor tconv_embed(const Tensor& f, const Tensor& w, const Tensor& b) {
  require(f.rank() == 3 && w.rank() == 3 && b.rank() == 1, "tconv_embed: bad ranks");
  const std::size_t n_seq = f.dim(0), ch = f.dim(1), len = f.dim(2);
  require(w.dim(0) == ch && w.dim(1) == 1, "tconv_embed: weight " + w.shape_string() +
                                               " vs input " + f.shape_string());
  const std::size_t d = w.dim(2);
  require(b.dim(0) == d, "tconv_embed: bias size mismatch");

  const auto& kt = kernels::active();
  Tensor out({n_seq, len, d});
  for (std::size_t n = 0; n < n_seq; ++n) {
    for (std::size_t t = 0; t < len; ++t) {
      double* row = out.ptr() + (n * len + t) * d;
      std::copy(b.ptr(), b.ptr() + d, row);
      for (std::size_t c = 0; c < ch; ++c) {
        const double v = f[(n * ch + c) * len + t];
        if (v != 0.0) kt.axpy(v, w.ptr() + c * d, row, d);
      }
    }
  }
  return out;
}

void tconv_embed_backward(const Tensor& f, const Tensor& w, const Tensor& grad_out,
                          Tensor& grad_f, Tensor& grad_w, Tensor& grad_b,
                          std::span<const std::uint8_t> rows) {
  const std::size_t n_seq = f.dim(0), ch = f.dim(1), len = f.dim(2);
  const std::size_t d = w.dim(2);
  require(grad_out.shape() == std::vector<std::size_t>{n_seq, len, d},
          "tconv_embed_backward: grad_out shape");
  require(grad_f.same_shape(f) && grad_w.same_shape(w) && grad_b.size() == d,
          "tconv_embed_backward: grad shapes");
  require(rows.empty() || rows.size() == n_seq * len, "tconv_embed_backward: rows size");

  const auto& kt = kernels::active();
  std::vector<double> tmp(ch);
  for (std::size_t n = 0; n < n_seq; ++n) {
    for (std::size_t t = 0; t < len; ++t) {
      if (!rows.empty() && rows[n * len + t] == 0) continue;
      const double* g = grad_out.ptr() + (n * len + t) * d;
      kt.axpy(1.0, g, grad_b.ptr(), d);
      std::fill(tmp.begin(), tmp.end(), 0.0);
      kt.dot_rows(w.ptr(), ch, d, g, d, tmp.data());
      for (std::size_t c = 0; c < ch; ++c) {
        grad_f[(n * ch + c) * len + t] += tmp[c];
        const double v = f[(n * ch + c) * len + t];
        if (v != 0.0) kt.axpy(v, g, grad_w.ptr() + c * d, d);
      }
    }
  }
}

Tensor masked_mean_pool(const Tensor& f, std::span<const std::uint8_t> mask) {
  require(f.rank() == 3, "masked_mean_pool: rank");
  const std::size_t n_seq = f.dim(0), ch = f.dim(1), len = f.dim(2);
  require(mask.size() == n_seq * len, "masked_mean_pool: mask size");
  Tensor out({n_seq, ch});
  for (std::size_t n = 0; n < n_seq; ++n) {
    std::size_t count = 0;
    for (std::size_t t = 0; t < len; ++t) count += mask[n * len + t] ? 1 : 0;
    if (count == 0) throw DataError("masked_mean_pool: sequence " + std::to_string(n) +
                                    " has no real positions");
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t c = 0; c < ch; ++c) {
      const double* row = f.ptr() + (n * ch + c) * len;
      double s = 0.0;
      for (std::size_t t = 0; t < len; ++t) {
        if (mask[n * len + t]) s += row[t];
      }
      out[n * ch + c] = s * inv;
    }
  }
  return out;
}

void masked_mean_pool_backward(const Tensor& grad_out, std::span<const std::uint8_t> mask,
                               Tensor& grad_f) {
  const std::size_t n_seq = grad_f.dim(0), ch = grad_f.dim(1), len = grad_f.dim(2);
  require(grad_out.shape() == std::vector<std::size_t>{n_seq, ch},
          "masked_mean_pool_backward: grad_out shape");
  for (std::size_t n = 0; n < n_seq; ++n) {
    std::size_t count = 0;
    for (std::size_t t = 0; t < len; ++t) count += mask[n * len + t] ? 1 : 0;
    if (count == 0) continue;
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t c = 0; c < ch; ++c) {
      const double g = grad_out[n * ch + c] * inv;
      double* row = grad_f.ptr() + (n * ch + c) * len;
      for (std::size_t t = 0; t < len; ++t) {
        if (mask[n * len + t]) row[t] += g;
      }
    }
  }
}

double masked_mse(const Tensor& a, const Tensor& b, std::span<const std::uint8_t> mask) {
  require(a.same_shape(b) && a.rank() == 3, "masked_mse: shape mismatch");
  const std::size_t rows = a.dim(0) * a.dim(1), d = a.dim(2);
  require(mask.size() == rows, "masked_mse: mask size");
  const auto& kt = kernels::active();
  double total = 0.0;
  std::size_t selected = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    ++selected;
    total += kt.sq_dist(a.ptr() + r * d, b.ptr() + r * d, d);
  }
  if (selected == 0) return 0.0;
  return total / (static_cast<double>(selected) * static_cast<double>(d));
}

void masked_mse_backward(const Tensor& a, const Tensor& b, std::span<const std::uint8_t> mask,
                         double scale, Tensor& grad_a) {
  require(a.same_shape(b) && grad_a.same_shape(a), "masked_mse_backward: shape mismatch");
  const std::size_t rows = a.dim(0) * a.dim(1), d = a.dim(2);
  std::size_t selected = 0;
  for (std::size_t r = 0; r < rows; ++r) selected += mask[r] ? 1 : 0;
  if (selected == 0) return;
  const double coef = scale * 2.0 / (static_cast<double>(selected) * static_cast<double>(d));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    for (std::size_t j = 0; j < d; ++j) {
      grad_a[r * d + j] += coef * (a[r * d + j] - b[r * d + j]);
    }
  }
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

void relu_backward(const Tensor& pre, Tensor& grad) {
  require(pre.same_shape(grad), "relu_backward: shape mismatch");
  for (std::size_t i = 0; i < pre.size(); ++i) {
    if (!(pre[i] > 0.0)) grad[i] = 0.0;
  }
}

Tensor& ParamSet::add(const std::string& name, Tensor value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  items_.emplace_back(name, std::move(value));
  return items_.back().second;
}

bool ParamSet::contains(const std::string& name) const {
  return std::any_of(items_.begin(), items_.end(),
                     [&](const auto& item) { return item.first == name; });
}

Tensor& ParamSet::get(const std::string& name) {
  for (auto& [n, t] : items_) {
    if (n == name) return t;
  }
  throw std::out_of_range("no parameter named '" + name + "'");
}

const Tensor& ParamSet::get(const std::string& name) const {
  for (const auto& [n, t] : items_) {
    if (n == name) return t;
  }
  throw std::out_of_range("no parameter named '" + name + "'");
}

std::size_t ParamSet::total_size() const {
  std::size_t s = 0;
  for (const auto& [n, t] : items_) s += t.size();
  return s;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& [n, t] : items_) out.add(n, Tensor(t.shape()));
  return out;
}

void ParamSet::check_finite(const std::string& what) const {
  for (const auto& [n, t] : items_) {
    if (!t.all_finite()) throw NumericError(what + ": non-finite values in '" + n + "'");
  }
}

void init_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (auto& v : t.data()) v = (2.0 * rng.uniform01() - 1.0) * bound;
}

}  // namespace logsd::nn
