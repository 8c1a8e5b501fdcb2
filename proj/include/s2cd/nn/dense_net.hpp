#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "s2cd/core/error.hpp"
#include "s2cd/core/random.hpp"

namespace s2cd::nn {

enum class Head { SoftmaxPolicy, ScalarValue, VectorValue };

inline std::string_view to_string(Head h) {
  switch (h) {
    case Head::SoftmaxPolicy: return "softmax_policy";
    case Head::ScalarValue: return "scalar_value";
    case Head::VectorValue: return "vector_value";
  }
  return "vector_value";
}

inline Head parse_head(std::string_view s) {
  if (s == "softmax_policy") return Head::SoftmaxPolicy;
  if (s == "scalar_value") return Head::ScalarValue;
  if (s == "vector_value") return Head::VectorValue;
  throw ConfigError("unknown network head '" + std::string(s) + "'");
}

/// Policy logits pass through a soft clamp L*tanh(z/L) so that softmax
/// probabilities stay strictly inside (0, 1).
inline constexpr double kLogitBound = 15.0;

struct NetSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden{64, 64};
  std::size_t output_dim = 1;
  Head head = Head::ScalarValue;

  void validate() const {
    if (input_dim < 1 || output_dim < 1) throw std::invalid_argument("network widths must be at least 1");
    for (auto h : hidden)
      if (h < 1) throw std::invalid_argument("network widths must be at least 1");
    if (head == Head::SoftmaxPolicy && output_dim != 3) throw std::invalid_argument("policy head must have 3 outputs");
    if (head == Head::ScalarValue && output_dim != 1) throw std::invalid_argument("scalar value head must have 1 output");
  }

  std::vector<std::size_t> widths() const {
    std::vector<std::size_t> w{input_dim};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(output_dim);
    return w;
  }

  std::size_t param_count() const {
    const auto w = widths();
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) n += w[l + 1] * w[l] + w[l + 1];
    return n;
  }

  bool operator==(const NetSpec&) const = default;
};

using ParamVector = std::vector<double>;

/// Activations retained by a forward pass for the matching backward pass.
struct ForwardCache {
  std::vector<std::vector<double>> activations;  // input, then each tanh layer output
  std::vector<double> raw_output;                // final affine output
  std::vector<double> output;                    // head output (probabilities for policies)
  std::size_t param_count = 0;
};

struct ForwardResult {
  std::vector<double> output;
  ForwardCache cache;
};

inline std::vector<double> softmax(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += (p[i] = std::exp(logits[i] - top));
  for (auto& x : p) x /= total;
  return p;
}

inline std::vector<double> log_softmax(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp(z - top);
  const double lse = top + std::log(total);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

/// Fully connected tanh network with a flat parameter vector laid out as
/// [W_0 (row-major, out x in), b_0, W_1, b_1, ...].
class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(NetSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    params_.assign(spec_.param_count(), 0.0);
  }

  /// Orthogonal initialization: hidden layers with gain sqrt(2), the policy
  /// output layer with 0.01 and value outputs with 1. Biases start at zero.
  static DenseNet initialized(NetSpec spec, Rng& rng) {
    DenseNet net(std::move(spec));
    const auto w = net.spec_.widths();
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
      const bool last = l + 2 == w.size();
      const double gain = !last ? std::sqrt(2.0) : (net.spec_.head == Head::SoftmaxPolicy ? 0.01 : 1.0);
      orthogonal_fill(std::span<double>(net.params_).subspan(offset, w[l + 1] * w[l]), w[l + 1], w[l], gain, rng);
      offset += w[l + 1] * w[l] + w[l + 1];
    }
    return net;
  }

  const NetSpec& spec() const { return spec_; }
  const ParamVector& params() const { return params_; }
  ParamVector& params() { return params_; }
  std::size_t param_count() const { return params_.size(); }

  ForwardResult forward(std::span<const double> input) const {
    ForwardResult r;
    r.output = run(input, &r.cache);
    return r;
  }

  /// Forward pass without retaining a cache.
  std::vector<double> evaluate(std::span<const double> input) const { return run(input, nullptr); }

  /// Accumulates dL/dparams into `grad` given dL/d(head output).
  void backward(const ForwardCache& cache, std::span<const double> output_grad, std::span<double> grad) const {
    check_cache(cache, grad);
    if (output_grad.size() != spec_.output_dim) throw std::invalid_argument("output gradient has wrong length");
    if (spec_.head != Head::SoftmaxPolicy) {
      backward_raw(cache, output_grad, grad);
      return;
    }
    const auto& p = cache.output;
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += output_grad[i] * p[i];
    std::vector<double> dlogits(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) dlogits[i] = p[i] * (output_grad[i] - dot);
    backward_logits(cache, dlogits, grad);
  }

  /// Policy head only: accumulates gradients given dL/d(clamped logits).
  void backward_logits(const ForwardCache& cache, std::span<const double> logit_grad, std::span<double> grad) const {
    check_cache(cache, grad);
    if (spec_.head != Head::SoftmaxPolicy) throw std::invalid_argument("backward_logits needs a policy head");
    std::vector<double> draw(logit_grad.size());
    for (std::size_t i = 0; i < draw.size(); ++i) {
      const double t = std::tanh(cache.raw_output[i] / kLogitBound);
      draw[i] = logit_grad[i] * (1.0 - t * t);
    }
    backward_raw(cache, draw, grad);
  }

  /// Clamped logits of a policy forward pass.
  static std::vector<double> logits(const ForwardCache& cache) {
    std::vector<double> z(cache.raw_output.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = kLogitBound * std::tanh(cache.raw_output[i] / kLogitBound);
    return z;
  }

 private:
  std::vector<double> run(std::span<const double> input, ForwardCache* cache) const {
    if (input.size() != spec_.input_dim) throw std::invalid_argument("network input has wrong length");
    for (double x : input)
      if (!std::isfinite(x)) throw NumericalError("non-finite network input");
    const auto w = spec_.widths();
    std::vector<double> a(input.begin(), input.end());
    if (cache) {
      cache->activations.clear();
      cache->param_count = params_.size();
    }
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
      const std::size_t in = w[l], out = w[l + 1];
      const double* W = params_.data() + offset;
      const double* b = W + out * in;
      std::vector<double> z(out);
      for (std::size_t o = 0; o < out; ++o) {
        double s = b[o];
        const double* row = W + o * in;
        for (std::size_t i = 0; i < in; ++i) s += row[i] * a[i];
        z[o] = s;
      }
      offset += out * in + out;
      const bool last = l + 2 == w.size();
      if (cache) cache->activations.push_back(a);
      if (!last)
        for (auto& v : z) v = std::tanh(v);
      a = std::move(z);
    }
    std::vector<double> output;
    if (spec_.head == Head::SoftmaxPolicy) {
      std::vector<double> z(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) z[i] = kLogitBound * std::tanh(a[i] / kLogitBound);
      output = softmax(z);
    } else {
      output = a;
    }
    if (cache) {
      cache->raw_output = std::move(a);
      cache->output = output;
    }
    return output;
  }

  void check_cache(const ForwardCache& cache, std::span<double> grad) const {
    if (cache.param_count != params_.size() || cache.activations.size() != spec_.hidden.size() + 1)
      throw std::invalid_argument("forward cache does not match this network");
    if (grad.size() != params_.size()) throw std::invalid_argument("gradient buffer has wrong length");
  }

  void backward_raw(const ForwardCache& cache, std::span<const double> d_raw, std::span<double> grad) const {
    const auto w = spec_.widths();
    std::vector<std::size_t> offsets(w.size() - 1);
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
      offsets[l] = offset;
      offset += w[l + 1] * w[l] + w[l + 1];
    }
    std::vector<double> delta(d_raw.begin(), d_raw.end());  // dL/dz for the current layer
    for (std::size_t l = w.size() - 1; l-- > 0;) {
      const std::size_t in = w[l], out = w[l + 1];
      const auto& a = cache.activations[l];
      const double* W = params_.data() + offsets[l];
      double* gW = grad.data() + offsets[l];
      double* gb = gW + out * in;
      for (std::size_t o = 0; o < out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        double* row = gW + o * in;
        for (std::size_t i = 0; i < in; ++i) row[i] += d * a[i];
        gb[o] += d;
      }
      if (l == 0) break;
      std::vector<double> prev(in, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        const double* row = W + o * in;
        for (std::size_t i = 0; i < in; ++i) prev[i] += d * row[i];
      }
      for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - a[i] * a[i];  // a = tanh(z) of layer l-1
      delta = std::move(prev);
    }
  }

  static void orthogonal_fill(std::span<double> W, std::size_t rows, std::size_t cols, double gain, Rng& rng) {
    // Orthonormalize the longer side with modified Gram-Schmidt.
    const bool tall = rows >= cols;
    const std::size_t n = tall ? rows : cols;  // vector length
    const std::size_t k = tall ? cols : rows;  // vector count
    std::vector<std::vector<double>> q(k, std::vector<double>(n));
    for (auto& v : q)
      for (auto& x : v) x = standard_normal(rng);
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < j; ++i) {
        const double d = std::inner_product(q[j].begin(), q[j].end(), q[i].begin(), 0.0);
        for (std::size_t t = 0; t < n; ++t) q[j][t] -= d * q[i][t];
      }
      const double norm = std::sqrt(std::inner_product(q[j].begin(), q[j].end(), q[j].begin(), 0.0));
      for (auto& x : q[j]) x /= norm;
    }
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) W[r * cols + c] = gain * (tall ? q[c][r] : q[r][c]);
  }

  NetSpec spec_;
  ParamVector params_;
};

}  // namespace s2cd::nn
