#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "s2cd/core/error.hpp"
#include "s2cd/core/random.hpp"
#include "s2cd/nn/adamw.hpp"
#include "s2cd/nn/dense_net.hpp"

namespace s2cd::teacher {

/// One visited (s, a) pair with its immediate reward and TD action-value target.
struct SupervisedRow {
  std::vector<double> obs;
  int action = 0;
  double reward = 0.0;
  double q_target = 0.0;
};

struct FitConfig {
  std::size_t epochs = 50;
  std::size_t minibatch = 64;  // 0: full batch (deterministic in row order)
  double learning_rate = 1e-3;
  double max_grad_norm = 10.0;
  std::size_t min_rows = 1000;
};

struct FitReport {
  double return_train_mse = 0.0;
  double return_heldout_mse = 0.0;
  double q_train_mse = 0.0;
  double q_heldout_mse = 0.0;
  std::size_t train_rows = 0;
  std::size_t heldout_rows = 0;
};

/// Rows with index % 10 == 9 are held out.
inline bool is_heldout(std::size_t index) { return index % 10 == 9; }

inline nn::NetSpec value_head_spec(std::size_t input_dim, const std::vector<std::size_t>& hidden) {
  return {input_dim, hidden, 3, nn::Head::VectorValue};
}

namespace detail {

template <class Target>
double masked_mse(const nn::DenseNet& net, std::span<const SupervisedRow* const> rows, Target target) {
  if (rows.empty()) return 0.0;
  double total = 0.0;
  for (const SupervisedRow* r : rows) {
    const double err = net.evaluate(r->obs)[static_cast<std::size_t>(r->action)] - target(*r);
    total += err * err;
  }
  return total / static_cast<double>(rows.size());
}

/// Mean squared error on the visited action's output only; other outputs get no gradient.
template <class Target>
void masked_mse_grad(const nn::DenseNet& net, std::span<const SupervisedRow* const> rows, Target target,
                     std::vector<double>& grad) {
  grad.assign(net.param_count(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  std::vector<double> dout(net.spec().output_dim, 0.0);
  for (const SupervisedRow* r : rows) {
    const auto fwd = net.forward(r->obs);
    const auto a = static_cast<std::size_t>(r->action);
    std::fill(dout.begin(), dout.end(), 0.0);
    dout[a] = 2.0 * (fwd.output[a] - target(*r)) * inv_n;
    net.backward(fwd.cache, dout, grad);
  }
}

}  // namespace detail

/// Incremental regression of the Return and Q-Value heads; optimizer moments
/// persist across calls so training can continue phase after phase.
class ValueHeadFitter {
 public:
  ValueHeadFitter(nn::DenseNet return_net, nn::DenseNet qvalue_net, FitConfig cfg)
      : return_net_(std::move(return_net)), qvalue_net_(std::move(qvalue_net)), cfg_(cfg) {
    return_opt_ = nn::OptimState::for_params(return_net_.param_count(), cfg_.learning_rate, 0.0, false);
    q_opt_ = nn::OptimState::for_params(qvalue_net_.param_count(), cfg_.learning_rate, 0.0, false);
  }

  FitReport fit(std::span<const SupervisedRow> rows, Rng& rng) {
    if (rows.empty()) throw std::invalid_argument("value-head fit needs at least one row");
    if (rows.size() < cfg_.min_rows)
      throw std::invalid_argument("value-head fit needs at least " + std::to_string(cfg_.min_rows) + " rows");
    std::vector<const SupervisedRow*> train, heldout;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.action < 0 || r.action > 2) throw std::invalid_argument("row action out of range");
      if (!std::isfinite(r.reward) || !std::isfinite(r.q_target)) throw std::invalid_argument("row target not finite");
      (is_heldout(i) ? heldout : train).push_back(&r);
    }
    auto reward_of = [](const SupervisedRow& r) { return r.reward; };
    auto q_of = [](const SupervisedRow& r) { return r.q_target; };
    const std::size_t mb = cfg_.minibatch == 0 ? train.size() : cfg_.minibatch;
    std::vector<double> grad;
    std::vector<const SupervisedRow*> batch;
    for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
      if (cfg_.minibatch != 0)
        for (std::size_t i = train.size(); i > 1; --i) std::swap(train[i - 1], train[uniform_index(rng, i)]);
      for (std::size_t start = 0; start < train.size(); start += mb) {
        const std::size_t end = std::min(train.size(), start + mb);
        batch.assign(train.begin() + static_cast<std::ptrdiff_t>(start), train.begin() + static_cast<std::ptrdiff_t>(end));
        detail::masked_mse_grad(return_net_, batch, reward_of, grad);
        nn::clip_grad_norm(grad, cfg_.max_grad_norm);
        nn::adamw_step(return_opt_, return_net_.params(), grad, 0.0);
        detail::masked_mse_grad(qvalue_net_, batch, q_of, grad);
        nn::clip_grad_norm(grad, cfg_.max_grad_norm);
        nn::adamw_step(q_opt_, qvalue_net_.params(), grad, 0.0);
      }
    }
    FitReport rep;
    rep.train_rows = train.size();
    rep.heldout_rows = heldout.size();
    rep.return_train_mse = detail::masked_mse(return_net_, train, reward_of);
    rep.return_heldout_mse = detail::masked_mse(return_net_, heldout, reward_of);
    rep.q_train_mse = detail::masked_mse(qvalue_net_, train, q_of);
    rep.q_heldout_mse = detail::masked_mse(qvalue_net_, heldout, q_of);
    return rep;
  }

  const nn::DenseNet& return_net() const { return return_net_; }
  const nn::DenseNet& qvalue_net() const { return qvalue_net_; }
  const FitConfig& config() const { return cfg_; }

 private:
  nn::DenseNet return_net_;
  nn::DenseNet qvalue_net_;
  nn::OptimState return_opt_;
  nn::OptimState q_opt_;
  FitConfig cfg_;
};

struct FittedHeads {
  nn::DenseNet return_net;
  nn::DenseNet qvalue_net;
  FitReport report;
};

/// One-shot fit from freshly initialized heads.
inline FittedHeads fit_value_heads(std::span<const SupervisedRow> rows, const FitConfig& cfg, Rng& rng,
                                   const std::vector<std::size_t>& hidden = {64, 64}) {
  if (rows.empty()) throw std::invalid_argument("value-head fit needs at least one row");
  const std::size_t dim = rows.front().obs.size();
  auto ret = nn::DenseNet::initialized(value_head_spec(dim, hidden), rng);
  auto q = nn::DenseNet::initialized(value_head_spec(dim, hidden), rng);
  ValueHeadFitter fitter(std::move(ret), std::move(q), cfg);
  auto rep = fitter.fit(rows, rng);
  return {fitter.return_net(), fitter.qvalue_net(), rep};
}

}  // namespace s2cd::teacher
