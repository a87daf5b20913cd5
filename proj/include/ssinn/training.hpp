// L1 prediction loss through the differentiable integrator, ADAM with
// per-epoch learning-rate decay, and the small hyperparameter grid search.
//
// The L1 regularization term lambda*(|theta1| + |theta2|) depends only on
// the parameters, so it is differentiated analytically (sign function) and
// added to the gradient outside the tape; its value still appears in the
// reported loss.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "ssinn/data.hpp"
#include "ssinn/evaluation.hpp"
#include "ssinn/integrators.hpp"
#include "ssinn/model.hpp"
#include "ssinn/rng.hpp"
#include "ssinn/tape.hpp"

namespace ssinn {

struct TrainConfig {
  double learning_rate = 1e-3;
  double lr_decay = 0.95;  // multiplicative, per epoch
  int epochs = 5;
  double lambda_l1 = 1e-3;
  int batch_size = 128;
  double eps = 0.01;  // integrator tolerance during training
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  Scheme scheme = Scheme::Symplectic4;
  std::size_t tape_limit = Tape::kDefaultMaxNodes;
  bool check_gradients = true;  // finite-difference audit on the first batch

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (!(lr_decay > 0.0) || lr_decay > 1.0)
      throw std::invalid_argument("TrainConfig: lr_decay must be in (0, 1]");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (lambda_l1 < 0.0) throw std::invalid_argument("TrainConfig: lambda_l1 must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(eps > 0.0)) throw std::invalid_argument("TrainConfig: eps must be > 0");
  }
};

struct TrainReport {
  std::vector<double> epoch_mean_loss;
  double wall_seconds = 0.0;
  bool gradient_check_ran = false;
  double gradient_check_max_rel = 0.0;
};

// Abort carrying the failure location and the parameters at failure time.
struct TrainAbort : NumericError {
  TrainAbort(int epoch_, int batch_, std::vector<double> params_)
      : NumericError("training aborted: non-finite loss at epoch " + std::to_string(epoch_) +
                     ", batch " + std::to_string(batch_)),
        epoch(epoch_),
        batch(batch_),
        params(std::move(params_)) {}
  int epoch, batch;
  std::vector<double> params;
};

namespace detail {

inline std::vector<double*> param_refs(SparseHamiltonian& m) {
  std::vector<double*> refs;
  refs.reserve(param_count(m));
  for (double& v : m.theta1) refs.push_back(&v);
  for (double& v : m.v_inner) refs.push_back(&v);
  for (double& v : m.theta2) refs.push_back(&v);
  for (double& v : m.t_inner) refs.push_back(&v);
  return refs;
}

inline double l1_of_params(const SparseHamiltonian& m) {
  auto acc = [](double s, const std::vector<double>& v) {
    for (double x : v) s += std::abs(x);
    return s;
  };
  double s = 0.0;
  s = acc(s, m.theta1);
  s = acc(s, m.v_inner);
  s = acc(s, m.theta2);
  s = acc(s, m.t_inner);
  return s;
}

}  // namespace detail

// Loss of one transition on the tape: the prediction rolls target-to-target
// from its own previous prediction (recurrent unrolling), L1 errors over all
// targets are summed, and the L1 penalty enters once as a constant node so
// the returned value matches the full objective while its gradient is left
// to the analytic path.
inline DiffScalar sample_loss(Tape& tape, const BoundModel& bm, const TransitionSample& s,
                              double eps, double lambda_l1, Scheme scheme = Scheme::Symplectic4) {
  if (s.initial.dim() != bm.model->v_basis.num_vars())
    throw std::invalid_argument("sample_loss: sample/model dimension mismatch");
  auto gv = [&bm](const std::vector<DiffScalar>& x, std::vector<DiffScalar>& out) { bm.grad_v(x, out); };
  auto gt = [&bm](const std::vector<DiffScalar>& x, std::vector<DiffScalar>& out) { bm.grad_t(x, out); };

  std::vector<DiffScalar> q, p;
  for (double v : s.initial.q) q.push_back(make_constant(v));
  for (double v : s.initial.p) p.push_back(make_constant(v));

  DiffScalar loss = make_constant(0.0);
  bool first = true;
  double prev_t = s.t0;
  for (const auto& [t, target] : s.targets) {
    auto [q1, p1] = integrate(scheme, gv, gt, std::move(q), std::move(p), prev_t, t, eps);
    q = std::move(q1);
    p = std::move(p1);
    for (int i = 0; i < target.dim(); ++i) {
      DiffScalar term = abs(q[i] - target.q[i]) + abs(p[i] - target.p[i]);
      loss = first ? term : loss + term;
      first = false;
    }
    prev_t = t;
  }
  return loss + tape.constant(lambda_l1 * detail::l1_of_params(*bm.model));
}

// Same objective evaluated in plain doubles; independent of the tape, so it
// doubles as the finite-difference oracle for the recorded path.
inline double sample_loss_value(const SparseHamiltonian& m, const TransitionSample& s, double eps,
                                double lambda_l1, Scheme scheme = Scheme::Symplectic4) {
  auto gv = [&m](const std::vector<double>& x, std::vector<double>& out) {
    net_gradient(m.v_basis, m.theta1, m.v_inner, x, out);
  };
  auto gt = [&m](const std::vector<double>& x, std::vector<double>& out) {
    net_gradient(m.t_basis, m.theta2, m.t_inner, x, out);
  };
  std::vector<double> q = s.initial.q, p = s.initial.p;
  double loss = 0.0;
  double prev_t = s.t0;
  for (const auto& [t, target] : s.targets) {
    auto [q1, p1] = integrate(scheme, gv, gt, std::move(q), std::move(p), prev_t, t, eps);
    q = std::move(q1);
    p = std::move(p1);
    for (int i = 0; i < target.dim(); ++i)
      loss += std::abs(q[i] - target.q[i]) + std::abs(p[i] - target.p[i]);
    prev_t = t;
  }
  return loss + lambda_l1 * detail::l1_of_params(m);
}

namespace detail {

// Central-difference audit of d(sample_loss)/d(theta) on one sample.
inline double gradient_check_rel_err(const SparseHamiltonian& model, const TransitionSample& s,
                                     const TrainConfig& cfg, const std::vector<double>& analytic) {
  SparseHamiltonian probe = model;
  std::vector<double*> refs = param_refs(probe);
  double worst = 0.0;
  for (std::size_t j = 0; j < refs.size(); ++j) {
    double x = *refs[j];
    double h = 1e-6 * std::max(1.0, std::abs(x));
    *refs[j] = x + h;
    double fp = sample_loss_value(probe, s, cfg.eps, cfg.lambda_l1, cfg.scheme);
    *refs[j] = x - h;
    double fm = sample_loss_value(probe, s, cfg.eps, cfg.lambda_l1, cfg.scheme);
    *refs[j] = x;
    double fd = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic[j] - fd) / std::max(1.0, std::abs(fd)));
  }
  return worst;
}

}  // namespace detail

// ADAM over shuffled mini-batches. Batch gradients are averaged in batch
// order, the analytic L1 subgradient lambda*sign(theta) is added once, and
// the learning rate decays multiplicatively per epoch. Deterministic given
// the seed. Progress lines "epoch,<i>,mean_loss,<v>" go to `progress` when
// provided.
inline TrainReport train(SparseHamiltonian& model, const Dataset& data, const TrainConfig& cfg,
                         std::ostream* progress = nullptr) {
  cfg.validate();
  model.validate();
  data.validate();
  if (data.samples.empty()) throw std::invalid_argument("train: dataset is empty");
  if (data.dim() != model.v_basis.num_vars())
    throw std::invalid_argument("train: dataset/model dimension mismatch");

  auto t_start = std::chrono::steady_clock::now();
  TrainReport report;

  std::vector<double*> params = detail::param_refs(model);
  const std::size_t n_params = params.size();
  std::vector<double> m1(n_params, 0.0), m2(n_params, 0.0), grad(n_params, 0.0);
  long adam_t = 0;

  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), 0);

  Tape tape(cfg.tape_limit);
  double lr = cfg.learning_rate;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    int batch_index = 0;
    for (std::size_t at = 0; at < order.size(); at += cfg.batch_size, ++batch_index) {
      std::size_t end = std::min(order.size(), at + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t i = at; i < end; ++i) {
        tape.reset();
        BoundModel bm = BoundModel::bind(tape, model);
        DiffScalar loss = sample_loss(tape, bm, data.samples[order[i]], cfg.eps, cfg.lambda_l1, cfg.scheme);
        if (!std::isfinite(loss.value)) {
          std::vector<double> snapshot;
          for (double* p : params) snapshot.push_back(*p);
          throw TrainAbort(epoch, batch_index, std::move(snapshot));
        }
        loss_sum += loss.value;
        GradientMap g = tape.backward(loss);
        const std::vector<double>& gv = g.values();  // leaf order == param order
        for (std::size_t j = 0; j < n_params; ++j) grad[j] += gv[j];
      }
      double inv = 1.0 / static_cast<double>(end - at);
      for (std::size_t j = 0; j < n_params; ++j) {
        grad[j] *= inv;
        grad[j] += cfg.lambda_l1 * (*params[j] > 0.0 ? 1.0 : (*params[j] < 0.0 ? -1.0 : 0.0));
      }

      if (cfg.check_gradients && epoch == 0 && batch_index == 0) {
        // Audit the analytic gradient of the first sample before stepping.
        tape.reset();
        BoundModel bm = BoundModel::bind(tape, model);
        DiffScalar loss =
            sample_loss(tape, bm, data.samples[order[at]], cfg.eps, cfg.lambda_l1, cfg.scheme);
        GradientMap g = tape.backward(loss);
        std::vector<double> analytic = g.values();
        for (std::size_t j = 0; j < n_params; ++j)
          analytic[j] += cfg.lambda_l1 * (*params[j] > 0.0 ? 1.0 : (*params[j] < 0.0 ? -1.0 : 0.0));
        report.gradient_check_max_rel =
            detail::gradient_check_rel_err(model, data.samples[order[at]], cfg, analytic);
        report.gradient_check_ran = true;
        if (report.gradient_check_max_rel > 1e-4)
          throw NumericError("train: gradient check failed (max rel err " +
                             std::to_string(report.gradient_check_max_rel) + ")");
      }

      ++adam_t;
      double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam_t));
      double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam_t));
      for (std::size_t j = 0; j < n_params; ++j) {
        m1[j] = cfg.adam_beta1 * m1[j] + (1.0 - cfg.adam_beta1) * grad[j];
        m2[j] = cfg.adam_beta2 * m2[j] + (1.0 - cfg.adam_beta2) * grad[j] * grad[j];
        double mh = m1[j] / bc1;
        double vh = m2[j] / bc2;
        *params[j] -= lr * mh / (std::sqrt(vh) + cfg.adam_eps);
      }
    }

    double mean_loss = loss_sum / static_cast<double>(data.samples.size());
    report.epoch_mean_loss.push_back(mean_loss);
    if (progress) (*progress) << "epoch," << epoch << ",mean_loss," << mean_loss << "\n";
    lr *= cfg.lr_decay;
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

// ---------------------------------------------------------------------------
// Grid search over learning rates x regularization weights.

struct GridCell {
  double learning_rate;
  double lambda_l1;
  double validation_error;  // mean total L1 on the held-out set
  bool failed = false;
  std::string failure;
};

struct GridResult {
  TrainConfig best_config;
  TrainReport best_report;
  SparseHamiltonian best_model;
  double best_validation_error = 0.0;
  std::vector<GridCell> cells;
};

// Trains one model per (lr, lambda) cell from a fresh copy of `proto` and
// returns the argmin of validation prediction error; ties prefer smaller
// lambda, then smaller lr. Diverging cells are recorded and skipped.
inline GridResult grid_search(const SparseHamiltonian& proto, const Dataset& train_set,
                              const Dataset& validation, const std::vector<double>& learning_rates,
                              const std::vector<double>& lambdas, const TrainConfig& base) {
  if (learning_rates.empty() || lambdas.empty())
    throw std::invalid_argument("grid_search: empty grid");
  if (validation.samples.empty()) throw std::invalid_argument("grid_search: empty validation set");

  GridResult result;
  bool have_best = false;
  for (double lr : learning_rates) {
    for (double lambda : lambdas) {
      TrainConfig cfg = base;
      cfg.learning_rate = lr;
      cfg.lambda_l1 = lambda;
      GridCell cell{lr, lambda, 0.0};
      try {
        SparseHamiltonian model = proto;
        TrainReport rep = train(model, train_set, cfg);
        PredictionError err = prediction_error(model, validation, cfg.eps, cfg.scheme);
        if (err.evaluated == 0) throw NumericError("all validation rollouts failed");
        cell.validation_error = err.total_mean();
        bool better = !have_best || cell.validation_error < result.best_validation_error ||
                      (cell.validation_error == result.best_validation_error &&
                       (lambda < result.best_config.lambda_l1 ||
                        (lambda == result.best_config.lambda_l1 && lr < result.best_config.learning_rate)));
        if (better) {
          result.best_config = cfg;
          result.best_report = rep;
          result.best_model = std::move(model);
          result.best_validation_error = cell.validation_error;
          have_best = true;
        }
      } catch (const NumericError& e) {
        cell.failed = true;
        cell.failure = e.what();
      }
      result.cells.push_back(std::move(cell));
    }
  }
  if (!have_best) {
    std::string msg = "grid_search: every cell failed:";
    for (const auto& c : result.cells)
      msg += " (lr=" + std::to_string(c.learning_rate) + ", l1=" + std::to_string(c.lambda_l1) +
             ": " + c.failure + ")";
    throw NumericError(msg);
  }
  return result;
}

}  // namespace ssinn
