// Validation metrics: prediction error against held-out transitions,
// side-by-side long-horizon rollouts with energy drift, sparsity and
// coefficient-recovery statistics.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ssinn/data.hpp"
#include "ssinn/integrators.hpp"
#include "ssinn/model.hpp"
#include "ssinn/phase.hpp"
#include "ssinn/systems.hpp"

namespace ssinn {

struct PredictionError {
  double position_mean = 0.0;
  double momentum_mean = 0.0;
  std::vector<std::pair<double, double>> per_sample;  // (position, momentum) sums per sample
  int failures = 0;   // samples whose integration blew up; never silently dropped
  int evaluated = 0;

  double total_mean() const { return position_mean + momentum_mean; }
};

// Rolls each initial state forward with the model's fields (target-to-target
// for multi-step samples) and averages the split L1 error over all targets.
inline PredictionError prediction_error(const SparseHamiltonian& model, const Dataset& val,
                                        double eps, Scheme scheme = Scheme::Symplectic4) {
  GradientFields f = grad_fields(model);
  PredictionError r;
  double pos_sum = 0.0, mom_sum = 0.0;
  long target_count = 0;
  for (const auto& s : val.samples) {
    if (s.initial.dim() != model.v_basis.num_vars())
      throw std::invalid_argument("prediction_error: dataset/model dimension mismatch");
    try {
      std::vector<double> q = s.initial.q, p = s.initial.p;
      double prev_t = s.t0;
      double sample_pos = 0.0, sample_mom = 0.0;
      for (const auto& [t, target] : s.targets) {
        auto [q1, p1] = integrate(scheme, f.grad_v, f.grad_t, std::move(q), std::move(p), prev_t, t, eps);
        q = std::move(q1);
        p = std::move(p1);
        auto [dq, dp] = split_error(PhaseState(q, p), target);
        sample_pos += dq;
        sample_mom += dp;
        prev_t = t;
        ++target_count;
      }
      pos_sum += sample_pos;
      mom_sum += sample_mom;
      r.per_sample.emplace_back(sample_pos, sample_mom);
      ++r.evaluated;
    } catch (const NumericError&) {
      ++r.failures;
    }
  }
  if (target_count > 0) {
    r.position_mean = pos_sum / target_count;
    r.momentum_mean = mom_sum / target_count;
  }
  return r;
}

struct DivergencePoint {
  double t;
  double position_l1;
  double energy_abs_err;  // |H_truth(model state) - H_truth(initial)|
};

// Model and truth rolled side by side from the same initial state. Position
// error compares the two trajectories; energy error evaluates the truth
// Hamiltonian on the model's states against its initial value.
inline std::vector<DivergencePoint> rollout_divergence(const SparseHamiltonian& model,
                                                       const System& sys, const PhaseState& start,
                                                       double T, double dt, double eps,
                                                       double ref_eps = 1e-4) {
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("rollout_divergence: T and dt must be positive");
  int n_states = static_cast<int>(std::llround(T / dt)) + 1;
  GradientFields mf = grad_fields(model);
  GradientFields tf = truth_fields(sys);
  Trajectory model_traj = rollout(Scheme::Symplectic4, mf.grad_v, mf.grad_t, start, 0.0, dt, n_states, eps);
  Trajectory truth_traj = rollout(Scheme::Symplectic4, tf.grad_v, tf.grad_t, start, 0.0, dt, n_states, ref_eps);

  double h0 = energy(sys, start);
  std::vector<DivergencePoint> series;
  series.reserve(n_states);
  for (int i = 0; i < n_states; ++i) {
    auto [dq, dp] = split_error(model_traj.states[i], truth_traj.states[i]);
    (void)dp;
    series.push_back({model_traj.times[i], dq, std::abs(energy(sys, model_traj.states[i]) - h0)});
  }
  return series;
}

struct SparsityStats {
  double true_fraction = 0.0;  // |true support| / |terms across both networks|
  double precision = 0.0;
  double recall = 0.0;
};

inline SparsityStats sparsity_stats(const SparseHamiltonian& model, const SymbolicEquation& truth,
                                    double support_threshold) {
  if (!(support_threshold > 0.0))
    throw std::invalid_argument("sparsity_stats: threshold must be positive");
  SparsityStats s;
  std::size_t total_terms = model.v_basis.term_count() + model.t_basis.term_count();
  if (total_terms > 0) s.true_fraction = static_cast<double>(truth.terms.size()) / total_terms;
  RecoveryReport rec = coefficient_recovery(model, truth, support_threshold);
  s.precision = rec.support_precision;
  s.recall = rec.support_recall;
  return s;
}

struct EvalReport {
  PredictionError prediction;
  double position_median = 0.0;
  double momentum_median = 0.0;
  std::size_t trainable_params = 0;
  bool has_recovery = false;
  RecoveryReport recovery;
  SparsityStats sparsity;
  double support_threshold = 0.0;
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Full report; pass the truth system to include recovery and sparsity.
inline EvalReport evaluate(const SparseHamiltonian& model, const Dataset& val, double eps,
                           const System* truth_sys = nullptr, double support_threshold = 1e-3,
                           Scheme scheme = Scheme::Symplectic4) {
  EvalReport rep;
  rep.prediction = prediction_error(model, val, eps, scheme);
  std::vector<double> pos, mom;
  for (auto& [a, b] : rep.prediction.per_sample) {
    pos.push_back(a);
    mom.push_back(b);
  }
  rep.position_median = median_of(std::move(pos));
  rep.momentum_median = median_of(std::move(mom));
  rep.trainable_params = param_count(model);
  if (truth_sys) {
    SymbolicEquation truth = truth_equation(*truth_sys);
    rep.recovery = coefficient_recovery(model, truth, support_threshold);
    rep.sparsity = sparsity_stats(model, truth, support_threshold);
    rep.support_threshold = support_threshold;
    rep.has_recovery = true;
  }
  return rep;
}

}  // namespace ssinn
