// Splitting integrators for separable Hamiltonians, generic over the scalar
// type: plain doubles for rollouts, DiffScalar for the recorded training
// pass. The fourth-order scheme is the Forest-Ruth composition; leapfrog and
// classical RK4 are provided for the integrator ablation.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ssinn/errors.hpp"
#include "ssinn/phase.hpp"
#include "ssinn/tape.hpp"

namespace ssinn {

// Type-erased gradient fields dV/dq and dT/dp; the only thing an integrator
// needs to know about a Hamiltonian.
struct GradientFields {
  std::function<void(const std::vector<double>&, std::vector<double>&)> grad_v;
  std::function<void(const std::vector<double>&, std::vector<double>&)> grad_t;
};

// Stage coefficients of the fourth-order splitting scheme. The represented
// doubles satisfy 2*c1 + 2*c2 == 1 and 2*d1 + d2 == 1 exactly (c2 and d2 are
// derived from those identities; the derivation differs from the rounded
// closed forms by under one ulp).
struct SymplecticConstants {
  std::array<double, 4> c;
  std::array<double, 4> d;

  static SymplecticConstants forest_ruth() {
    const double cbrt2 = std::cbrt(2.0);
    const double denom = 2.0 - cbrt2;
    const double c1 = 1.0 / (2.0 * denom);
    const double c2 = 0.5 - c1;  // exact: Sterbenz subtraction
    const double d1 = 1.0 / denom;
    const double d2 = 1.0 - 2.0 * d1;
    SymplecticConstants k{{c1, c2, c2, c1}, {d1, d2, d1, 0.0}};
    if (2.0 * c1 + 2.0 * c2 != 1.0 || 2.0 * d1 + d2 != 1.0)
      throw NumericError("SymplecticConstants: consistency sums are not exactly 1");
    if (std::abs(c2 - (1.0 - cbrt2) / (2.0 * denom)) > 1e-15 ||
        std::abs(d2 - (-cbrt2 / denom)) > 1e-15)
      throw NumericError("SymplecticConstants: derived constants drifted from closed forms");
    return k;
  }
};

enum class Scheme { Symplectic4, Leapfrog, Rk4 };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::Symplectic4: return "symplectic4";
    case Scheme::Leapfrog: return "leapfrog";
    case Scheme::Rk4: return "rk4";
  }
  return "?";
}

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "symplectic4") return Scheme::Symplectic4;
  if (s == "leapfrog") return Scheme::Leapfrog;
  if (s == "rk4") return Scheme::Rk4;
  throw ConfigError("unknown integrator '" + s + "' (expected symplectic4|leapfrog|rk4)");
}

struct IntegratorConfig {
  double eps = 0.01;
  Scheme scheme = Scheme::Symplectic4;
};

// Sub-step count for an interval under tolerance eps.
inline int step_count(double t0, double t1, double eps) {
  if (!(t1 > t0)) throw std::invalid_argument("integrate: t1 must exceed t0");
  if (!(eps > 0.0)) throw std::invalid_argument("integrate: eps must be positive");
  return std::max(1, static_cast<int>(std::ceil((t1 - t0) / (4.0 * eps))));
}

namespace detail {

template <class S>
void check_stage_finite(const std::vector<S>& q, const std::vector<S>& p, int stage, const char* scheme) {
  for (const S& v : q)
    if (!std::isfinite(value_of(v)))
      throw NumericError(std::string(scheme) + ": non-finite position at stage " + std::to_string(stage));
  for (const S& v : p)
    if (!std::isfinite(value_of(v)))
      throw NumericError(std::string(scheme) + ": non-finite momentum at stage " + std::to_string(stage));
}

}  // namespace detail

// One Forest-Ruth step of size h, in place. Each stage drifts q along
// dT/dp, then kicks p with dV/dq evaluated at the updated position (the
// update order that makes the stage map symplectic). gbuf is scratch.
template <class S, class GradV, class GradT>
void symplectic4_step_inplace(GradV&& grad_v, GradT&& grad_t, std::vector<S>& q, std::vector<S>& p,
                              double h, std::vector<S>& gbuf) {
  static const SymplecticConstants k = SymplecticConstants::forest_ruth();
  const std::size_t n = q.size();
  for (int j = 0; j < 4; ++j) {
    grad_t(p, gbuf);
    for (std::size_t i = 0; i < n; ++i) q[i] = q[i] + (k.c[j] * h) * gbuf[i];
    if (k.d[j] != 0.0) {
      grad_v(q, gbuf);
      for (std::size_t i = 0; i < n; ++i) p[i] = p[i] - (k.d[j] * h) * gbuf[i];
    }
    detail::check_stage_finite(q, p, j + 1, "symplectic4");
  }
}

template <class S, class GradV, class GradT>
std::pair<std::vector<S>, std::vector<S>> symplectic4_step(GradV&& grad_v, GradT&& grad_t,
                                                           std::vector<S> q, std::vector<S> p, double h) {
  if (h == 0.0) throw std::invalid_argument("symplectic4_step: h must be nonzero");
  std::vector<S> gbuf(q.size());
  symplectic4_step_inplace(grad_v, grad_t, q, p, h, gbuf);
  return {std::move(q), std::move(p)};
}

// Kick-drift-kick leapfrog step.
template <class S, class GradV, class GradT>
void leapfrog_step_inplace(GradV&& grad_v, GradT&& grad_t, std::vector<S>& q, std::vector<S>& p,
                           double h, std::vector<S>& gbuf) {
  const std::size_t n = q.size();
  grad_v(q, gbuf);
  for (std::size_t i = 0; i < n; ++i) p[i] = p[i] - (0.5 * h) * gbuf[i];
  grad_t(p, gbuf);
  for (std::size_t i = 0; i < n; ++i) q[i] = q[i] + h * gbuf[i];
  grad_v(q, gbuf);
  for (std::size_t i = 0; i < n; ++i) p[i] = p[i] - (0.5 * h) * gbuf[i];
  detail::check_stage_finite(q, p, 1, "leapfrog");
}

// Classical RK4 on the combined Hamilton vector field
// (dq/dt, dp/dt) = (dT/dp, -dV/dq).
template <class S, class GradV, class GradT>
void rk4_step_inplace(GradV&& grad_v, GradT&& grad_t, std::vector<S>& q, std::vector<S>& p,
                      double h) {
  const std::size_t n = q.size();
  std::vector<S> kq1(n), kp1(n), kq2(n), kp2(n), kq3(n), kp3(n), kq4(n), kp4(n), tq(n), tp(n);
  auto eval = [&](const std::vector<S>& qq, const std::vector<S>& pp, std::vector<S>& outq,
                  std::vector<S>& outp) {
    grad_t(pp, outq);
    grad_v(qq, outp);
    for (std::size_t i = 0; i < n; ++i) outp[i] = -outp[i];
  };
  eval(q, p, kq1, kp1);
  for (std::size_t i = 0; i < n; ++i) {
    tq[i] = q[i] + (0.5 * h) * kq1[i];
    tp[i] = p[i] + (0.5 * h) * kp1[i];
  }
  eval(tq, tp, kq2, kp2);
  for (std::size_t i = 0; i < n; ++i) {
    tq[i] = q[i] + (0.5 * h) * kq2[i];
    tp[i] = p[i] + (0.5 * h) * kp2[i];
  }
  eval(tq, tp, kq3, kp3);
  for (std::size_t i = 0; i < n; ++i) {
    tq[i] = q[i] + h * kq3[i];
    tp[i] = p[i] + h * kp3[i];
  }
  eval(tq, tp, kq4, kp4);
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = q[i] + (h / 6.0) * (kq1[i] + 2.0 * kq2[i] + 2.0 * kq3[i] + kq4[i]);
    p[i] = p[i] + (h / 6.0) * (kp1[i] + 2.0 * kp2[i] + 2.0 * kp3[i] + kp4[i]);
  }
  detail::check_stage_finite(q, p, 1, "rk4");
}

template <class S, class GradV, class GradT>
std::pair<std::vector<S>, std::vector<S>> integrate_fixed_steps(Scheme scheme, GradV&& grad_v,
                                                                GradT&& grad_t, std::vector<S> q,
                                                                std::vector<S> p, double t0, double t1,
                                                                int steps) {
  if (steps < 1) throw std::invalid_argument("integrate_fixed_steps: steps must be >= 1");
  const double h = (t1 - t0) / steps;
  std::vector<S> gbuf(q.size());
  for (int s = 0; s < steps; ++s) {
    switch (scheme) {
      case Scheme::Symplectic4: symplectic4_step_inplace(grad_v, grad_t, q, p, h, gbuf); break;
      case Scheme::Leapfrog: leapfrog_step_inplace(grad_v, grad_t, q, p, h, gbuf); break;
      case Scheme::Rk4: rk4_step_inplace(grad_v, grad_t, q, p, h); break;
    }
  }
  return {std::move(q), std::move(p)};
}

template <class S, class GradV, class GradT>
std::pair<std::vector<S>, std::vector<S>> integrate(Scheme scheme, GradV&& grad_v, GradT&& grad_t,
                                                    std::vector<S> q0, std::vector<S> p0, double t0,
                                                    double t1, double eps) {
  int steps = step_count(t0, t1, eps);
  return integrate_fixed_steps(scheme, grad_v, grad_t, std::move(q0), std::move(p0), t0, t1, steps);
}

template <class S, class GradV, class GradT>
std::pair<std::vector<S>, std::vector<S>> symplectic4_integrate(GradV&& grad_v, GradT&& grad_t,
                                                                std::vector<S> q0, std::vector<S> p0,
                                                                double t0, double t1, double eps) {
  return integrate(Scheme::Symplectic4, grad_v, grad_t, std::move(q0), std::move(p0), t0, t1, eps);
}

template <class S, class GradV, class GradT>
std::pair<std::vector<S>, std::vector<S>> leapfrog_integrate(GradV&& grad_v, GradT&& grad_t,
                                                             std::vector<S> q0, std::vector<S> p0,
                                                             double t0, double t1, double eps) {
  return integrate(Scheme::Leapfrog, grad_v, grad_t, std::move(q0), std::move(p0), t0, t1, eps);
}

template <class S, class GradV, class GradT>
std::pair<std::vector<S>, std::vector<S>> rk4_integrate(GradV&& grad_v, GradT&& grad_t,
                                                        std::vector<S> q0, std::vector<S> p0, double t0,
                                                        double t1, double eps) {
  return integrate(Scheme::Rk4, grad_v, grad_t, std::move(q0), std::move(p0), t0, t1, eps);
}

// States at t0, t0+dt, ..., t0+(n_states-1)*dt.
template <class GradV, class GradT>
Trajectory rollout(Scheme scheme, GradV&& grad_v, GradT&& grad_t, const PhaseState& start, double t0,
                   double dt, int n_states, double eps) {
  if (n_states < 1) throw std::invalid_argument("rollout: need at least one state");
  Trajectory traj;
  traj.push(t0, start);
  std::vector<double> q = start.q, p = start.p;
  for (int i = 1; i < n_states; ++i) {
    auto [q1, p1] = integrate(scheme, grad_v, grad_t, std::move(q), std::move(p), t0 + (i - 1) * dt,
                              t0 + i * dt, eps);
    q = std::move(q1);
    p = std::move(p1);
    traj.push(t0 + i * dt, PhaseState(q, p));
  }
  return traj;
}

// Least-squares slope of log(endpoint error) vs log(h) over halved step
// sizes, measured against a reference run at the finest h divided by 100.
template <class GradV, class GradT>
double convergence_order(Scheme scheme, GradV&& grad_v, GradT&& grad_t, const PhaseState& start,
                         double t0, double t1, const std::vector<double>& h_values) {
  if (h_values.size() < 3)
    throw std::invalid_argument("convergence_order: need at least 3 step sizes");
  double h_min = *std::min_element(h_values.begin(), h_values.end());
  int ref_steps = static_cast<int>(std::ceil((t1 - t0) / (h_min / 100.0)));
  auto [qr, pr] = integrate_fixed_steps(scheme, grad_v, grad_t, start.q, start.p, t0, t1, ref_steps);
  PhaseState ref(qr, pr);

  std::vector<double> xs, ys;
  for (double h : h_values) {
    int steps = std::max(1, static_cast<int>(std::llround((t1 - t0) / h)));
    auto [q, p] = integrate_fixed_steps(scheme, grad_v, grad_t, start.q, start.p, t0, t1, steps);
    double err = l1_distance(PhaseState(q, p), ref);
    if (err <= 0.0)
      throw NumericError("convergence_order: zero error at h=" + std::to_string(h) +
                         "; step sizes too small to resolve");
    xs.push_back(std::log(h));
    ys.push_back(std::log(err));
  }
  double n = static_cast<double>(xs.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace ssinn
