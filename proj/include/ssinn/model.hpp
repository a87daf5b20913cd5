// The learned object: two coefficient vectors over function bases
// parameterizing potential energy V(q) and kinetic energy T(p), with energy
// evaluation, gradient-field extraction for the integrators, and symbolic
// equation export.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssinn/basis.hpp"
#include "ssinn/integrators.hpp"
#include "ssinn/rng.hpp"
#include "ssinn/tape.hpp"

namespace ssinn {

namespace detail {

template <class S>
S scalar_of(double v) {
  if constexpr (std::is_same_v<S, double>)
    return v;
  else
    return make_constant(v);
}

}  // namespace detail

// Energy of one network: sum_k coef_k * phi_k(x). Generic over the scalar
// type of both parameters and state, so the same code serves plain
// evaluation and the recorded training pass.
template <class S>
S net_energy(const FunctionBasis& basis, const std::vector<S>& coef, const std::vector<S>& inner,
             const std::vector<S>& x) {
  std::vector<S> terms;
  basis.eval_terms(x, inner, terms);
  if (coef.size() != terms.size())
    throw std::invalid_argument("net_energy: coefficient count does not match basis");
  S acc = detail::scalar_of<S>(0.0);
  bool first = true;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    S contrib = coef[k] * terms[k];
    acc = first ? contrib : acc + contrib;
    first = false;
  }
  return acc;
}

// Gradient of one network's energy with respect to state:
// out_i = sum_k coef_k * d phi_k / d x_i. Terms that cannot depend on x_i
// (constants, foreign-variable sines) are skipped outright.
template <class S>
void net_gradient(const FunctionBasis& basis, const std::vector<S>& coef, const std::vector<S>& inner,
                  const std::vector<S>& x, std::vector<S>& out) {
  const auto& terms = basis.terms();
  if (coef.size() != terms.size())
    throw std::invalid_argument("net_gradient: coefficient count does not match basis");
  out.assign(x.size(), detail::scalar_of<S>(0.0));
  std::vector<bool> touched(x.size(), false);
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const BasisTerm& t = terms[k];
    if (t.kind == BasisTerm::Kind::Monomial) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (t.exponents[i] == 0) continue;
        S contrib = coef[k] * basis.term_partial(t, x, inner, static_cast<int>(i));
        out[i] = touched[i] ? out[i] + contrib : contrib;
        touched[i] = true;
      }
    } else {
      int i = t.sine_var;
      S contrib = coef[k] * basis.term_partial(t, x, inner, i);
      out[i] = touched[i] ? out[i] + contrib : contrib;
      touched[i] = true;
    }
  }
}

// Two sparse networks V_theta1(q), T_theta2(p) plus the sine terms' inner
// parameters when the basis carries them.
struct SparseHamiltonian {
  FunctionBasis v_basis;
  FunctionBasis t_basis;
  std::vector<double> theta1, theta2;   // one coefficient per basis term
  std::vector<double> v_inner, t_inner; // sine (a, b) per network, possibly empty

  void validate() const {
    if (theta1.size() != v_basis.term_count() || theta2.size() != t_basis.term_count())
      throw std::invalid_argument("SparseHamiltonian: coefficient/basis size mismatch");
    if (static_cast<int>(v_inner.size()) != v_basis.num_inner_params() ||
        static_cast<int>(t_inner.size()) != t_basis.num_inner_params())
      throw std::invalid_argument("SparseHamiltonian: inner parameter count mismatch");
    auto finite = [](const std::vector<double>& v) {
      for (double x : v)
        if (!std::isfinite(x)) return false;
      return true;
    };
    if (!finite(theta1) || !finite(theta2) || !finite(v_inner) || !finite(t_inner))
      throw std::invalid_argument("SparseHamiltonian: non-finite coefficient");
  }
};

// Zero-initialized model. Sine amplitudes start at 0.1 instead of 0: with a
// zero amplitude the inner sine parameters receive no gradient, so training
// could never leave that stationary point.
inline SparseHamiltonian make_model(FunctionBasis v_basis, FunctionBasis t_basis) {
  SparseHamiltonian m;
  m.theta1.assign(v_basis.term_count(), 0.0);
  m.theta2.assign(t_basis.term_count(), 0.0);
  for (std::size_t k = 0; k < v_basis.terms().size(); ++k)
    if (v_basis.terms()[k].kind == BasisTerm::Kind::ParametricSine) m.theta1[k] = 0.1;
  for (std::size_t k = 0; k < t_basis.terms().size(); ++k)
    if (t_basis.terms()[k].kind == BasisTerm::Kind::ParametricSine) m.theta2[k] = 0.1;
  m.v_inner.assign(v_basis.num_inner_params(), 0.0);
  m.t_inner.assign(t_basis.num_inner_params(), 0.0);
  m.v_basis = std::move(v_basis);
  m.t_basis = std::move(t_basis);
  return m;
}

// Seeded uniform(-0.01, 0.01) coefficients for the non-convex trig case.
inline SparseHamiltonian make_model_random(FunctionBasis v_basis, FunctionBasis t_basis,
                                           std::uint64_t seed) {
  SparseHamiltonian m = make_model(std::move(v_basis), std::move(t_basis));
  Rng rng(seed);
  for (double& c : m.theta1) c = rng.uniform(-0.01, 0.01);
  for (double& c : m.theta2) c = rng.uniform(-0.01, 0.01);
  for (std::size_t k = 0; k < m.v_basis.terms().size(); ++k)
    if (m.v_basis.terms()[k].kind == BasisTerm::Kind::ParametricSine) m.theta1[k] = 0.1;
  for (std::size_t k = 0; k < m.t_basis.terms().size(); ++k)
    if (m.t_basis.terms()[k].kind == BasisTerm::Kind::ParametricSine) m.theta2[k] = 0.1;
  return m;
}

inline std::size_t param_count(const SparseHamiltonian& m) {
  return m.theta1.size() + m.v_inner.size() + m.theta2.size() + m.t_inner.size();
}

// V and T with parameters held constant; gradients (if S = DiffScalar with
// tracked state) flow to the state only.
template <class S>
S potential(const SparseHamiltonian& m, const std::vector<S>& q) {
  std::vector<S> coef, inner;
  for (double c : m.theta1) coef.push_back(detail::scalar_of<S>(c));
  for (double c : m.v_inner) inner.push_back(detail::scalar_of<S>(c));
  return net_energy(m.v_basis, coef, inner, q);
}

template <class S>
S kinetic(const SparseHamiltonian& m, const std::vector<S>& p) {
  std::vector<S> coef, inner;
  for (double c : m.theta2) coef.push_back(detail::scalar_of<S>(c));
  for (double c : m.t_inner) inner.push_back(detail::scalar_of<S>(c));
  return net_energy(m.t_basis, coef, inner, p);
}

// Fast non-tape gradient fields for rollouts and evaluation. Copies the
// model so the closures own their data.
inline GradientFields grad_fields(const SparseHamiltonian& m) {
  auto model = std::make_shared<SparseHamiltonian>(m);
  GradientFields f;
  f.grad_v = [model](const std::vector<double>& q, std::vector<double>& out) {
    net_gradient(model->v_basis, model->theta1, model->v_inner, q, out);
  };
  f.grad_t = [model](const std::vector<double>& p, std::vector<double>& out) {
    net_gradient(model->t_basis, model->theta2, model->t_inner, p, out);
  };
  return f;
}

// Model parameters tracked on a tape, in the canonical flat order
// [theta1, v_inner, theta2, t_inner]. One binding per recorded evaluation.
struct BoundModel {
  const SparseHamiltonian* model = nullptr;
  std::vector<DiffScalar> theta1, v_inner, theta2, t_inner;

  static BoundModel bind(Tape& tape, const SparseHamiltonian& m) {
    BoundModel b;
    b.model = &m;
    auto track_all = [&tape](const std::vector<double>& src, std::vector<DiffScalar>& dst) {
      dst.reserve(src.size());
      for (double v : src) dst.push_back(tape.track(v));
    };
    track_all(m.theta1, b.theta1);
    track_all(m.v_inner, b.v_inner);
    track_all(m.theta2, b.theta2);
    track_all(m.t_inner, b.t_inner);
    return b;
  }

  std::size_t size() const {
    return theta1.size() + v_inner.size() + theta2.size() + t_inner.size();
  }

  DiffScalar potential(const std::vector<DiffScalar>& q) const {
    return net_energy(model->v_basis, theta1, v_inner, q);
  }
  DiffScalar kinetic(const std::vector<DiffScalar>& p) const {
    return net_energy(model->t_basis, theta2, t_inner, p);
  }
  void grad_v(const std::vector<DiffScalar>& q, std::vector<DiffScalar>& out) const {
    net_gradient(model->v_basis, theta1, v_inner, q, out);
  }
  void grad_t(const std::vector<DiffScalar>& p, std::vector<DiffScalar>& out) const {
    net_gradient(model->t_basis, theta2, t_inner, p, out);
  }
};

// ---------------------------------------------------------------------------
// Symbolic export and recovery reporting.

struct SymbolicEquation {
  struct Term {
    double coef;
    std::string description;
  };
  std::vector<Term> terms;      // sorted by descending |coef|
  double omitted_below = 0.0;   // display threshold used at extraction
};

// All terms of both networks with |coef| >= threshold (exact zeros always
// omitted). Thresholding is display-only; the model itself is untouched.
inline SymbolicEquation extract_equation(const SparseHamiltonian& m, double display_threshold) {
  if (display_threshold < 0.0)
    throw std::invalid_argument("extract_equation: threshold must be >= 0");
  SymbolicEquation eq;
  eq.omitted_below = display_threshold;
  auto emit = [&](const FunctionBasis& basis, const std::vector<double>& coef) {
    for (std::size_t k = 0; k < basis.terms().size(); ++k)
      if (coef[k] != 0.0 && std::abs(coef[k]) >= display_threshold)
        eq.terms.push_back({coef[k], basis.terms()[k].description});
  };
  emit(m.v_basis, m.theta1);
  emit(m.t_basis, m.theta2);
  std::stable_sort(eq.terms.begin(), eq.terms.end(),
                   [](const auto& a, const auto& b) { return std::abs(a.coef) > std::abs(b.coef); });
  return eq;
}

// Installs equation coefficients into a copy of the prototype (terms absent
// from the equation become 0). Inverse of extract_equation at threshold 0.
inline SparseHamiltonian with_coefficients(const SparseHamiltonian& proto, const SymbolicEquation& eq) {
  SparseHamiltonian m = proto;
  std::fill(m.theta1.begin(), m.theta1.end(), 0.0);
  std::fill(m.theta2.begin(), m.theta2.end(), 0.0);
  for (const auto& term : eq.terms) {
    bool found = false;
    for (std::size_t k = 0; k < m.v_basis.terms().size() && !found; ++k)
      if (m.v_basis.terms()[k].description == term.description) {
        m.theta1[k] = term.coef;
        found = true;
      }
    for (std::size_t k = 0; k < m.t_basis.terms().size() && !found; ++k)
      if (m.t_basis.terms()[k].description == term.description) {
        m.theta2[k] = term.coef;
        found = true;
      }
    if (!found)
      throw std::invalid_argument("with_coefficients: term '" + term.description +
                                  "' is not in the model's bases");
  }
  return m;
}

// Human-readable rendering; sine terms appear with their numeric inner
// parameters substituted.
inline std::string render_equation(const SparseHamiltonian& m, double display_threshold) {
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };
  auto render_net = [&](const char* label, const FunctionBasis& basis,
                        const std::vector<double>& coef, const std::vector<double>& inner) {
    std::string out = std::string(label) + " = ";
    std::vector<std::pair<double, std::string>> parts;
    for (std::size_t k = 0; k < basis.terms().size(); ++k) {
      const BasisTerm& t = basis.terms()[k];
      if (coef[k] == 0.0 || std::abs(coef[k]) < display_threshold) continue;
      std::string body = t.description;
      if (t.kind == BasisTerm::Kind::ParametricSine) {
        std::string v = basis.var_prefix() + std::to_string(t.sine_var + 1);
        body = "sin(" + v + " + " + fmt(inner[0]) + "*" + v + " + " + fmt(inner[1]) + ")";
      }
      parts.emplace_back(coef[k], body);
    }
    std::stable_sort(parts.begin(), parts.end(),
                     [](const auto& a, const auto& b) { return std::abs(a.first) > std::abs(b.first); });
    if (parts.empty()) return out + "0";
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i > 0) out += parts[i].first < 0 ? " - " : " + ";
      else if (parts[i].first < 0) out += "-";
      out += fmt(std::abs(parts[i].first)) + "*" + parts[i].second;
    }
    return out;
  };
  return render_net("V(q)", m.v_basis, m.theta1, m.v_inner) + "\n" +
         render_net("T(p)", m.t_basis, m.theta2, m.t_inner) + "\n";
}

struct RecoveryReport {
  struct TermError {
    std::string description;
    double true_coef;
    double learned_coef;  // 0 when the term is missing from the basis
    double abs_error;
    bool in_basis;
  };
  std::vector<TermError> true_terms;
  double max_true_error = 0.0;    // over true-support terms present in the basis
  double max_spurious_abs = 0.0;  // largest |coef| outside the true support
  double support_precision = 1.0;
  double support_recall = 1.0;
  int unmatched_true_terms = 0;   // true terms the basis cannot express
};

// Compares learned coefficients against a known governing equation.
// Support precision/recall classify |coef| >= support_threshold against the
// truth's support.
inline RecoveryReport coefficient_recovery(const SparseHamiltonian& m, const SymbolicEquation& truth,
                                           double support_threshold = 1e-3) {
  RecoveryReport r;
  auto find_coef = [&](const std::string& desc, double& out) {
    for (std::size_t k = 0; k < m.v_basis.terms().size(); ++k)
      if (m.v_basis.terms()[k].description == desc) {
        out = m.theta1[k];
        return true;
      }
    for (std::size_t k = 0; k < m.t_basis.terms().size(); ++k)
      if (m.t_basis.terms()[k].description == desc) {
        out = m.theta2[k];
        return true;
      }
    return false;
  };

  int detected_true = 0;
  for (const auto& t : truth.terms) {
    double learned = 0.0;
    bool in_basis = find_coef(t.description, learned);
    double err = std::abs(learned - t.coef);
    r.true_terms.push_back({t.description, t.coef, learned, err, in_basis});
    if (in_basis) r.max_true_error = std::max(r.max_true_error, err);
    else ++r.unmatched_true_terms;
    if (in_basis && std::abs(learned) >= support_threshold) ++detected_true;
  }

  auto is_true_term = [&](const std::string& desc) {
    for (const auto& t : truth.terms)
      if (t.description == desc) return true;
    return false;
  };
  int detected_total = 0;
  auto scan_spurious = [&](const FunctionBasis& basis, const std::vector<double>& coef) {
    for (std::size_t k = 0; k < basis.terms().size(); ++k) {
      bool truthful = is_true_term(basis.terms()[k].description);
      if (!truthful) r.max_spurious_abs = std::max(r.max_spurious_abs, std::abs(coef[k]));
      if (std::abs(coef[k]) >= support_threshold) ++detected_total;
    }
  };
  scan_spurious(m.v_basis, m.theta1);
  scan_spurious(m.t_basis, m.theta2);

  r.support_precision = detected_total == 0 ? 1.0 : static_cast<double>(detected_true) / detected_total;
  r.support_recall = truth.terms.empty() ? 1.0 : static_cast<double>(detected_true) / truth.terms.size();
  return r;
}

}  // namespace ssinn
