// Ground-truth benchmark systems: Henon-Heiles, nonlinearly coupled
// oscillators, a five-particle mass-spring chain, and a pendulum. Each
// provides its Hamiltonian, analytic gradient fields, and the initial-state
// sampler used for dataset generation.
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ssinn/errors.hpp"
#include "ssinn/integrators.hpp"
#include "ssinn/model.hpp"
#include "ssinn/phase.hpp"
#include "ssinn/rng.hpp"

namespace ssinn {

// H = (px^2 + py^2 + qx^2 + qy^2)/2 + qx^2 qy - qy^3/3. Chaotic for total
// energy in (1/12, 1/6); bounded motion inside the triangular equipotential
// region with -1 < qx < 1, -0.5 < qy < 1.
struct HenonHeiles {
  static constexpr int dim = 2;

  double potential_at(double qx, double qy) const {
    return 0.5 * (qx * qx + qy * qy) + qx * qx * qy - qy * qy * qy / 3.0;
  }
  double energy(const PhaseState& s) const {
    return 0.5 * (s.p[0] * s.p[0] + s.p[1] * s.p[1]) + potential_at(s.q[0], s.q[1]);
  }
  void grad_v(const std::vector<double>& q, std::vector<double>& out) const {
    out.assign(2, 0.0);
    out[0] = q[0] + 2.0 * q[0] * q[1];
    out[1] = q[1] + q[0] * q[0] - q[1] * q[1];
  }
  void grad_t(const std::vector<double>& p, std::vector<double>& out) const { out = p; }

  // Rejection sampling: position uniform in the stated box restricted to the
  // sub-1/6 equipotential region, then momentum magnitude set to hit a total
  // energy drawn uniformly from the chaotic band (1/12, 1/6).
  PhaseState sample_initial(Rng& rng) const {
    for (int attempt = 0; attempt < 100000; ++attempt) {
      double qx = rng.uniform(-1.0, 1.0);
      double qy = rng.uniform(-0.5, 1.0);
      double v = potential_at(qx, qy);
      if (v >= 1.0 / 6.0) continue;
      double target = rng.uniform(1.0 / 12.0, 1.0 / 6.0);
      if (v > target) continue;
      double r = std::sqrt(2.0 * (target - v));
      double phi = rng.uniform(0.0, 6.283185307179586476925286766559);
      return PhaseState({qx, qy}, {r * std::cos(phi), r * std::sin(phi)});
    }
    throw NumericError("HenonHeiles sampler: rejection limit exceeded (bug)");
  }
};

// H = (p1^2 + p2^2 + q1^2 + q2^2 + k (q1 q2)^2)/2; chaotic at k = 1.
struct CoupledOscillator {
  static constexpr int dim = 2;
  double k = 1.0;

  double energy(const PhaseState& s) const {
    double c = s.q[0] * s.q[1];
    return 0.5 * (s.p[0] * s.p[0] + s.p[1] * s.p[1] + s.q[0] * s.q[0] + s.q[1] * s.q[1] + k * c * c);
  }
  void grad_v(const std::vector<double>& q, std::vector<double>& out) const {
    out.assign(2, 0.0);
    out[0] = q[0] + k * q[0] * q[1] * q[1];
    out[1] = q[1] + k * q[0] * q[0] * q[1];
  }
  void grad_t(const std::vector<double>& p, std::vector<double>& out) const { out = p; }

  PhaseState sample_initial(Rng& rng) const {
    std::vector<double> q(2), p(2);
    for (double& x : q) x = rng.uniform(-1.0, 1.0);
    for (double& x : p) x = rng.uniform(-1.0, 1.0);
    return PhaseState(std::move(q), std::move(p));
  }
};

// Five masses, six springs anchored to walls at 0 and L:
// V = k1/2 q1^2 + sum_i k_i/2 (q_i - q_{i-1})^2 + k6/2 (L - q5)^2,
// T = sum_i p_i^2 / (2 m_i).
struct MassSpring {
  static constexpr int dim = 5;
  std::array<double, 5> masses{1, 1, 1, 1, 1};
  std::array<double, 6> springs{0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  double length = 1.0;

  double energy(const PhaseState& s) const {
    double v = 0.5 * springs[0] * s.q[0] * s.q[0];
    for (int i = 1; i < 5; ++i) {
      double d = s.q[i] - s.q[i - 1];
      v += 0.5 * springs[i] * d * d;
    }
    double dl = length - s.q[4];
    v += 0.5 * springs[5] * dl * dl;
    double t = 0.0;
    for (int i = 0; i < 5; ++i) t += s.p[i] * s.p[i] / (2.0 * masses[i]);
    return v + t;
  }
  void grad_v(const std::vector<double>& q, std::vector<double>& out) const {
    out.assign(5, 0.0);
    out[0] = springs[0] * q[0] - springs[1] * (q[1] - q[0]);
    for (int i = 1; i < 4; ++i)
      out[i] = springs[i] * (q[i] - q[i - 1]) - springs[i + 1] * (q[i + 1] - q[i]);
    out[4] = springs[4] * (q[4] - q[3]) - springs[5] * (length - q[4]);
  }
  void grad_t(const std::vector<double>& p, std::vector<double>& out) const {
    out.assign(5, 0.0);
    for (int i = 0; i < 5; ++i) out[i] = p[i] / masses[i];
  }

  // Positions evenly spaced on (0, L); momenta uniform in (-0.1, 0.1).
  PhaseState sample_initial(Rng& rng) const {
    std::vector<double> q(5), p(5);
    for (int i = 0; i < 5; ++i) q[i] = length * (i + 1) / 6.0;
    for (double& x : p) x = rng.uniform(-0.1, 0.1);
    return PhaseState(std::move(q), std::move(p));
  }
};

// H = p^2/(2 m l^2) - m g l cos(q) + m g l. The +mgl constant keeps H >= 0
// but plays no role in the time evolution.
struct Pendulum {
  static constexpr int dim = 1;
  double m = 2.0, g = 1.0, l = 1.0;

  double energy(const PhaseState& s) const {
    return s.p[0] * s.p[0] / (2.0 * m * l * l) - m * g * l * std::cos(s.q[0]) + m * g * l;
  }
  void grad_v(const std::vector<double>& q, std::vector<double>& out) const {
    out.assign(1, m * g * l * std::sin(q[0]));
  }
  void grad_t(const std::vector<double>& p, std::vector<double>& out) const {
    out.assign(1, p[0] / (m * l * l));
  }

  // The benchmark uses one fixed release point.
  PhaseState sample_initial(Rng&) const { return PhaseState({1.4}, {0.0}); }
};

using System = std::variant<HenonHeiles, CoupledOscillator, MassSpring, Pendulum>;

inline int dim(const System& sys) {
  return std::visit([](const auto& s) { return static_cast<int>(s.dim); }, sys);
}

inline std::string kind_name(const System& sys) {
  struct V {
    std::string operator()(const HenonHeiles&) const { return "henon"; }
    std::string operator()(const CoupledOscillator&) const { return "oscillator"; }
    std::string operator()(const MassSpring&) const { return "spring"; }
    std::string operator()(const Pendulum&) const { return "pendulum"; }
  };
  return std::visit(V{}, sys);
}

inline double energy(const System& sys, const PhaseState& s) {
  if (dim(sys) != s.dim()) throw std::invalid_argument("energy: state dimension mismatch");
  return std::visit([&](const auto& t) { return t.energy(s); }, sys);
}

inline GradientFields truth_fields(const System& sys) {
  return std::visit(
      [](const auto& s) {
        GradientFields f;
        f.grad_v = [s](const std::vector<double>& q, std::vector<double>& out) { s.grad_v(q, out); };
        f.grad_t = [s](const std::vector<double>& p, std::vector<double>& out) { s.grad_t(p, out); };
        return f;
      },
      sys);
}

inline PhaseState sample_initial_state(const System& sys, Rng& rng) {
  return std::visit([&](const auto& s) { return s.sample_initial(rng); }, sys);
}

// Mass-spring draws masses from (1,5) and spring constants from (0.05,0.4);
// the other systems have fixed benchmark parameters.
inline System sample_system_params(const std::string& kind, Rng& rng) {
  if (kind == "henon") return HenonHeiles{};
  if (kind == "oscillator") return CoupledOscillator{1.0};
  if (kind == "pendulum") return Pendulum{2.0, 1.0, 1.0};
  if (kind == "spring") {
    MassSpring s;
    for (double& m : s.masses) m = rng.uniform(1.0, 5.0);
    for (double& k : s.springs) k = rng.uniform(0.05, 0.4);
    s.length = 1.0;
    return s;
  }
  throw ConfigError("unknown system kind '" + kind + "'");
}

// The governing equation expanded over canonical monomial descriptions
// (q/p prefixes). Constant terms are omitted: they cannot influence the
// dynamics. The pendulum's potential appears as the sine term with
// amplitude -mgl (true inner parameters a=0, b=pi/2).
inline SymbolicEquation truth_equation(const System& sys) {
  SymbolicEquation eq;
  auto add = [&](double c, const std::string& d) { eq.terms.push_back({c, d}); };
  if (const auto* hh = std::get_if<HenonHeiles>(&sys)) {
    (void)hh;
    add(0.5, "q1^2");
    add(0.5, "q2^2");
    add(1.0, "q1^2*q2");
    add(-1.0 / 3.0, "q2^3");
    add(0.5, "p1^2");
    add(0.5, "p2^2");
  } else if (const auto* osc = std::get_if<CoupledOscillator>(&sys)) {
    add(0.5, "q1^2");
    add(0.5, "q2^2");
    add(osc->k / 2.0, "q1^2*q2^2");
    add(0.5, "p1^2");
    add(0.5, "p2^2");
  } else if (const auto* ms = std::get_if<MassSpring>(&sys)) {
    for (int i = 0; i < 5; ++i) {
      double c = 0.5 * (ms->springs[i] + ms->springs[i + 1]);
      add(c, "q" + std::to_string(i + 1) + "^2");
    }
    for (int i = 0; i < 4; ++i)
      add(-ms->springs[i + 1], "q" + std::to_string(i + 1) + "*q" + std::to_string(i + 2));
    add(-ms->springs[5] * ms->length, "q5");
    for (int i = 0; i < 5; ++i) add(1.0 / (2.0 * ms->masses[i]), "p" + std::to_string(i + 1) + "^2");
  } else {
    const auto& pen = std::get<Pendulum>(sys);
    add(1.0 / (2.0 * pen.m * pen.l * pen.l), "p1^2");
    add(-pen.m * pen.g * pen.l, "sin(q1+a*q1+b)");
  }
  std::stable_sort(eq.terms.begin(), eq.terms.end(),
                   [](const auto& a, const auto& b) { return std::abs(a.coef) > std::abs(b.coef); });
  return eq;
}

// Installs a system's exact coefficients into bases that can express them;
// used for oracle models in tests and evaluation floors.
inline SparseHamiltonian truth_model(const System& sys, const FunctionBasis& v_basis,
                                     const FunctionBasis& t_basis) {
  SparseHamiltonian m = make_model(v_basis, t_basis);
  for (double& c : m.theta1) c = 0.0;
  for (double& c : m.theta2) c = 0.0;
  SymbolicEquation truth = truth_equation(sys);
  if (std::holds_alternative<Pendulum>(sys)) {
    const auto& pen = std::get<Pendulum>(sys);
    for (std::size_t k = 0; k < m.v_basis.terms().size(); ++k)
      if (m.v_basis.terms()[k].kind == BasisTerm::Kind::ParametricSine) {
        m.theta1[k] = -pen.m * pen.g * pen.l;
        m.v_inner = {0.0, 1.5707963267948966};
      }
    for (std::size_t k = 0; k < m.t_basis.terms().size(); ++k)
      if (m.t_basis.terms()[k].description == "p1^2") m.theta2[k] = 1.0 / (2.0 * pen.m * pen.l * pen.l);
    return m;
  }
  for (const auto& t : truth.terms) {
    bool found = false;
    for (std::size_t k = 0; k < m.v_basis.terms().size() && !found; ++k)
      if (m.v_basis.terms()[k].description == t.description) {
        m.theta1[k] = t.coef;
        found = true;
      }
    for (std::size_t k = 0; k < m.t_basis.terms().size() && !found; ++k)
      if (m.t_basis.terms()[k].description == t.description) {
        m.theta2[k] = t.coef;
        found = true;
      }
    if (!found)
      throw std::invalid_argument("truth_model: basis cannot express term '" + t.description + "'");
  }
  return m;
}

}  // namespace ssinn
