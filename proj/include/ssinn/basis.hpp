// Function search spaces: monomial bases (tensor-product / total-degree) and
// the trig-augmented single-variable basis with a parameterized sine term
// sin(x + a*x + b). Terms evaluate generically over double or DiffScalar, so
// the same expressions run in plain rollouts and inside the recorded forward
// pass; hand-written analytic partials provide the independent fast path.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssinn/errors.hpp"
#include "ssinn/tape.hpp"

namespace ssinn {

enum class BasisMode { TensorProduct, TotalDegree, TrigAugmented, SineOnly };

inline const char* to_string(BasisMode m) {
  switch (m) {
    case BasisMode::TensorProduct: return "tensor";
    case BasisMode::TotalDegree: return "total";
    case BasisMode::TrigAugmented: return "trig";
    case BasisMode::SineOnly: return "sine";
  }
  return "?";
}

inline BasisMode basis_mode_from_string(const std::string& s) {
  if (s == "tensor") return BasisMode::TensorProduct;
  if (s == "total") return BasisMode::TotalDegree;
  if (s == "trig") return BasisMode::TrigAugmented;
  if (s == "sine") return BasisMode::SineOnly;
  throw ConfigError("unknown basis mode '" + s + "' (expected tensor|total|trig|sine)");
}

// One differentiable term. Monomials carry one exponent per variable; the
// parametric sine carries the index of the variable it wraps (its amplitude
// is the term's coefficient, its inner parameters live with the model).
struct BasisTerm {
  enum class Kind { Monomial, ParametricSine };

  Kind kind = Kind::Monomial;
  std::vector<int> exponents;  // Monomial only, length num_vars
  int sine_var = 0;            // ParametricSine only
  std::string description;     // canonical text form, e.g. "q1^2*q2"

  int total_degree() const {
    if (kind == Kind::ParametricSine) return 1;
    return std::accumulate(exponents.begin(), exponents.end(), 0);
  }
  bool is_constant() const { return kind == Kind::Monomial && total_degree() == 0; }
};

namespace detail {

inline std::string monomial_text(const std::vector<int>& e, const std::string& prefix) {
  std::string s;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i] == 0) continue;
    if (!s.empty()) s += "*";
    s += prefix + std::to_string(i + 1);
    if (e[i] > 1) s += "^" + std::to_string(e[i]);
  }
  return s.empty() ? "1" : s;
}

inline std::string sine_text(int var, const std::string& prefix) {
  std::string v = prefix + std::to_string(var + 1);
  return "sin(" + v + "+a*" + v + "+b)";
}

// Graded-lex comparator: total degree first, then exponents compared from
// the last variable, so e.g. (2,0) < (1,1) < (0,2).
inline bool graded_lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  int da = std::accumulate(a.begin(), a.end(), 0);
  int db = std::accumulate(b.begin(), b.end(), 0);
  if (da != db) return da < db;
  for (std::size_t i = a.size(); i-- > 0;)
    if (a[i] != b[i]) return a[i] < b[i];
  return false;
}

inline int distinct_vars(const std::vector<int>& e) {
  int n = 0;
  for (int x : e) n += (x > 0);
  return n;
}

}  // namespace detail

// Ordered, immutable-after-construction term set over num_vars variables.
class FunctionBasis {
 public:
  FunctionBasis() = default;

  int num_vars() const { return num_vars_; }
  BasisMode mode() const { return mode_; }
  int degree() const { return degree_; }
  bool include_constant() const { return include_constant_; }
  int max_interaction() const { return max_interaction_; }
  const std::string& var_prefix() const { return var_prefix_; }
  const std::vector<BasisTerm>& terms() const { return terms_; }
  std::size_t term_count() const { return terms_.size(); }

  bool has_sine() const {
    for (const auto& t : terms_)
      if (t.kind == BasisTerm::Kind::ParametricSine) return true;
    return false;
  }
  // Inner trainable parameters beyond per-term coefficients: the sine's
  // (a, b) pair when present.
  int num_inner_params() const { return has_sine() ? 2 : 0; }

  // Term values phi_k(x). With S = DiffScalar and tracked inputs this is the
  // recorded forward pass; gradients flow to x and to the inner parameters.
  template <class S>
  void eval_terms(const std::vector<S>& x, const std::vector<S>& inner, std::vector<S>& out) const {
    check_args(x.size(), inner.size());
    out.clear();
    out.reserve(terms_.size());
    for (const auto& t : terms_) out.push_back(term_value(t, x, inner));
  }

  // d phi_k / d x_i as a closed-form expression (recordable when S=DiffScalar).
  template <class S>
  S term_partial(const BasisTerm& t, const std::vector<S>& x, const std::vector<S>& inner, int i) const {
    if (t.kind == BasisTerm::Kind::Monomial) {
      int e = t.exponents[i];
      if (e == 0) return scalar_from<S>(0.0);
      S prod = scalar_from<S>(1.0);
      bool first = true;
      for (std::size_t j = 0; j < t.exponents.size(); ++j) {
        int ej = t.exponents[j] - (static_cast<int>(j) == i ? 1 : 0);
        for (int r = 0; r < ej; ++r) {
          prod = first ? x[j] : prod * x[j];
          first = false;
        }
      }
      if (first) return scalar_from<S>(static_cast<double>(e));
      return prod * static_cast<double>(e);
    }
    if (t.sine_var != i) return scalar_from<S>(0.0);
    using std::cos;  // ADL picks the DiffScalar overload
    S u = x[t.sine_var] + inner[0] * x[t.sine_var] + inner[1];
    return cos(u) * (inner[0] + 1.0);
  }

  // Entry (k, i) = d phi_k / d x_i, row-major terms x vars. Analytic, no tape.
  std::vector<double> state_jacobian(const std::vector<double>& x, const std::vector<double>& inner) const {
    check_args(x.size(), inner.size());
    std::vector<double> jac(terms_.size() * x.size());
    for (std::size_t k = 0; k < terms_.size(); ++k)
      for (std::size_t i = 0; i < x.size(); ++i)
        jac[k * x.size() + i] = term_partial(terms_[k], x, inner, static_cast<int>(i));
    return jac;
  }

  static FunctionBasis monomial(int num_vars, int degree, BasisMode mode, bool include_constant,
                                std::string var_prefix = "x", std::size_t term_cap = 100'000,
                                int max_interaction = 0);
  static FunctionBasis trig(std::string var_prefix = "x");
  static FunctionBasis sine_only(std::string var_prefix = "x");

 private:
  template <class S>
  static S scalar_from(double v) {
    if constexpr (std::is_same_v<S, double>)
      return v;
    else
      return make_constant(v);
  }

  template <class S>
  S term_value(const BasisTerm& t, const std::vector<S>& x, const std::vector<S>& inner) const {
    if (t.kind == BasisTerm::Kind::Monomial) {
      S prod = scalar_from<S>(1.0);
      bool first = true;
      for (std::size_t j = 0; j < t.exponents.size(); ++j)
        for (int r = 0; r < t.exponents[j]; ++r) {
          prod = first ? x[j] : prod * x[j];
          first = false;
        }
      return prod;
    }
    using std::sin;
    return sin(x[t.sine_var] + inner[0] * x[t.sine_var] + inner[1]);
  }

  void check_args(std::size_t nx, std::size_t ninner) const {
    if (static_cast<int>(nx) != num_vars_)
      throw std::invalid_argument("FunctionBasis: expected " + std::to_string(num_vars_) +
                                  " variables, got " + std::to_string(nx));
    if (static_cast<int>(ninner) != num_inner_params())
      throw std::invalid_argument("FunctionBasis: expected " + std::to_string(num_inner_params()) +
                                  " inner parameters, got " + std::to_string(ninner));
  }

  int num_vars_ = 0;
  BasisMode mode_ = BasisMode::TensorProduct;
  int degree_ = 0;
  bool include_constant_ = true;
  int max_interaction_ = 0;  // 0 = unrestricted; k = products of <= k distinct vars
  std::string var_prefix_ = "x";
  std::vector<BasisTerm> terms_;
};

inline FunctionBasis FunctionBasis::monomial(int num_vars, int degree, BasisMode mode,
                                             bool include_constant, std::string var_prefix,
                                             std::size_t term_cap, int max_interaction) {
  if (num_vars < 1) throw std::invalid_argument("FunctionBasis: num_vars must be >= 1");
  if (degree < 1) throw std::invalid_argument("FunctionBasis: degree must be >= 1");
  if (mode != BasisMode::TensorProduct && mode != BasisMode::TotalDegree)
    throw std::invalid_argument("FunctionBasis::monomial: mode must be tensor or total");

  // Closed-form count check before enumerating anything.
  double count = 1.0;
  if (mode == BasisMode::TensorProduct) {
    for (int i = 0; i < num_vars; ++i) count *= degree + 1;
  } else {
    for (int i = 1; i <= num_vars; ++i) count *= static_cast<double>(degree + i) / i;
  }
  if (count > static_cast<double>(term_cap))
    throw ConfigError("basis would have " + std::to_string(static_cast<long long>(count)) +
                      " terms (cap " + std::to_string(term_cap) +
                      "); choose a smaller degree or total-degree mode");

  FunctionBasis b;
  b.num_vars_ = num_vars;
  b.mode_ = mode;
  b.degree_ = degree;
  b.include_constant_ = include_constant;
  b.max_interaction_ = max_interaction;
  b.var_prefix_ = std::move(var_prefix);

  std::vector<std::vector<int>> expos;
  std::vector<int> e(num_vars, 0);
  while (true) {  // odometer over per-variable exponents 0..degree
    int total = std::accumulate(e.begin(), e.end(), 0);
    bool keep = (mode == BasisMode::TensorProduct) ? true : total <= degree;
    if (keep && total == 0 && !include_constant) keep = false;
    if (keep && max_interaction > 0 && detail::distinct_vars(e) > max_interaction) keep = false;
    if (keep) expos.push_back(e);
    int i = 0;
    for (; i < num_vars; ++i) {
      if (e[i] < degree) {
        ++e[i];
        std::fill(e.begin(), e.begin() + i, 0);
        break;
      }
    }
    if (i == num_vars) break;
  }
  std::sort(expos.begin(), expos.end(), detail::graded_lex_less);

  for (auto& ex : expos) {
    BasisTerm t;
    t.kind = BasisTerm::Kind::Monomial;
    t.description = detail::monomial_text(ex, b.var_prefix_);
    t.exponents = std::move(ex);
    b.terms_.push_back(std::move(t));
  }
  return b;
}

inline FunctionBasis FunctionBasis::trig(std::string var_prefix) {
  FunctionBasis b = monomial(1, 3, BasisMode::TotalDegree, false, var_prefix);
  b.mode_ = BasisMode::TrigAugmented;
  BasisTerm s;
  s.kind = BasisTerm::Kind::ParametricSine;
  s.sine_var = 0;
  s.exponents = {0};
  s.description = detail::sine_text(0, b.var_prefix_);
  b.terms_.push_back(std::move(s));
  return b;
}

inline FunctionBasis FunctionBasis::sine_only(std::string var_prefix) {
  FunctionBasis b = trig(std::move(var_prefix));
  b.mode_ = BasisMode::SineOnly;
  b.terms_.erase(b.terms_.begin(), b.terms_.end() - 1);
  b.degree_ = 1;
  return b;
}

// Spec-order entry points.
inline FunctionBasis build_monomial_basis(int num_vars, int degree, BasisMode mode,
                                          bool include_constant, std::string var_prefix = "x",
                                          std::size_t term_cap = 100'000, int max_interaction = 0) {
  return FunctionBasis::monomial(num_vars, degree, mode, include_constant, std::move(var_prefix),
                                 term_cap, max_interaction);
}
inline FunctionBasis build_trig_basis(std::string var_prefix = "x") {
  return FunctionBasis::trig(std::move(var_prefix));
}

// Parses a canonical term description back into a BasisTerm (round-trip of
// BasisTerm::description for a basis with the given prefix and var count).
inline BasisTerm parse_term(const std::string& text, int num_vars, const std::string& prefix) {
  BasisTerm t;
  t.exponents.assign(num_vars, 0);
  if (text == "1") {
    t.description = text;
    return t;
  }
  auto parse_var = [&](const std::string& s) -> int {
    if (s.rfind(prefix, 0) != 0) throw ConfigError("parse_term: bad variable in '" + text + "'");
    int idx = std::stoi(s.substr(prefix.size()));
    if (idx < 1 || idx > num_vars) throw ConfigError("parse_term: variable index out of range in '" + text + "'");
    return idx - 1;
  };
  if (text.rfind("sin(", 0) == 0) {
    std::string v = text.substr(4, text.find('+') - 4);
    t.kind = BasisTerm::Kind::ParametricSine;
    t.sine_var = parse_var(v);
    t.description = detail::sine_text(t.sine_var, prefix);
    if (t.description != text) throw ConfigError("parse_term: malformed sine term '" + text + "'");
    return t;
  }
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t star = text.find('*', pos);
    std::string factor = text.substr(pos, star == std::string::npos ? star : star - pos);
    std::size_t caret = factor.find('^');
    int exp = 1;
    std::string var = factor;
    if (caret != std::string::npos) {
      var = factor.substr(0, caret);
      exp = std::stoi(factor.substr(caret + 1));
    }
    t.exponents[parse_var(var)] += exp;
    if (star == std::string::npos) break;
    pos = star + 1;
  }
  t.description = detail::monomial_text(t.exponents, prefix);
  return t;
}

}  // namespace ssinn
