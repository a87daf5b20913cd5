// Scalar reverse-mode differentiation on an explicit tape.
//
// The supported operation set is fixed: add, sub, mul, neg, integer power,
// sin, cos, abs. That is everything the monomial and trig bases, the
// splitting integrators, and the L1 loss need; division and exp are
// deliberately absent. Local partials are stored at record time, so the
// backward sweep is a single reverse pass with two fused multiply-adds per
// node.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssinn/errors.hpp"

namespace ssinn {

class Tape;

// A scalar with an optional handle into a tape. node < 0 means constant:
// constants fold eagerly and record nothing.
struct DiffScalar {
  double value = 0.0;
  std::int32_t node = -1;
  Tape* tape = nullptr;

  bool tracked() const { return node >= 0; }
};

inline DiffScalar make_constant(double v) { return DiffScalar{v, -1, nullptr}; }

// Partial derivatives of one output with respect to every tracked leaf,
// keyed by the leaf's node id (ids are ascending in creation order).
class GradientMap {
 public:
  GradientMap() = default;
  GradientMap(std::vector<std::int32_t> ids, std::vector<double> grads)
      : ids_(std::move(ids)), grads_(std::move(grads)) {}

  double at(const DiffScalar& var) const {
    std::size_t lo = 0, hi = ids_.size();
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (ids_[mid] < var.node)
        lo = mid + 1;
      else
        hi = mid;
    }
    if (lo == ids_.size() || ids_[lo] != var.node)
      throw std::invalid_argument("GradientMap: variable is not a tracked leaf of this tape");
    return grads_[lo];
  }

  std::size_t size() const { return ids_.size(); }
  // Gradients in leaf creation order; the trainer relies on this ordering.
  const std::vector<double>& values() const { return grads_; }

 private:
  std::vector<std::int32_t> ids_;
  std::vector<double> grads_;
};

class Tape {
 public:
  static constexpr std::size_t kDefaultMaxNodes = 10'000'000;

  explicit Tape(std::size_t max_nodes = kDefaultMaxNodes) : max_nodes_(max_nodes) {}

  // Registers a leaf whose gradient appears in every backward() result.
  DiffScalar track(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("Tape::track: non-finite value");
    std::int32_t id = push(-1, -1, 0.0, 0.0);
    leaves_.push_back(id);
    return DiffScalar{value, id, this};
  }

  DiffScalar constant(double v) const { return make_constant(v); }

  // Drops all recorded nodes but keeps capacity. Outstanding DiffScalars
  // from before the reset are invalid.
  void reset() {
    nodes_.clear();
    leaves_.clear();
  }

  std::size_t size() const { return nodes_.size(); }
  std::size_t leaf_count() const { return leaves_.size(); }

  // Reverse accumulation of d(output)/d(leaf) for every tracked leaf.
  // A constant output yields an all-zero map over the tracked set.
  GradientMap backward(const DiffScalar& output) {
    if (output.tracked() && output.tape != this)
      throw std::invalid_argument("Tape::backward: output belongs to a different tape");
    std::vector<double> grads(leaves_.size(), 0.0);
    if (output.tracked()) {
      adjoint_.assign(static_cast<std::size_t>(output.node) + 1, 0.0);
      adjoint_[output.node] = 1.0;
      for (std::int32_t i = output.node; i >= 0; --i) {
        double a = adjoint_[i];
        if (a == 0.0) continue;
        const Node& n = nodes_[i];
        if (n.a >= 0) adjoint_[n.a] += n.da * a;
        if (n.b >= 0) adjoint_[n.b] += n.db * a;
      }
      for (std::size_t k = 0; k < leaves_.size(); ++k)
        if (leaves_[k] <= output.node) grads[k] = adjoint_[leaves_[k]];
    }
    return GradientMap(leaves_, std::move(grads));
  }

  std::int32_t push(std::int32_t a, std::int32_t b, double da, double db) {
    if (nodes_.size() >= max_nodes_)
      throw NumericError("Tape: node limit of " + std::to_string(max_nodes_) +
                         " exceeded; reset the tape or raise the limit");
    nodes_.push_back(Node{a, b, da, db});
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

 private:
  struct Node {
    std::int32_t a, b;  // parents, -1 if none
    double da, db;      // local partials wrt parents
  };

  std::vector<Node> nodes_;
  std::vector<std::int32_t> leaves_;
  std::vector<double> adjoint_;
  std::size_t max_nodes_;
};

namespace detail {

inline Tape* common_tape(const DiffScalar& x, const DiffScalar& y) {
  if (x.tracked() && y.tracked() && x.tape != y.tape)
    throw std::invalid_argument("DiffScalar: operands from different tapes");
  return x.tracked() ? x.tape : y.tape;
}

inline DiffScalar binary(const DiffScalar& x, const DiffScalar& y, double value, double dx, double dy) {
  Tape* t = common_tape(x, y);
  if (!t) return make_constant(value);
  std::int32_t a = x.tracked() ? x.node : -1;
  std::int32_t b = y.tracked() ? y.node : -1;
  return DiffScalar{value, t->push(a, b, dx, dy), t};
}

inline DiffScalar unary(const DiffScalar& x, double value, double dx) {
  if (!x.tracked()) return make_constant(value);
  return DiffScalar{value, x.tape->push(x.node, -1, dx, 0.0), x.tape};
}

}  // namespace detail

inline DiffScalar operator+(const DiffScalar& x, const DiffScalar& y) {
  return detail::binary(x, y, x.value + y.value, 1.0, 1.0);
}
inline DiffScalar operator-(const DiffScalar& x, const DiffScalar& y) {
  return detail::binary(x, y, x.value - y.value, 1.0, -1.0);
}
inline DiffScalar operator*(const DiffScalar& x, const DiffScalar& y) {
  return detail::binary(x, y, x.value * y.value, y.value, x.value);
}
inline DiffScalar operator-(const DiffScalar& x) { return detail::unary(x, -x.value, -1.0); }

inline DiffScalar operator+(const DiffScalar& x, double c) { return detail::unary(x, x.value + c, 1.0); }
inline DiffScalar operator+(double c, const DiffScalar& x) { return x + c; }
inline DiffScalar operator-(const DiffScalar& x, double c) { return detail::unary(x, x.value - c, 1.0); }
inline DiffScalar operator-(double c, const DiffScalar& x) { return detail::unary(x, c - x.value, -1.0); }
inline DiffScalar operator*(const DiffScalar& x, double c) { return detail::unary(x, x.value * c, c); }
inline DiffScalar operator*(double c, const DiffScalar& x) { return x * c; }

inline DiffScalar sin(const DiffScalar& x) { return detail::unary(x, std::sin(x.value), std::cos(x.value)); }
inline DiffScalar cos(const DiffScalar& x) { return detail::unary(x, std::cos(x.value), -std::sin(x.value)); }

// |x| with derivative 0 at the kink: the stable subgradient for L1 losses.
inline DiffScalar abs(const DiffScalar& x) {
  double d = x.value > 0.0 ? 1.0 : (x.value < 0.0 ? -1.0 : 0.0);
  return detail::unary(x, std::abs(x.value), d);
}

// x^n for integer n >= 0, evaluated by repeated multiplication.
inline DiffScalar pow_int(const DiffScalar& x, int n) {
  if (n < 0) throw std::invalid_argument("pow_int: negative exponent unsupported");
  if (n == 0) return make_constant(1.0);
  double xp = 1.0;  // x^(n-1)
  for (int i = 0; i < n - 1; ++i) xp *= x.value;
  return detail::unary(x, xp * x.value, static_cast<double>(n) * xp);
}

// Plain-double twins so templated code works on both scalar types.
inline double pow_int(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}
inline double value_of(double x) { return x; }
inline double value_of(const DiffScalar& x) { return x.value; }

// ---------------------------------------------------------------------------
// Finite-difference verification of reverse-accumulated gradients.

struct CheckReport {
  double max_rel_err = 0.0;
  int worst_index = -1;
  bool pass = false;
};

// f: callable taking const std::vector<DiffScalar>& and returning DiffScalar.
// Compares backward() gradients against central differences with step
// 1e-6 * max(1, |x_i|); rel error is measured against max(1, |fd_i|).
template <class F>
CheckReport finite_diff_check(F&& f, const std::vector<double>& x, double rel_tol) {
  Tape tape;
  std::vector<DiffScalar> xs;
  xs.reserve(x.size());
  for (double v : x) xs.push_back(tape.track(v));
  DiffScalar y = f(xs);
  if (!std::isfinite(y.value)) throw NumericError("finite_diff_check: f(x) is non-finite");
  GradientMap grads = tape.backward(y);

  auto value_at = [&](const std::vector<double>& pt) {
    std::vector<DiffScalar> cs;
    cs.reserve(pt.size());
    for (double v : pt) cs.push_back(make_constant(v));
    double val = f(cs).value;
    if (!std::isfinite(val)) throw NumericError("finite_diff_check: f is non-finite near x");
    return val;
  };

  CheckReport report;
  std::vector<double> pt = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    pt[i] = x[i] + h;
    double fp = value_at(pt);
    pt[i] = x[i] - h;
    double fm = value_at(pt);
    pt[i] = x[i];
    double fd = (fp - fm) / (2.0 * h);
    double rel = std::abs(grads.at(xs[i]) - fd) / std::max(1.0, std::abs(fd));
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_index = static_cast<int>(i);
    }
  }
  report.pass = report.max_rel_err <= rel_tol;
  return report;
}

}  // namespace ssinn
