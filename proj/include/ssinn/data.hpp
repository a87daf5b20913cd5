// Transition/trajectory dataset generation from truth systems via fine-step
// reference integration, Gaussian noise injection, and a bit-stable CSV
// format (17-significant-digit decimals, lossless round trip).
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ssinn/errors.hpp"
#include "ssinn/integrators.hpp"
#include "ssinn/phase.hpp"
#include "ssinn/rng.hpp"
#include "ssinn/systems.hpp"

namespace ssinn {

// One supervised pair: a state at t0 and one or more target states at
// strictly later times.
struct TransitionSample {
  double t0 = 0.0;
  PhaseState initial;
  std::vector<std::pair<double, PhaseState>> targets;
};

struct NoiseConfig {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

struct Dataset {
  std::vector<TransitionSample> samples;
  std::string system;        // short token, e.g. "henon"
  double sigma = 0.0;        // 0 for clean data
  std::uint64_t seed = 0;    // generation seed

  int dim() const { return samples.empty() ? 0 : samples.front().initial.dim(); }
  int n_targets() const { return samples.empty() ? 0 : static_cast<int>(samples.front().targets.size()); }

  void validate() const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      if (s.targets.empty())
        throw std::invalid_argument("Dataset: sample " + std::to_string(i) + " has no targets");
      if (s.initial.dim() != dim() || static_cast<int>(s.targets.size()) != n_targets())
        throw std::invalid_argument("Dataset: sample " + std::to_string(i) + " is inhomogeneous");
      double prev = s.t0;
      for (const auto& [t, st] : s.targets) {
        if (t <= prev) throw std::invalid_argument("Dataset: sample " + std::to_string(i) +
                                                   " has non-increasing target times");
        if (st.dim() != dim())
          throw std::invalid_argument("Dataset: sample " + std::to_string(i) + " target dim mismatch");
        prev = t;
      }
    }
  }
};

// n independent transitions: initial states from the system's sampler,
// targets at t0 + sub_dt, ..., t0 + horizon from fine-step reference
// integration of the truth fields.
inline Dataset generate_transitions(const System& sys, int n, double t0, double horizon,
                                    double sub_dt, double ref_eps, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_transitions: n must be >= 1");
  if (!(horizon > 0.0) || !(sub_dt > 0.0))
    throw std::invalid_argument("generate_transitions: horizon and sub_dt must be positive");
  double ratio = horizon / sub_dt;
  int n_targets = static_cast<int>(std::llround(ratio));
  if (n_targets < 1 || std::abs(ratio - n_targets) > 1e-9)
    throw std::invalid_argument("generate_transitions: sub_dt must divide horizon");

  GradientFields f = truth_fields(sys);
  Dataset ds;
  ds.system = kind_name(sys);
  ds.seed = seed;
  ds.samples.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
    PhaseState state = sample_initial_state(sys, rng);
    TransitionSample sample;
    sample.t0 = t0;
    sample.initial = state;
    std::vector<double> q = state.q, p = state.p;
    for (int k = 1; k <= n_targets; ++k) {
      double ta = t0 + (k - 1) * sub_dt, tb = t0 + k * sub_dt;
      auto [q1, p1] = symplectic4_integrate(f.grad_v, f.grad_t, std::move(q), std::move(p), ta, tb, ref_eps);
      q = std::move(q1);
      p = std::move(p1);
      sample.targets.emplace_back(tb, PhaseState(q, p));
    }
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

// One long rollout of `steps` consecutive states sliced into step-to-step
// transitions (steps - 1 samples).
inline Dataset generate_trajectory(const System& sys, int steps, double dt, double ref_eps,
                                   std::uint64_t seed) {
  if (steps < 2) throw std::invalid_argument("generate_trajectory: need at least 2 states");
  GradientFields f = truth_fields(sys);
  Rng rng = Rng::stream(seed, 0);
  PhaseState start = sample_initial_state(sys, rng);
  Trajectory traj = rollout(Scheme::Symplectic4, f.grad_v, f.grad_t, start, 0.0, dt, steps, ref_eps);

  Dataset ds;
  ds.system = kind_name(sys);
  ds.seed = seed;
  ds.samples.reserve(steps - 1);
  for (int i = 0; i + 1 < steps; ++i) {
    TransitionSample s;
    s.t0 = traj.times[i];
    s.initial = traj.states[i];
    s.targets.emplace_back(traj.times[i + 1], traj.states[i + 1]);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// Independent N(0, sigma^2) on every stored component (initial and targets).
// Deterministic given the seed; the input dataset is untouched.
inline Dataset add_noise(const Dataset& clean, const NoiseConfig& cfg) {
  if (cfg.sigma < 0.0) throw std::invalid_argument("add_noise: sigma must be >= 0");
  Dataset noisy = clean;
  noisy.sigma = cfg.sigma;
  if (cfg.sigma == 0.0) return noisy;
  for (std::size_t i = 0; i < noisy.samples.size(); ++i) {
    Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(i));
    auto perturb = [&](PhaseState& s) {
      for (double& v : s.q) v += rng.normal(0.0, cfg.sigma);
      for (double& v : s.p) v += rng.normal(0.0, cfg.sigma);
    };
    perturb(noisy.samples[i].initial);
    for (auto& [t, st] : noisy.samples[i].targets) perturb(st);
  }
  return noisy;
}

namespace detail {

inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline double parse_double(const std::string& tok, int line) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("dataset line " + std::to_string(line) + ": unparseable number '" + tok + "'");
  }
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

// Format: header names, one metadata row, then one row per sample:
//   dim,n_targets,system,sigma,seed
//   2,1,henon,0,7
//   t0,q...,p...,[t,q...,p...] per target
inline void save_dataset(const Dataset& ds, const std::string& path) {
  ds.validate();
  if (ds.system.find(',') != std::string::npos)
    throw std::invalid_argument("save_dataset: system token must not contain commas");
  std::ofstream out(path);
  if (!out) throw ConfigError("save_dataset: cannot open '" + path + "' for writing");
  out << "dim,n_targets,system,sigma,seed\n";
  out << ds.dim() << "," << ds.n_targets() << "," << ds.system << ","
      << detail::format_full(ds.sigma) << "," << ds.seed << "\n";
  for (const auto& s : ds.samples) {
    out << detail::format_full(s.t0);
    for (double v : s.initial.q) out << "," << detail::format_full(v);
    for (double v : s.initial.p) out << "," << detail::format_full(v);
    for (const auto& [t, st] : s.targets) {
      out << "," << detail::format_full(t);
      for (double v : st.q) out << "," << detail::format_full(v);
      for (double v : st.p) out << "," << detail::format_full(v);
    }
    out << "\n";
  }
  if (!out) throw ConfigError("save_dataset: write failed for '" + path + "'");
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_dataset: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("load_dataset: empty file '" + path + "'");
  if (line == "dim,n_targets,system,sigma,seed\r") line.pop_back();
  if (line != "dim,n_targets,system,sigma,seed")
    throw ConfigError("load_dataset: line 1: malformed header '" + line + "'");
  if (!std::getline(in, line)) throw ConfigError("load_dataset: missing metadata row");
  auto meta = detail::split_csv(line);
  if (meta.size() != 5) throw ConfigError("load_dataset: line 2: expected 5 metadata fields");

  Dataset ds;
  int dim = static_cast<int>(detail::parse_double(meta[0], 2));
  int n_targets = static_cast<int>(detail::parse_double(meta[1], 2));
  ds.system = meta[2];
  ds.sigma = detail::parse_double(meta[3], 2);
  ds.seed = static_cast<std::uint64_t>(detail::parse_double(meta[4], 2));
  if (dim < 0 || n_targets < 0) throw ConfigError("load_dataset: line 2: negative dimensions");

  int lineno = 2;
  std::size_t expected = 1 + 2 * static_cast<std::size_t>(dim) +
                         static_cast<std::size_t>(n_targets) * (1 + 2 * static_cast<std::size_t>(dim));
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tok = detail::split_csv(line);
    if (tok.size() != expected)
      throw ConfigError("load_dataset: line " + std::to_string(lineno) + ": expected " +
                        std::to_string(expected) + " fields, got " + std::to_string(tok.size()));
    std::size_t at = 0;
    auto next = [&]() { return detail::parse_double(tok[at++], lineno); };
    TransitionSample s;
    s.t0 = next();
    std::vector<double> q(dim), p(dim);
    for (double& v : q) v = next();
    for (double& v : p) v = next();
    s.initial = PhaseState(std::move(q), std::move(p));
    for (int k = 0; k < n_targets; ++k) {
      double t = next();
      std::vector<double> tq(dim), tp(dim);
      for (double& v : tq) v = next();
      for (double& v : tp) v = next();
      s.targets.emplace_back(t, PhaseState(std::move(tq), std::move(tp)));
    }
    ds.samples.push_back(std::move(s));
  }
  ds.validate();
  if (!ds.samples.empty() && (ds.dim() != dim || ds.n_targets() != n_targets))
    throw ConfigError("load_dataset: body does not match header dimensions");
  return ds;
}

}  // namespace ssinn
