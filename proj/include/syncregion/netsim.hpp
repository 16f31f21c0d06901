#pragma once

// Time-domain simulation of x' = (I_N kron A - L kron BKC) x with the
// disagreement norm e(t) = ||(Pi_N kron I_n) x(t)||.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "syncregion/graphnet.hpp"
#include "syncregion/numkernel.hpp"
#include "syncregion/system.hpp"

namespace syncregion {

enum class SimMethod { kExact, kRk4 };

struct SimConfig {
  double T = 60.0;
  double dt = 0.05;
  SimMethod method = SimMethod::kExact;
  std::uint64_t seed = 1;
  std::optional<RealVector> x0;
  /// Store states relative to the agent average. The disagreement dynamics
  /// are autonomous, so this only removes the synchronous motion, which may
  /// grow without bound when A is unstable.
  bool comoving = true;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<RealVector> states;
  std::vector<double> disagreement;
  /// Set when the state overflowed; the series stops at the last finite sample.
  bool diverged = false;
  /// Largest Richardson estimate of the rk4 local error, relative to |x|.
  double max_local_error = 0.0;
};

inline constexpr Eigen::Index kMaxExactDimension = 1000;
inline constexpr double kDivergenceNorm = 1e200;

namespace detail {

// x - 1_N kron mean_i(x_i)
inline RealVector remove_average(const RealVector& x, Eigen::Index n, Eigen::Index agents) {
  RealVector mean = RealVector::Zero(n);
  for (Eigen::Index i = 0; i < agents; ++i) mean += x.segment(i * n, n);
  mean /= static_cast<double>(agents);
  RealVector out = x;
  for (Eigen::Index i = 0; i < agents; ++i) out.segment(i * n, n) -= mean;
  return out;
}

inline RealVector rk4_step(const RealMatrix& m, const RealVector& x, double h) {
  const RealVector k1 = m * x;
  const RealVector k2 = m * (x + 0.5 * h * k1);
  const RealVector k3 = m * (x + 0.5 * h * k2);
  const RealVector k4 = m * (x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

/// I_N kron A - L kron BKC.
inline RealMatrix network_matrix(const LtiSystem& sys, const GainMatrix& k, const WeightedDigraph& g) {
  check_gain(sys, k);
  const int agents = g.node_count();
  return kron(RealMatrix::Identity(agents, agents), sys.A()) -
         kron(interconnection_matrix(g), RealMatrix(sys.B() * k * sys.C()));
}

inline RealVector standard_normal_state(Eigen::Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  RealVector x(dim);
  for (Eigen::Index i = 0; i < dim; ++i) x(i) = nd(rng);
  return x;
}

inline double disagreement_norm(const RealVector& x, Eigen::Index n, Eigen::Index agents) {
  return detail::remove_average(x, n, agents).norm();
}

inline Trajectory simulate_network(const LtiSystem& sys, const GainMatrix& k, const WeightedDigraph& g,
                                   const SimConfig& cfg) {
  if (!(cfg.T > 0.0) || !(cfg.dt > 0.0) || cfg.dt > cfg.T || !std::isfinite(cfg.T)) {
    throw std::invalid_argument("simulate_network: need T > 0, 0 < dt <= T");
  }
  const Eigen::Index n = sys.states();
  const Eigen::Index agents = g.node_count();
  const Eigen::Index dim = n * agents;
  if (cfg.method == SimMethod::kExact && dim > kMaxExactDimension) {
    throw std::length_error("simulate_network: nN exceeds the exact-propagator limit");
  }
  RealVector x = cfg.x0 ? *cfg.x0 : standard_normal_state(dim, cfg.seed);
  if (x.size() != dim) throw DimensionError("simulate_network: x0 must have length nN");
  if (!x.allFinite()) throw std::invalid_argument("simulate_network: x0 must be finite");

  const RealMatrix m = network_matrix(sys, k, g);
  const auto steps = static_cast<std::size_t>(std::llround(std::ceil(cfg.T / cfg.dt - 1e-9)));

  RealMatrix step_map;
  int substeps = 0;
  if (cfg.method == SimMethod::kExact) {
    step_map = expm(m, cfg.dt);
  } else {
    // Internal step at most dt/10 and small enough that rk4 is accurate to
    // roughly (||M|| h)^5 / 120 per step.
    const double norm = m.norm();
    substeps = std::max(10, static_cast<int>(std::ceil(norm * cfg.dt / 0.05)));
  }

  Trajectory tr;
  tr.times.reserve(steps + 1);
  tr.states.reserve(steps + 1);
  tr.disagreement.reserve(steps + 1);
  const auto record = [&](double t, const RealVector& state) {
    tr.times.push_back(t);
    tr.states.push_back(cfg.comoving ? detail::remove_average(state, n, agents) : state);
    tr.disagreement.push_back(disagreement_norm(state, n, agents));
  };
  if (cfg.comoving) x = detail::remove_average(x, n, agents);
  record(0.0, x);

  for (std::size_t i = 1; i <= steps; ++i) {
    const double t_prev = cfg.dt * static_cast<double>(i - 1);
    const double t = std::min(cfg.T, cfg.dt * static_cast<double>(i));
    const double h_out = t - t_prev;
    RealVector next;
    if (cfg.method == SimMethod::kExact) {
      next = (h_out == cfg.dt) ? RealVector(step_map * x) : RealVector(expm(m, h_out) * x);
    } else {
      const double h = h_out / substeps;
      next = x;
      for (int s = 0; s < substeps; ++s) {
        if (s == 0) {
          const RealVector full = detail::rk4_step(m, next, h);
          const RealVector half = detail::rk4_step(m, detail::rk4_step(m, next, 0.5 * h), 0.5 * h);
          const double scale = std::max(half.norm(), std::numeric_limits<double>::min());
          tr.max_local_error = std::max(tr.max_local_error, (full - half).norm() / (15.0 * scale));
          next = half;
        } else {
          next = detail::rk4_step(m, next, h);
        }
      }
    }
    if (cfg.comoving) next = detail::remove_average(next, n, agents);
    if (!next.allFinite() || next.norm() > kDivergenceNorm) {
      tr.diverged = true;
      break;
    }
    x = std::move(next);
    record(t, x);
  }
  return tr;
}

/// 20 / |min margin| when a verdict margin is available, else 60 s.
inline double default_horizon(std::optional<double> min_margin) {
  if (min_margin && std::isfinite(*min_margin) && std::abs(*min_margin) > 0.0) {
    return 20.0 / std::abs(*min_margin);
  }
  return 60.0;
}

inline constexpr double kDefaultSyncThreshold = 1e-6;

/// Horizon at which kappa e^{-m t} drops below threshold at the start of the
/// final T/5 window, m the decay margin and kappa the eigenvector condition
/// number of I kron A - L~ kron BKC. Never shorter than default_horizon;
/// falls back to it when the dynamics are not decaying or near defective.
inline double transient_horizon(const LtiSystem& sys, const GainMatrix& k, const WeightedDigraph& g,
                                double threshold = kDefaultSyncThreshold) {
  check_gain(sys, k);
  const RealMatrix lt = reduced_interconnection(g).Ltilde;
  const RealMatrix m = kron(RealMatrix::Identity(lt.rows(), lt.cols()), sys.A()) -
                       kron(lt, RealMatrix(sys.B() * k * sys.C()));
  Eigen::EigenSolver<RealMatrix> es(m);
  if (es.info() != Eigen::Success) return default_horizon(std::nullopt);
  const double margin = -es.eigenvalues().real().maxCoeff();
  const double fallback = default_horizon(margin);
  if (!(margin > 0.0)) return fallback;
  const Eigen::JacobiSVD<ComplexMatrix> svd(es.eigenvectors());
  const auto& sv = svd.singularValues();
  const double kappa = sv(0) / sv(sv.size() - 1);
  if (!std::isfinite(kappa) || kappa > 1e12) return fallback;
  return std::max(fallback, std::log(std::max(1.0, kappa) / threshold) / (0.8 * margin));
}

struct TrajectoryVerdict {
  bool synchronized = false;
  /// e(0) = 0 up to roundoff: the verdict is vacuously true.
  bool vacuous = false;
  /// Least-squares slope of log e(t) over the second half.
  double rate = 0.0;

  friend bool operator==(const TrajectoryVerdict&, const TrajectoryVerdict&) = default;
};

/// Least-squares slope of log e over samples with t >= t_from.
inline double fitted_rate(const std::vector<double>& t, const std::vector<double>& e, double t_from) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  double count = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_from) continue;
    const double y = std::log(std::max(e[i], std::numeric_limits<double>::min()));
    sx += t[i];
    sy += y;
    sxx += t[i] * t[i];
    sxy += t[i] * y;
    count += 1.0;
  }
  const double den = count * sxx - sx * sx;
  if (count < 2.0 || den <= 0.0) return 0.0;
  return (count * sxy - sx * sy) / den;
}


/// Synchronized iff e < threshold * e(0) throughout the final `window` and
/// the fitted exponential rate over the second half is negative. A
/// negative window selects T/5.
inline TrajectoryVerdict sync_verdict_from_trajectory(const Trajectory& tr,
                                                      double threshold = kDefaultSyncThreshold,
                                                      double window = -1.0) {
  if (tr.times.size() < 2) throw std::invalid_argument("sync_verdict_from_trajectory: trajectory too short");
  TrajectoryVerdict out;
  const double e0 = tr.disagreement.front();
  // A synchronized x0 leaves only roundoff in e(0).
  const double x0_norm = tr.states.empty() ? 0.0 : tr.states.front().norm();
  if (e0 <= 1e-12 * std::max(1.0, x0_norm)) {
    out.synchronized = true;
    out.vacuous = true;
    return out;
  }
  if (tr.diverged) return out;
  const double t_end = tr.times.back();
  if (window < 0.0) window = t_end / 5.0;
  if (!(window < t_end - tr.times.front())) {
    throw std::invalid_argument("sync_verdict_from_trajectory: trajectory shorter than window");
  }
  out.rate = fitted_rate(tr.times, tr.disagreement, 0.5 * t_end);
  bool below = true;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    if (tr.times[i] >= t_end - window && !(tr.disagreement[i] < threshold * e0)) below = false;
  }
  out.synchronized = below && out.rate < 0.0;
  return out;
}

}  // namespace syncregion
