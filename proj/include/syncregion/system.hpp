#pragma once

// The agent model (A, B, C), static output-feedback gains, membership in the
// synchronization region {s : A - sBKC Hurwitz}, and the Kalman reduction to
// the controllable and observable subsystem.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <exception>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "syncregion/numkernel.hpp"

namespace syncregion {

/// Raised when matrix dimensions do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// x' = A x + B u, y = C x.
class LtiSystem {
 public:
  LtiSystem(RealMatrix a, RealMatrix b, RealMatrix c)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
    if (a_.rows() < 1 || a_.rows() != a_.cols()) {
      throw DimensionError("LtiSystem: A must be square with n >= 1");
    }
    if (b_.rows() != a_.rows() || b_.cols() < 1) {
      throw DimensionError("LtiSystem: B must be n x m with m >= 1");
    }
    if (c_.cols() != a_.rows() || c_.rows() < 1) {
      throw DimensionError("LtiSystem: C must be q x n with q >= 1");
    }
    if (!a_.allFinite() || !b_.allFinite() || !c_.allFinite()) {
      throw std::invalid_argument("LtiSystem: non-finite entries");
    }
  }

  [[nodiscard]] const RealMatrix& A() const { return a_; }
  [[nodiscard]] const RealMatrix& B() const { return b_; }
  [[nodiscard]] const RealMatrix& C() const { return c_; }
  [[nodiscard]] Eigen::Index states() const { return a_.rows(); }
  [[nodiscard]] Eigen::Index inputs() const { return b_.cols(); }
  [[nodiscard]] Eigen::Index outputs() const { return c_.rows(); }
  [[nodiscard]] bool is_siso() const { return inputs() == 1 && outputs() == 1; }

  friend bool operator==(const LtiSystem& x, const LtiSystem& y) {
    return x.a_ == y.a_ && x.b_ == y.b_ && x.c_ == y.c_;
  }

 private:
  RealMatrix a_, b_, c_;
};

/// K in u_i = K sum_j sigma_ij (y_j - y_i); m x q.
using GainMatrix = RealMatrix;

inline GainMatrix scalar_gain(double k) { return GainMatrix::Constant(1, 1, k); }

inline void check_gain(const LtiSystem& sys, const GainMatrix& k) {
  if (k.rows() != sys.inputs() || k.cols() != sys.outputs()) {
    throw DimensionError("gain must be " + std::to_string(sys.inputs()) + "x" +
                         std::to_string(sys.outputs()) + ", got " + std::to_string(k.rows()) +
                         "x" + std::to_string(k.cols()));
  }
}

/// Margin within which open-region membership is treated as undecidable.
inline constexpr double kBoundaryGuard = 1e-6;

struct RegionPoint {
  bool member = false;
  /// Stability margin of A - sBKC (negated spectral abscissa).
  double margin = 0.0;
};

/// s in S(P, K) iff A - sBKC is Hurwitz with margin `hurwitz_margin`.
/// Evaluated at the upper-half-plane representative of {s, conj s}, so
/// membership is exactly conjugate-symmetric.
inline RegionPoint region_membership(const LtiSystem& sys, const GainMatrix& k, Complex s,
                                     double hurwitz_margin = 0.0) {
  check_gain(sys, k);
  const Complex rep(s.real(), std::abs(s.imag()));
  const RealMatrix bkc = sys.B() * k * sys.C();
  const ComplexMatrix f = sys.A().cast<Complex>() - rep * bkc.cast<Complex>();
  const double abscissa = spectral_abscissa(f);
  return {abscissa < -hurwitz_margin, -abscissa};
}

inline RegionPoint region_membership(const LtiSystem& sys, double k, Complex s,
                                     double hurwitz_margin = 0.0) {
  return region_membership(sys, scalar_gain(k), s, hurwitz_margin);
}

/// Per-eigenvalue outcome of a synchronization test.
struct EigenvalueResult {
  Complex lambda;
  bool in_region = false;
  /// State-space tests: stability margin of A - lambda BKC. Frequency-domain
  /// tests: distance from -1/(k lambda) to the Nyquist contour, negated
  /// outside the region.
  double margin = 0.0;

  friend bool operator==(const EigenvalueResult&, const EigenvalueResult&) = default;
};

struct SyncVerdict {
  bool synchronizes = false;
  std::vector<EigenvalueResult> eigenvalues;
  std::optional<bool> oracle_agreement;
  /// False when some test point sits on a region boundary within tolerance.
  bool determinate = true;

  [[nodiscard]] double min_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& e : eigenvalues) m = std::min(m, e.margin);
    return m;
  }
  [[nodiscard]] double min_abs_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& e : eigenvalues) m = std::min(m, std::abs(e.margin));
    return m;
  }

  friend bool operator==(const SyncVerdict&, const SyncVerdict&) = default;
};

// ---------------------------------------------------------------------------
// Kalman reduction

inline constexpr double kDefaultRankTol = 1e-9;

namespace detail {

// Orthonormal basis of the smallest A-invariant subspace containing range(B),
// built one Krylov block at a time with re-orthogonalization.
inline RealMatrix krylov_basis(const RealMatrix& a, const RealMatrix& b, double rank_tol) {
  const Eigen::Index n = a.rows();
  const double scale = std::max({1.0, a.norm(), b.norm()});
  RealMatrix basis(n, 0);
  RealMatrix w = b;
  for (Eigen::Index iter = 0; iter <= n && basis.cols() < n; ++iter) {
    for (int pass = 0; pass < 2; ++pass) w -= basis * (basis.transpose() * w);
    if (w.cols() == 0) break;
    Eigen::JacobiSVD<RealMatrix> svd(w, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    Eigen::Index keep = 0;
    while (keep < sv.size() && sv(keep) > rank_tol * scale) ++keep;
    keep = std::min<Eigen::Index>(keep, n - basis.cols());
    if (keep == 0) break;
    RealMatrix fresh = svd.matrixU().leftCols(keep);
    for (int pass = 0; pass < 2; ++pass) fresh -= basis * (basis.transpose() * fresh);
    fresh = Eigen::HouseholderQR<RealMatrix>(fresh).householderQ() *
            RealMatrix::Identity(n, keep);
    RealMatrix grown(n, basis.cols() + keep);
    grown << basis, fresh;
    basis = std::move(grown);
    w = a * fresh;
  }
  return basis;
}

// Orthonormal completion of `basis` to R^n.
inline RealMatrix orthogonal_complement(const RealMatrix& basis, Eigen::Index n) {
  if (basis.cols() == 0) return RealMatrix::Identity(n, n);
  Eigen::HouseholderQR<RealMatrix> qr(basis);
  const RealMatrix full = qr.householderQ() * RealMatrix::Identity(n, n);
  return full.rightCols(n - basis.cols());
}

inline bool strictly_stable(const RealMatrix& m, double scale) {
  if (m.rows() == 0) return true;
  return spectral_abscissa(m) < -1e-10 * scale;
}

}  // namespace detail

struct KalmanDecomposition {
  /// Controllable and observable subsystem; empty when it has order zero.
  std::optional<LtiSystem> minimal;
  Eigen::Index controllable_dim = 0;
  Eigen::Index minimal_dim = 0;
  /// Uncontrollable modes all in the open left half plane.
  bool stabilizable = false;
  /// Unobservable modes all in the open left half plane.
  bool detectable = false;
  [[nodiscard]] bool is_minimal(Eigen::Index n) const { return minimal_dim == n; }
};

/// (A, B) stabilizable: the uncontrollable block of the Kalman form is Hurwitz.
inline bool stabilizable(const RealMatrix& a, const RealMatrix& b,
                         double rank_tol = kDefaultRankTol) {
  const RealMatrix ctrl = detail::krylov_basis(a, b, rank_tol);
  const RealMatrix rest = detail::orthogonal_complement(ctrl, a.rows());
  return detail::strictly_stable(rest.transpose() * a * rest, std::max(1.0, a.norm()));
}

inline bool detectable(const RealMatrix& a, const RealMatrix& c,
                       double rank_tol = kDefaultRankTol) {
  return stabilizable(a.transpose(), c.transpose(), rank_tol);
}

/// Popov-Belevitch-Hautus test: rank [lambda I - A, B] = n at every
/// eigenvalue with Re lambda >= 0.
inline bool pbh_stabilizable(const RealMatrix& a, const RealMatrix& b, double rank_tol = 1e-7) {
  const Eigen::Index n = a.rows();
  const Spectrum spec = eigenvalues(a);
  const double scale = std::max({1.0, a.norm(), b.norm()});
  for (const auto& lambda : spec.values) {
    if (lambda.real() < -1e-10 * scale) continue;
    ComplexMatrix m(n, n + b.cols());
    m << lambda * ComplexMatrix::Identity(n, n) - a.cast<Complex>(), b.cast<Complex>();
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    if (svd.singularValues()(n - 1) <= rank_tol * scale) return false;
  }
  return true;
}

inline bool pbh_detectable(const RealMatrix& a, const RealMatrix& c, double rank_tol = 1e-7) {
  return pbh_stabilizable(a.transpose(), c.transpose(), rank_tol);
}

/// Controllable-and-observable restriction plus stabilizability and
/// detectability flags.
inline KalmanDecomposition kalman_minimal(const LtiSystem& sys, double rank_tol = kDefaultRankTol) {
  KalmanDecomposition out;
  out.stabilizable = stabilizable(sys.A(), sys.B(), rank_tol);
  out.detectable = detectable(sys.A(), sys.C(), rank_tol);

  const RealMatrix uc = detail::krylov_basis(sys.A(), sys.B(), rank_tol);
  out.controllable_dim = uc.cols();
  if (uc.cols() == 0) return out;
  const RealMatrix ac = uc.transpose() * sys.A() * uc;
  const RealMatrix bc = uc.transpose() * sys.B();
  const RealMatrix cc = sys.C() * uc;

  // Observable subspace of the controllable part: Krylov space of (A^T, C^T).
  const RealMatrix vo = detail::krylov_basis(ac.transpose(), cc.transpose(), rank_tol);
  out.minimal_dim = vo.cols();
  if (vo.cols() == 0) return out;
  out.minimal.emplace(vo.transpose() * ac * vo, vo.transpose() * bc, cc * vo);
  return out;
}

// ---------------------------------------------------------------------------
// Parallel helpers

/// Worker count: hardware concurrency, capped by SYNCREGION_THREADS.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SYNCREGION_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) hw = std::min(hw, static_cast<unsigned>(cap));
  }
  return hw;
}

namespace detail {

/// Runs fn(i) for i in [0, count); each index is written by exactly one
/// worker, so results do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

}  // namespace syncregion
