#pragma once

// Synchronization analysis: region scans, the network criterion
// sigma(L~) in S(P, K) with a brute-force Kronecker oracle, output-feedback
// synchronizability searches with re-verifiable certificates, and Lyapunov
// certificates for membership.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "syncregion/freqdom.hpp"
#include "syncregion/graphnet.hpp"
#include "syncregion/numkernel.hpp"
#include "syncregion/system.hpp"

namespace syncregion {

// ---------------------------------------------------------------------------
// Region scans

/// Membership map of S(P, K) sampled at cell centers, row-major from
/// (re_min, im_min).
struct RegionGrid {
  ScanWindow window;
  ScanResolution resolution;
  std::vector<std::uint8_t> membership;
  std::vector<double> margin;

  [[nodiscard]] std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(resolution.nx) +
           static_cast<std::size_t>(ix);
  }
  [[nodiscard]] Complex center(int ix, int iy) const {
    const double dx = (window.re_max - window.re_min) / resolution.nx;
    const double dy = (window.im_max - window.im_min) / resolution.ny;
    return {window.re_min + (ix + 0.5) * dx, window.im_min + (iy + 0.5) * dy};
  }
  [[nodiscard]] bool member(int ix, int iy) const { return membership[index(ix, iy)] != 0; }
  [[nodiscard]] std::size_t member_count() const {
    return static_cast<std::size_t>(std::count(membership.begin(), membership.end(), 1));
  }
};

/// Evaluates region_membership on every cell center. For windows symmetric
/// about the real axis only the upper half is computed and then mirrored.
inline RegionGrid region_scan(const LtiSystem& sys, const GainMatrix& k, const ScanWindow& window,
                              const ScanResolution& res, double hurwitz_margin = 0.0) {
  check_gain(sys, k);
  if (res.nx < 2 || res.ny < 2) throw std::invalid_argument("region_scan: resolution must be >= 2x2");
  if (!(window.re_max > window.re_min) || !(window.im_max > window.im_min)) {
    throw std::invalid_argument("region_scan: empty window");
  }
  RegionGrid grid{window, res, {}, {}};
  const std::size_t cells = static_cast<std::size_t>(res.nx) * static_cast<std::size_t>(res.ny);
  grid.membership.assign(cells, 0);
  grid.margin.assign(cells, 0.0);

  const double span = std::max(std::abs(window.im_min), std::abs(window.im_max));
  const bool symmetric = std::abs(window.im_min + window.im_max) <= 1e-12 * std::max(1.0, span);
  const int rows = symmetric ? (res.ny + 1) / 2 : res.ny;
  // Row iy mirrors to ny-1-iy; for symmetric windows compute the upper rows.
  const auto row_of = [&](int r) { return symmetric ? res.ny - 1 - r : r; };

  detail::parallel_for(static_cast<std::size_t>(rows) * static_cast<std::size_t>(res.nx),
                       [&](std::size_t flat) {
                         const int r = static_cast<int>(flat / static_cast<std::size_t>(res.nx));
                         const int ix = static_cast<int>(flat % static_cast<std::size_t>(res.nx));
                         const int iy = row_of(r);
                         const RegionPoint p =
                             region_membership(sys, k, grid.center(ix, iy), hurwitz_margin);
                         grid.membership[grid.index(ix, iy)] = p.member ? 1 : 0;
                         grid.margin[grid.index(ix, iy)] = p.margin;
                       });
  if (symmetric) {
    for (int r = 0; r < rows; ++r) {
      const int src = row_of(r);
      const int dst = res.ny - 1 - src;
      if (dst == src) continue;
      for (int ix = 0; ix < res.nx; ++ix) {
        grid.membership[grid.index(ix, dst)] = grid.membership[grid.index(ix, src)];
        grid.margin[grid.index(ix, dst)] = grid.margin[grid.index(ix, src)];
      }
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Network criterion

/// The network synchronizes iff every eigenvalue of L~ lies in S(P, K).
inline SyncVerdict check_network_sync(const LtiSystem& sys, const GainMatrix& k,
                                      const WeightedDigraph& g, double hurwitz_margin = 0.0) {
  check_gain(sys, k);
  const ReducedInterconnection red = reduced_interconnection(g);
  if (!red.spectrum.valid) throw NumericalError("check_network_sync: eigensolver failed on L~");
  SyncVerdict out;
  for (const auto& lambda : red.spectrum.values) {
    const RegionPoint p = region_membership(sys, k, lambda, hurwitz_margin);
    out.eigenvalues.push_back({lambda, p.member, p.margin});
    if (std::abs(p.margin) <= kBoundaryGuard) out.determinate = false;
  }
  out.synchronizes = std::all_of(out.eigenvalues.begin(), out.eigenvalues.end(),
                                 [](const EigenvalueResult& e) { return e.in_region; });
  return out;
}

inline constexpr Eigen::Index kDefaultOracleMaxDimension = 200;

/// Brute force: I_{N-1} kron A - L~ kron BKC is Hurwitz.
inline bool check_network_sync_oracle(const LtiSystem& sys, const GainMatrix& k,
                                      const WeightedDigraph& g,
                                      Eigen::Index max_dimension = kDefaultOracleMaxDimension) {
  check_gain(sys, k);
  const Eigen::Index dim = sys.states() * (g.node_count() - 1);
  if (dim > max_dimension) {
    throw std::length_error("check_network_sync_oracle: n(N-1) = " + std::to_string(dim) +
                            " exceeds " + std::to_string(max_dimension));
  }
  const RealMatrix lt = reduced_interconnection(g).Ltilde;
  const RealMatrix bkc = sys.B() * k * sys.C();
  const RealMatrix m =
      kron(RealMatrix::Identity(g.node_count() - 1, g.node_count() - 1), sys.A()) - kron(lt, bkc);
  return is_hurwitz(m).verdict;
}

// ---------------------------------------------------------------------------
// Lyapunov certificates

struct LyapunovCheck {
  bool valid = false;
  ComplexMatrix P;
  double residual = std::numeric_limits<double>::infinity();
  double min_eigenvalue = -std::numeric_limits<double>::infinity();
  /// Why the certificate is invalid, if it is.
  std::string reason;
};

/// Raised when an operation's structural precondition on the system fails.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Solves (A - sBKC)* P + P (A - sBKC) = -(C^T C + C^T K^T K C) and accepts
/// iff P is Hermitian positive-semidefinite within tol * max(1, ||P||).
/// Requires (A, C) detectable.
inline LyapunovCheck verify_lyapunov_certificate(const LtiSystem& sys, const GainMatrix& k, Complex s,
                                                 double tol = 1e-8) {
  check_gain(sys, k);
  if (!detectable(sys.A(), sys.C())) {
    throw PreconditionError("verify_lyapunov_certificate: (A, C) must be detectable");
  }
  const RealMatrix kc = k * sys.C();
  const RealMatrix h = sys.C().transpose() * sys.C() + kc.transpose() * kc;
  const ComplexMatrix f =
      sys.A().cast<Complex>() - s * (sys.B() * k * sys.C()).cast<Complex>();
  LyapunovCheck out;
  try {
    const LyapunovSolution sol = solve_lyapunov(f, h.cast<Complex>());
    out.P = sol.P;
    out.residual = sol.residual;
  } catch (const NumericalError& e) {
    out.reason = e.what();
    return out;
  }
  out.min_eigenvalue = min_hermitian_eigenvalue(out.P);
  const double scale = std::max(1.0, out.P.norm());
  out.valid = out.min_eigenvalue >= -tol * scale;
  if (!out.valid) out.reason = "Lyapunov solution is indefinite";
  return out;
}

// ---------------------------------------------------------------------------
// Certificates and synchronizability search

enum class CertificateKind { kEvenRealPoint, kOddComplexPoint, kOfStabilizingGain, kLyapunov };

inline const char* to_string(CertificateKind kind) {
  switch (kind) {
    case CertificateKind::kEvenRealPoint: return "even-real-point";
    case CertificateKind::kOddComplexPoint: return "odd-complex-point";
    case CertificateKind::kOfStabilizingGain: return "of-stabilizing-gain";
    case CertificateKind::kLyapunov: return "lyapunov";
  }
  return "unknown";
}

inline std::optional<CertificateKind> certificate_kind_from_string(const std::string& s) {
  for (auto k : {CertificateKind::kEvenRealPoint, CertificateKind::kOddComplexPoint,
                 CertificateKind::kOfStabilizingGain, CertificateKind::kLyapunov}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

/// Witness that P^N is output-feedback synchronizable: A - point BKC is
/// Hurwitz, optionally with a graph realizing the point and a Lyapunov P.
struct Certificate {
  CertificateKind kind = CertificateKind::kEvenRealPoint;
  GainMatrix K;
  Complex point;
  int N = 0;
  std::optional<ComplexMatrix> P;
  std::optional<WeightedDigraph> graph;

  friend bool operator==(const Certificate&, const Certificate&) = default;
};

struct CertificateCheck {
  bool valid = false;
  std::string reason;
};

/// Independent re-verification of every claim a certificate makes.
inline CertificateCheck check_certificate(const LtiSystem& sys, const Certificate& cert,
                                          double tol = 1e-8) {
  try {
    check_gain(sys, cert.K);
  } catch (const DimensionError& e) {
    return {false, e.what()};
  }
  if (cert.kind == CertificateKind::kEvenRealPoint &&
      std::abs(cert.point.imag()) > 1e-12 * std::max(1.0, std::abs(cert.point))) {
    return {false, "even-real-point certificate carries a nonreal point"};
  }
  if (!region_membership(sys, cert.K, cert.point).member) {
    return {false, "A - sBKC is not Hurwitz at the certified point"};
  }
  if (cert.kind == CertificateKind::kLyapunov) {
    if (!cert.P) return {false, "lyapunov certificate without P"};
    const ComplexMatrix& p = *cert.P;
    if (p.rows() != sys.states() || p.cols() != sys.states()) return {false, "P has wrong size"};
    const RealMatrix kc = cert.K * sys.C();
    const ComplexMatrix h = (sys.C().transpose() * sys.C() + kc.transpose() * kc).cast<Complex>();
    const ComplexMatrix f =
        sys.A().cast<Complex>() - cert.point * (sys.B() * cert.K * sys.C()).cast<Complex>();
    const double scale = std::max(1.0, p.norm());
    if ((f.adjoint() * p + p * f + h).norm() > tol * scale * std::max(1.0, f.norm())) {
      return {false, "Lyapunov residual too large"};
    }
    if ((p - p.adjoint()).norm() > tol * scale) return {false, "P is not Hermitian"};
    if (min_hermitian_eigenvalue(p) < -tol * scale) return {false, "P is not positive-semidefinite"};
  } else if (cert.P) {
    return {false, "P present on a non-lyapunov certificate"};
  }
  if (cert.graph) {
    if (cert.N != 0 && cert.graph->node_count() != cert.N) return {false, "graph size differs from N"};
    if (!check_network_sync(sys, cert.K, *cert.graph).synchronizes) {
      return {false, "witness network does not synchronize"};
    }
  }
  return {true, {}};
}

enum class OfsStatus { kCertified, kNotOfs, kInconclusive };

inline const char* to_string(OfsStatus s) {
  switch (s) {
    case OfsStatus::kCertified: return "certified";
    case OfsStatus::kNotOfs: return "not-OFS";
    case OfsStatus::kInconclusive: return "inconclusive";
  }
  return "unknown";
}

struct SearchConfig {
  int gain_draws = 10000;  ///< Random gains for the even-N (real point) search.
  double gain_range = 10.0;  ///< Gain entries uniform in [-range, range].
  int odd_gain_draws = 64;  ///< Random gains each scanned over the s-grid.
  ScanWindow s_window{-10.0, 10.0, -10.0, 10.0};
  ScanResolution s_grid{101, 101};
  int refine_candidates = 8;  ///< Best draws handed to coordinate refinement.
  std::uint64_t seed = 1;
  bool attach_lyapunov = false;  ///< Upgrade odd certificates to kind lyapunov.
  double real_axis_range = 1e3;
};

struct OfsResult {
  OfsStatus status = OfsStatus::kInconclusive;
  std::optional<Certificate> certificate;
  std::string reason;
};

namespace detail {

// Gain draw `index` depends only on (seed, index).
inline GainMatrix draw_gain(const SearchConfig& cfg, Eigen::Index rows, Eigen::Index cols,
                            std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u(-cfg.gain_range, cfg.gain_range);
  GainMatrix k(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) k(i, j) = u(rng);
  return k;
}

inline double real_margin(const LtiSystem& sys, const GainMatrix& k) {
  return -spectral_abscissa(RealMatrix(sys.A() - sys.B() * k * sys.C()));
}

// Bass's construction on the controllable part: with -(A_c + beta I)
// Hurwitz, W solving (A_c + beta I) W + W (A_c + beta I)^T = 2 B_c B_c^T is
// positive definite and u = -B_c^T W^{-1} x_c places the spectrum on
// Re = -beta.
inline std::optional<RealMatrix> state_feedback_gain(const RealMatrix& a, const RealMatrix& b) {
  if (!stabilizable(a, b)) return std::nullopt;
  const Eigen::Index n = a.rows();
  const RealMatrix uc = krylov_basis(a, b, kDefaultRankTol);
  if (uc.cols() == 0) return RealMatrix::Zero(b.cols(), n);
  const RealMatrix ac = uc.transpose() * a * uc;
  const RealMatrix bc = uc.transpose() * b;
  const Spectrum spec = eigenvalues(ac);
  double min_re = 0.0;
  for (const auto& v : spec.values) min_re = std::min(min_re, v.real());
  const double beta = 1.0 - min_re;
  const RealMatrix shifted = ac + beta * RealMatrix::Identity(ac.rows(), ac.cols());
  // F* W + W F = -H with F = shifted^T, H = -2 B_c B_c^T.
  const LyapunovSolution sol =
      solve_lyapunov(shifted.transpose().cast<Complex>(), (-2.0 * bc * bc.transpose()).cast<Complex>());
  const RealMatrix w = sol.P.real();
  Eigen::LDLT<RealMatrix> ldlt(w);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
  const RealMatrix kc = bc.transpose() * ldlt.solve(RealMatrix::Identity(w.rows(), w.cols()));
  return RealMatrix(kc * uc.transpose());
}

// Greedy coordinate search on the stability margin of A - BKC.
inline GainMatrix refine_gain(const LtiSystem& sys, GainMatrix k, double& margin) {
  double step = 1.0;
  for (int iter = 0; iter < 400 && step > 1e-4 && margin <= 0.0; ++iter) {
    bool improved = false;
    for (Eigen::Index i = 0; i < k.size(); ++i) {
      for (double dir : {1.0, -1.0}) {
        GainMatrix trial = k;
        trial.data()[i] += dir * step;
        const double m = real_margin(sys, trial);
        if (m > margin) {
          margin = m;
          k = std::move(trial);
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return k;
}

inline OfsResult certify_real(const LtiSystem& sys, const GainMatrix& k, int n, CertificateKind kind,
                              const std::string& reason) {
  Certificate cert;
  cert.kind = kind;
  cert.K = k;
  cert.point = Complex(1.0, 0.0);
  cert.N = n;
  cert.graph = synthesize_graph_from_spectrum(cert.point, n);
  if (!region_membership(sys, k, cert.point).member) {
    throw NumericalError("certify_real: gain does not stabilize A - BKC");
  }
  return {OfsStatus::kCertified, std::move(cert), reason};
}

// Exact SISO real-axis decision: S(P, k) meets R for some k iff the stable
// Nyquist region meets R. Returns the intervals alongside any certificate.
inline std::pair<RealAxisIntervals, std::optional<OfsResult>> siso_real_axis(
    const LtiSystem& sys, const LtiSystem& minimal, int n, const SearchConfig& cfg) {
  const RationalTF h = transfer_function(minimal);
  const NyquistRegion region(h);
  RealAxisIntervals ri = real_axis_stable_intervals(region, cfg.real_axis_range);
  for (const auto& iv : ri.intervals) {
    // q in R_N  <=>  A - (-1/q) bc Hurwitz; try points spread over the interval.
    std::vector<double> probes{iv.representative()};
    if (std::isfinite(iv.lo) && std::isfinite(iv.hi)) {
      for (double t : {0.25, 0.75, 0.1, 0.9}) probes.push_back(iv.lo + t * (iv.hi - iv.lo));
    }
    for (double q : probes) {
      if (q == 0.0) continue;
      const GainMatrix k = scalar_gain(-1.0 / q);
      if (region_membership(sys, k, Complex(1.0, 0.0)).member) {
        return {std::move(ri), certify_real(sys, k, n, CertificateKind::kEvenRealPoint,
                                            "real point of the stable Nyquist region")};
      }
    }
  }
  return {std::move(ri), std::nullopt};
}

// Randomized output-feedback stabilization: draws, then coordinate
// refinement of the best few.
inline std::optional<GainMatrix> search_stabilizing_gain(const LtiSystem& sys, const SearchConfig& cfg) {
  std::vector<std::pair<double, GainMatrix>> best;
  for (int i = 0; i < cfg.gain_draws; ++i) {
    GainMatrix k = draw_gain(cfg, sys.inputs(), sys.outputs(), static_cast<std::uint64_t>(i));
    const double m = real_margin(sys, k);
    if (m > 0.0) return k;
    best.emplace_back(m, std::move(k));
  }
  std::stable_sort(best.begin(), best.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(std::max(0, cfg.refine_candidates)),
                                                  best.size());
  for (std::size_t i = 0; i < count; ++i) {
    double m = best[i].first;
    GainMatrix k = refine_gain(sys, best[i].second, m);
    if (m > 0.0) return k;
  }
  return std::nullopt;
}

}  // namespace detail

/// Decides or certifies output-feedback synchronizability of N copies of P.
/// Never reports not-OFS from search failure alone: only the
/// stabilizability/detectability gate or the exact SISO real-axis analysis
/// (even N) can.
inline OfsResult ofs_check(const LtiSystem& sys, int n, const SearchConfig& cfg = {}) {
  if (n < 2) throw std::invalid_argument("ofs_check: N must be >= 2");
  const KalmanDecomposition kd = kalman_minimal(sys);
  if (!kd.stabilizable) return {OfsStatus::kNotOfs, std::nullopt, "(A, B) is not stabilizable"};
  if (!kd.detectable) return {OfsStatus::kNotOfs, std::nullopt, "(A, C) is not detectable"};

  const GainMatrix zero = GainMatrix::Zero(sys.inputs(), sys.outputs());
  if (is_hurwitz(sys.A()).verdict) {
    return detail::certify_real(sys, zero, n, CertificateKind::kOfStabilizingGain, "A is Hurwitz");
  }

  // State feedback through a left-invertible C.
  Eigen::ColPivHouseholderQR<RealMatrix> cqr(sys.C());
  if (cqr.rank() == sys.states()) {
    if (auto ks = detail::state_feedback_gain(sys.A(), sys.B())) {
      const RealMatrix c_pinv = (sys.C().transpose() * sys.C()).ldlt().solve(sys.C().transpose());
      const GainMatrix k = *ks * c_pinv;
      if (detail::real_margin(sys, k) > 0.0) {
        return detail::certify_real(sys, k, n, CertificateKind::kOfStabilizingGain,
                                    "stabilizing state feedback");
      }
    }
  }

  const bool siso = sys.is_siso();
  // A real point p of S(P, K) serves every N through the complete graph p/N.
  const auto real_point = [&]() -> std::variant<OfsResult, bool> {
    if (siso) {
      if (!kd.minimal) return false;
      auto [ri, cert] = detail::siso_real_axis(sys, *kd.minimal, n, cfg);
      if (cert) return *cert;
      return !ri.empty();
    }
    if (auto k = detail::search_stabilizing_gain(sys, cfg)) {
      return detail::certify_real(sys, *k, n, CertificateKind::kOfStabilizingGain,
                                  "output-feedback stabilizing gain");
    }
    return true;
  };

  if (n % 2 == 0) {
    auto r = real_point();
    if (auto* res = std::get_if<OfsResult>(&r)) return *res;
    if (siso && !std::get<bool>(r)) {
      return {OfsStatus::kNotOfs, std::nullopt, "stable Nyquist region does not meet the real axis"};
    }
    return {OfsStatus::kInconclusive, std::nullopt, "no output-feedback stabilizing gain found"};
  }

  // Odd N: any point of S(P, K) works. For SISO, S(P, k) = S(P, 1) / k, so
  // only the sign of k matters.
  std::vector<GainMatrix> gains;
  if (siso) {
    gains = {scalar_gain(1.0), scalar_gain(-1.0)};
  } else {
    for (int i = 0; i < cfg.odd_gain_draws; ++i)
      gains.push_back(detail::draw_gain(cfg, sys.inputs(), sys.outputs(), static_cast<std::uint64_t>(i)));
  }
  ScanWindow sym = cfg.s_window;
  sym.im_max = std::max(std::abs(cfg.s_window.im_min), std::abs(cfg.s_window.im_max));
  sym.im_min = -sym.im_max;
  for (const auto& k : gains) {
    const RegionGrid grid = region_scan(sys, k, sym, cfg.s_grid);
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < grid.membership.size(); ++i) {
      if (grid.membership[i] && (!best || grid.margin[i] > grid.margin[*best])) best = i;
    }
    if (!best) continue;
    const int ix = static_cast<int>(*best % static_cast<std::size_t>(grid.resolution.nx));
    const int iy = static_cast<int>(*best / static_cast<std::size_t>(grid.resolution.nx));
    Complex s = grid.center(ix, iy);
    if (s.imag() < 0.0) s = std::conj(s);
    Certificate cert;
    cert.kind = CertificateKind::kOddComplexPoint;
    cert.K = k;
    cert.point = s;
    cert.N = n;
    cert.graph = synthesize_graph_from_spectrum(s, n);
    if (cfg.attach_lyapunov && detectable(sys.A(), sys.C())) {
      const LyapunovCheck lc = verify_lyapunov_certificate(sys, k, s);
      if (lc.valid) {
        cert.kind = CertificateKind::kLyapunov;
        cert.P = lc.P;
      }
    }
    return {OfsStatus::kCertified, std::move(cert), "point of the synchronization region"};
  }
  auto r = real_point();
  if (auto* res = std::get_if<OfsResult>(&r)) return *res;
  return {OfsStatus::kInconclusive, std::nullopt,
          "no synchronization-region point found in the search window"};
}

}  // namespace syncregion
