#pragma once

// SISO frequency-domain tools: rational transfer functions, the indented
// Nyquist contour and its winding numbers, the stable Nyquist region
// {q : W(gamma, q) = p+}, its real-axis intervals, the parity-interlacing
// property, the Routh array, and closed-form synchronization conditions for
// second-order agents.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "syncregion/graphnet.hpp"
#include "syncregion/numkernel.hpp"
#include "syncregion/system.hpp"

namespace syncregion {

/// Raised when a query point lies within the exclusion distance of a contour.
class OnContourError : public std::runtime_error {
 public:
  OnContourError() : std::runtime_error("on-contour, membership undefined") {}
};

inline constexpr double kPoleCancelTol = 1e-7;
// Repeated roots come back from the companion eigensolver with errors near
// sqrt(machine epsilon), so the axis band is wider than roundoff.
inline constexpr double kRhpTol = 1e-7;

/// Strictly proper H(s) = N(s) / D(s) with D monic and common roots removed.
class RationalTF {
 public:
  RationalTF(Polynomial num, Polynomial den, double cancel_tol = kPoleCancelTol) {
    if (den.is_zero() || den.degree() < 1) {
      if (!(den.degree() == 0 && num.is_zero())) {
        throw std::invalid_argument("RationalTF: denominator must have degree >= 1");
      }
    }
    if (!num.is_zero() && num.degree() >= den.degree()) {
      throw std::invalid_argument("RationalTF: transfer function must be strictly proper");
    }
    const double lead = den.leading();
    num_ = (1.0 / lead) * num;
    den_ = (1.0 / lead) * den;
    if (den_.degree() >= 1) cancel_common_roots(cancel_tol);
    classify();
  }

  /// The identically-zero transfer function.
  static RationalTF zero() { return RationalTF(Polynomial{}, Polynomial({1.0})); }

  [[nodiscard]] const Polynomial& num() const { return num_; }
  [[nodiscard]] const Polynomial& den() const { return den_; }
  [[nodiscard]] const std::vector<Complex>& poles() const { return poles_; }
  [[nodiscard]] const std::vector<Complex>& zeros() const { return zeros_; }
  /// Poles with Re > kRhpTol.
  [[nodiscard]] int p_plus() const { return p_plus_; }
  /// Distinct omega_i with a pole at i omega_i, ascending.
  [[nodiscard]] const std::vector<double>& imag_poles() const { return imag_poles_; }
  [[nodiscard]] int relative_degree() const {
    return num_.is_zero() ? 0 : den_.degree() - num_.degree();
  }
  [[nodiscard]] bool is_zero() const { return num_.is_zero(); }

  [[nodiscard]] Complex operator()(Complex s) const { return num_(s) / den_(s); }

 private:
  void cancel_common_roots(double tol) {
    if (num_.is_zero() || num_.degree() < 1) {
      poles_ = poly_roots(den_).values;
      if (!num_.is_zero()) zeros_.clear();
      return;
    }
    std::vector<Complex> z = poly_roots(num_).values;
    std::vector<Complex> p = poly_roots(den_).values;
    bool cancelled = false;
    for (auto zi = z.begin(); zi != z.end();) {
      auto best = p.end();
      double best_d = std::numeric_limits<double>::infinity();
      for (auto pi = p.begin(); pi != p.end(); ++pi) {
        const double d = std::abs(*pi - *zi);
        if (d < best_d) {
          best_d = d;
          best = pi;
        }
      }
      if (best != p.end() && best_d <= tol * std::max(1.0, std::abs(*zi))) {
        p.erase(best);
        zi = z.erase(zi);
        cancelled = true;
      } else {
        ++zi;
      }
    }
    if (cancelled) {
      const double gain = num_.leading();
      num_ = gain * real_from_roots(z);
      den_ = real_from_roots(p);
    }
    zeros_ = std::move(z);
    poles_ = std::move(p);
  }

  static Polynomial real_from_roots(const std::vector<Complex>& roots) {
    const ComplexPolynomial c = ComplexPolynomial::from_roots(roots);
    std::vector<double> re;
    for (const auto& x : c.coefficients()) re.push_back(x.real());
    return Polynomial(std::move(re));
  }

  void classify() {
    p_plus_ = 0;
    imag_poles_.clear();
    for (const auto& p : poles_) {
      const double scale = std::max(1.0, std::abs(p));
      if (p.real() > kRhpTol * scale) {
        ++p_plus_;
      } else if (std::abs(p.real()) <= kRhpTol * scale) {
        const double w = p.imag();
        const bool seen = std::any_of(imag_poles_.begin(), imag_poles_.end(),
                                      [&](double x) { return std::abs(x - w) <= 1e-6 * scale; });
        if (!seen) imag_poles_.push_back(w);
      }
    }
    std::sort(imag_poles_.begin(), imag_poles_.end());
  }

  Polynomial num_, den_;
  std::vector<Complex> poles_, zeros_;
  int p_plus_ = 0;
  std::vector<double> imag_poles_;
};

/// H(s) = c (sI - A)^{-1} b of the minimal realization. Non-minimal input is
/// reduced first; throws DimensionError for non-SISO systems.
inline RationalTF transfer_function(const LtiSystem& sys) {
  if (!sys.is_siso()) throw DimensionError("transfer_function: system must be SISO");
  const KalmanDecomposition kd = kalman_minimal(sys);
  if (!kd.minimal) return RationalTF::zero();
  const LtiSystem& m = *kd.minimal;
  auto [den, num] = char_poly_and_numerator(m.A(), m.B().col(0), m.C().row(0));
  // Faddeev-LeVerrier leaves roundoff where exact coefficients vanish; left
  // in place it splits repeated imaginary-axis poles off the axis.
  const auto clean = [](const Polynomial& p) {
    std::vector<double> c = p.coefficients();
    double scale = 0.0;
    for (double x : c) scale = std::max(scale, std::abs(x));
    for (double& x : c)
      if (std::abs(x) <= 1e-12 * scale) x = 0.0;
    return Polynomial(std::move(c));
  };
  return RationalTF(clean(num), clean(den));
}

// ---------------------------------------------------------------------------
// Nyquist contour

struct NyquistSample {
  double omega = 0.0;
  Complex s;      ///< Point on the indented imaginary axis.
  Complex value;  ///< H(s).
  int segment = 0;  ///< 0 on the imaginary axis, k >= 1 on the k-th indentation.
};

/// gamma_eps(omega) for omega in [-Omega, Omega], closed through the limit
/// point gamma(+-inf) = 0.
class NyquistCurve {
 public:
  NyquistCurve(const RationalTF& h, double epsilon, int samples_per_decade = 40)
      : h_(h), eps_(epsilon) {
    if (samples_per_decade < 4) throw std::invalid_argument("nyquist_contour: too few samples");
    const auto& wp = h_.imag_poles();
    if (!wp.empty()) {
      if (!(epsilon > 0.0)) throw std::invalid_argument("nyquist_contour: epsilon must be positive");
      for (std::size_t i = 1; i < wp.size(); ++i) {
        if (epsilon >= 0.5 * (wp[i] - wp[i - 1])) {
          throw std::invalid_argument(
              "nyquist_contour: epsilon too large for the imaginary-axis pole gap");
        }
      }
    }
    build(samples_per_decade);
  }

  [[nodiscard]] const std::vector<NyquistSample>& samples() const { return samples_; }
  [[nodiscard]] double epsilon() const { return eps_; }
  [[nodiscard]] double omega_max() const { return omega_max_; }
  [[nodiscard]] const RationalTF& transfer_function() const { return h_; }

  /// Point of the indented path at parameter omega.
  [[nodiscard]] NyquistSample at(double omega) const {
    const auto& wp = h_.imag_poles();
    for (std::size_t i = 0; i < wp.size(); ++i) {
      if (std::abs(omega - wp[i]) < eps_) {
        const Complex s = Complex(0.0, wp[i]) +
                          eps_ * std::exp(Complex(0.0, std::numbers::pi / (2.0 * eps_) * (omega - wp[i])));
        return {omega, s, h_(s), static_cast<int>(i) + 1};
      }
    }
    const Complex s(0.0, omega);
    return {omega, s, h_(s), 0};
  }

  /// Smallest distance from q to the sampled polygon (including the closure).
  [[nodiscard]] double distance_to(Complex q) const {
    double d = std::abs(q);
    Complex prev(0.0, 0.0);
    for (const auto& smp : samples_) {
      d = std::min(d, segment_distance(q, prev, smp.value));
      prev = smp.value;
    }
    return std::min(d, segment_distance(q, prev, Complex(0.0, 0.0)));
  }

  static double segment_distance(Complex q, Complex a, Complex b) {
    const Complex ab = b - a;
    const double len2 = std::norm(ab);
    if (len2 == 0.0) return std::abs(q - a);
    const double t = std::clamp(((q - a) * std::conj(ab)).real() / len2, 0.0, 1.0);
    return std::abs(q - (a + t * ab));
  }

 private:
  void build(int per_decade) {
    std::vector<double> freqs{1.0};
    for (const auto& p : h_.poles())
      if (std::abs(p) > 0.0) freqs.push_back(std::abs(p));
    for (const auto& z : h_.zeros())
      if (std::abs(z) > 0.0) freqs.push_back(std::abs(z));
    const double f_lo = *std::min_element(freqs.begin(), freqs.end());
    const double f_hi = *std::max_element(freqs.begin(), freqs.end());
    double w_lo = f_lo * 1e-3;
    if (eps_ > 0.0) w_lo = std::min(w_lo, 0.5 * eps_);

    const auto inside_indent = [&](double w) {
      for (double wi : h_.imag_poles())
        if (std::abs(w - wi) <= eps_) return true;
      return false;
    };

    // Magnitude scale on the regular axis, used to truncate the tail.
    double h_max = 0.0;
    for (double w = w_lo; w <= 10.0 * f_hi; w *= 1.25) {
      for (double sgn : {-1.0, 1.0}) {
        if (!inside_indent(sgn * w)) h_max = std::max(h_max, std::abs(h_(Complex(0.0, sgn * w))));
      }
    }
    if (!inside_indent(0.0)) h_max = std::max(h_max, std::abs(h_(Complex(0.0, 0.0))));
    omega_max_ = 10.0 * f_hi;
    const double floor_mag = 1e-6 * std::max(h_max, std::numeric_limits<double>::min());
    while (omega_max_ < 1e12 && (std::abs(h_(Complex(0.0, omega_max_))) > floor_mag ||
                                 std::abs(h_(Complex(0.0, -omega_max_))) > floor_mag)) {
      omega_max_ *= 2.0;
    }

    std::vector<double> omegas;
    const double decades = std::log10(omega_max_ / w_lo);
    const int count = std::max(2, static_cast<int>(std::ceil(decades * per_decade)));
    for (int i = 0; i <= count; ++i) {
      const double w = w_lo * std::pow(omega_max_ / w_lo, static_cast<double>(i) / count);
      omegas.push_back(w);
      omegas.push_back(-w);
    }
    omegas.push_back(0.0);
    for (double wi : h_.imag_poles()) {
      const int arc = 64;
      for (int i = 0; i <= arc; ++i) omegas.push_back(wi - eps_ + 2.0 * eps_ * i / arc);
    }
    std::sort(omegas.begin(), omegas.end());
    omegas.erase(std::unique(omegas.begin(), omegas.end()), omegas.end());

    // Drop exact pole frequencies on the regular path (H undefined there).
    std::vector<NyquistSample> raw;
    raw.reserve(omegas.size());
    for (double w : omegas) {
      NyquistSample smp = at(w);
      if (!std::isfinite(smp.value.real()) || !std::isfinite(smp.value.imag())) continue;
      raw.push_back(smp);
    }

    // Refine so consecutive values move by at most 10% of their magnitude.
    samples_.clear();
    samples_.reserve(raw.size() * 2);
    for (std::size_t i = 0; i + 1 < raw.size(); ++i) {
      samples_.push_back(raw[i]);
      refine(raw[i], raw[i + 1], 0);
    }
    if (!raw.empty()) samples_.push_back(raw.back());
  }

  void refine(const NyquistSample& a, const NyquistSample& b, int depth) {
    const double scale = std::min(std::abs(a.value), std::abs(b.value));
    if (depth >= 12 || std::abs(b.value - a.value) <= 0.1 * scale) return;
    const NyquistSample mid = at(0.5 * (a.omega + b.omega));
    refine(a, mid, depth + 1);
    samples_.push_back(mid);
    refine(mid, b, depth + 1);
  }

  RationalTF h_;
  double eps_;
  double omega_max_ = 0.0;
  std::vector<NyquistSample> samples_;
};

inline NyquistCurve nyquist_contour(const RationalTF& h, double epsilon, int samples_per_decade = 40) {
  return NyquistCurve(h, epsilon, samples_per_decade);
}

inline constexpr double kDefaultOnContourDistance = 1e-6;

namespace detail {

class WindingAccumulator {
 public:
  WindingAccumulator(const NyquistCurve& curve, Complex q, double delta)
      : curve_(curve), q_(q), delta_(delta) {}

  double chord(Complex a, Complex b) const {
    if (NyquistCurve::segment_distance(q_, a, b) < delta_) throw OnContourError();
    return std::arg((b - q_) / (a - q_));
  }

  // Angle swept by the true curve between two samples, bisecting in omega
  // until every chord is short relative to its distance from q.
  double arc(const NyquistSample& a, const NyquistSample& b, int depth) const {
    const Complex da = a.value - q_;
    const Complex db = b.value - q_;
    if (std::abs(da) < delta_ || std::abs(db) < delta_) throw OnContourError();
    const double inc = std::arg(db / da);
    const double len = std::abs(b.value - a.value);
    const bool coarse = std::abs(inc) > std::numbers::pi / 6.0 ||
                        len > 0.5 * std::min(std::abs(da), std::abs(db));
    if (coarse && depth < 60 && b.omega - a.omega > 1e-15 * std::max(1.0, std::abs(a.omega))) {
      const NyquistSample mid = curve_.at(0.5 * (a.omega + b.omega));
      return arc(a, mid, depth + 1) + arc(mid, b, depth + 1);
    }
    if (NyquistCurve::segment_distance(q_, a.value, b.value) < delta_) throw OnContourError();
    return inc;
  }

 private:
  const NyquistCurve& curve_;
  Complex q_;
  double delta_;
};

}  // namespace detail

/// Counterclockwise winding number of the closed contour around q. Throws
/// OnContourError if q is within `delta` of the curve.
inline int winding_number(const NyquistCurve& curve, Complex q,
                          double delta = kDefaultOnContourDistance) {
  const auto& smp = curve.samples();
  if (smp.empty()) {
    if (std::abs(q) < delta) throw OnContourError();
    return 0;
  }
  detail::WindingAccumulator acc(curve, q, delta);
  const Complex origin(0.0, 0.0);
  double total = acc.chord(origin, smp.front().value);
  for (std::size_t i = 0; i + 1 < smp.size(); ++i) total += acc.arc(smp[i], smp[i + 1], 0);
  total += acc.chord(smp.back().value, origin);
  return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

struct NyquistMembership {
  bool member = false;
  /// False when q is on a contour or the epsilon ladder disagrees.
  bool determinate = true;
  int winding = 0;
};

/// Stable Nyquist region R_N = {q : W(gamma, q) = p+}, with the indentation
/// limit realized as agreement across a decreasing epsilon ladder.
class NyquistRegion {
 public:
  explicit NyquistRegion(const RationalTF& h, int samples_per_decade = 40) : h_(h) {
    const auto& wp = h_.imag_poles();
    if (wp.empty()) {
      contours_.emplace_back(h_, 0.0, samples_per_decade);
      return;
    }
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < wp.size(); ++i) gap = std::min(gap, wp[i] - wp[i - 1]);
    const double shrink = std::min(1.0, 0.25 * gap / 1e-2);
    for (double eps : {1e-2, 1e-3, 1e-4}) contours_.emplace_back(h_, eps * shrink, samples_per_decade);
  }

  [[nodiscard]] const RationalTF& transfer_function() const { return h_; }
  [[nodiscard]] const std::vector<NyquistCurve>& contours() const { return contours_; }
  /// The finest contour of the ladder.
  [[nodiscard]] const NyquistCurve& finest() const { return contours_.back(); }

  [[nodiscard]] NyquistMembership membership(Complex q,
                                             double delta = kDefaultOnContourDistance) const {
    NyquistMembership out;
    const std::size_t k = contours_.size();
    std::optional<int> last, previous;
    try {
      last = winding_number(contours_[k - 1], q, delta);
      if (k >= 2) previous = winding_number(contours_[k - 2], q, delta);
    } catch (const OnContourError&) {
      out.determinate = false;
      return out;
    }
    out.winding = *last;
    if (previous && *previous != *last) {
      out.determinate = false;
      return out;
    }
    out.member = out.winding == h_.p_plus();
    return out;
  }

 private:
  RationalTF h_;
  std::vector<NyquistCurve> contours_;
};

inline NyquistMembership stable_region_membership(const RationalTF& h, Complex q) {
  return NyquistRegion(h).membership(q);
}

/// s -> -1/(s k); self-inverse for fixed k.
inline Complex lemma5_map(double k, Complex s) {
  if (k == 0.0) throw std::invalid_argument("lemma5_map: k must be nonzero");
  if (s == Complex(0.0, 0.0)) throw std::invalid_argument("lemma5_map: s must be nonzero");
  return -1.0 / (s * k);
}

/// Network test through the stable Nyquist region: synchronizes iff
/// -1/(k lambda_i) lies in R_N for every eigenvalue of L~.
inline SyncVerdict nyquist_sync_check(const LtiSystem& sys, double k, const WeightedDigraph& g) {
  if (!sys.is_siso()) throw DimensionError("nyquist_sync_check: system must be SISO");
  if (k == 0.0) throw std::invalid_argument("nyquist_sync_check: k must be nonzero");
  const KalmanDecomposition kd = kalman_minimal(sys);
  const ReducedInterconnection red = reduced_interconnection(g);
  const HurwitzResult a_stable = is_hurwitz(sys.A());

  SyncVerdict out;
  const bool gate = kd.stabilizable && kd.detectable;
  std::optional<NyquistRegion> region;
  if (gate && kd.minimal) region.emplace(transfer_function(*kd.minimal));

  for (const auto& lambda : red.spectrum.values) {
    EigenvalueResult r{lambda, false, 0.0};
    const double scale = std::max(1.0, red.Ltilde.norm());
    if (!gate) {
      // Unstabilizable or undetectable agents: the region is empty.
      r.in_region = false;
      r.margin = a_stable.stability_margin;
    } else if (!region || std::abs(lambda) <= 1e-12 * scale) {
      // Zero eigenvalue or trivial H: the mode evolves under A alone.
      r.in_region = a_stable.verdict;
      r.margin = a_stable.stability_margin;
    } else {
      const Complex q = -1.0 / (k * lambda);
      const NyquistMembership m = region->membership(q);
      if (!m.determinate) out.determinate = false;
      r.in_region = m.member;
      const double d = region->finest().distance_to(q);
      r.margin = m.member ? d : -d;
    }
    out.eigenvalues.push_back(r);
  }
  out.synchronizes = std::all_of(out.eigenvalues.begin(), out.eigenvalues.end(),
                                 [](const EigenvalueResult& e) { return e.in_region; });
  return out;
}

// ---------------------------------------------------------------------------
// Real-axis analysis

struct RealInterval {
  double lo = 0.0;  ///< may be -inf
  double hi = 0.0;  ///< may be +inf
  [[nodiscard]] bool contains(double x) const { return x > lo && x < hi; }
  [[nodiscard]] double representative() const {
    if (std::isinf(lo) && std::isinf(hi)) return 1.0;
    if (std::isinf(lo)) return hi - std::max(1.0, std::abs(hi));
    if (std::isinf(hi)) return lo + std::max(1.0, std::abs(lo));
    return 0.5 * (lo + hi);
  }
  friend bool operator==(const RealInterval&, const RealInterval&) = default;
};

/// Open intervals of R inside the stable Nyquist region, sorted and disjoint.
struct RealAxisIntervals {
  std::vector<RealInterval> intervals;
  /// Breakpoints used: real-axis crossings of the contour plus the origin.
  std::vector<double> crossings;
  [[nodiscard]] bool empty() const { return intervals.empty(); }
  /// True if any interval meets [-range, range].
  [[nodiscard]] bool intersects(double range) const {
    return std::any_of(intervals.begin(), intervals.end(),
                       [&](const RealInterval& i) { return i.lo < range && i.hi > -range; });
  }
};

namespace detail {

// Real polynomial whose real roots omega are the frequencies where
// Im H(i omega) = 0, i.e. Im[N(i omega) D(-i omega)].
inline Polynomial crossing_polynomial(const RationalTF& h) {
  const auto to_omega = [](const Polynomial& p, Complex unit) {
    std::vector<Complex> c;
    Complex power(1.0, 0.0);
    for (double x : p.coefficients()) {
      c.push_back(x * power);
      power *= unit;
    }
    return ComplexPolynomial(std::move(c));
  };
  const ComplexPolynomial prod =
      to_omega(h.num(), Complex(0.0, 1.0)) * to_omega(h.den(), Complex(0.0, -1.0));
  std::vector<double> im;
  double scale = 0.0;
  for (const auto& x : prod.coefficients()) scale = std::max(scale, std::abs(x));
  for (const auto& x : prod.coefficients())
    im.push_back(std::abs(x.imag()) <= 1e-14 * scale ? 0.0 : x.imag());
  return Polynomial(std::move(im));
}

}  // namespace detail

/// Exact decomposition of the real axis by the contour's real crossings;
/// one interior test point per component. Empty for every k means
/// S(P, k) meets the real axis for no k.
inline RealAxisIntervals real_axis_stable_intervals(const NyquistRegion& region,
                                                    double scan_range = 1e3) {
  const RationalTF& h = region.transfer_function();
  RealAxisIntervals out;
  std::vector<double> breaks{0.0};
  if (!h.is_zero()) {
    const Polynomial cp = detail::crossing_polynomial(h);
    if (cp.is_zero()) {
      // Contour lies on the real axis: its extent bounds the breakpoints.
      for (const auto& smp : region.finest().samples())
        if (smp.segment == 0) breaks.push_back(smp.value.real());
    } else if (cp.degree() >= 1) {
      for (const auto& w : poly_roots(cp).values) {
        if (std::abs(w.imag()) > 1e-7 * std::max(1.0, std::abs(w))) continue;
        const Complex s(0.0, w.real());
        if (std::abs(h.den()(s)) <= 1e-9 * std::max(1.0, std::abs(h.num()(s)))) continue;
        const Complex v = h(s);
        if (std::isfinite(v.real())) breaks.push_back(v.real());
      }
    }
  }
  std::sort(breaks.begin(), breaks.end());
  std::vector<double> uniq;
  for (double b : breaks)
    if (uniq.empty() || std::abs(b - uniq.back()) > 1e-9 * std::max(1.0, std::abs(b)))
      uniq.push_back(b);
  out.crossings = uniq;

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<RealInterval> candidates;
  candidates.push_back({-inf, uniq.front()});
  for (std::size_t i = 0; i + 1 < uniq.size(); ++i) candidates.push_back({uniq[i], uniq[i + 1]});
  candidates.push_back({uniq.back(), inf});

  for (const auto& c : candidates) {
    double x = c.representative();
    // Tail components are probed at least 2R out.
    if (std::isinf(c.lo)) x = std::min(x, -2.0 * scan_range);
    if (std::isinf(c.hi)) x = std::max(x, 2.0 * scan_range);
    const NyquistMembership m = region.membership(Complex(x, 0.0));
    if (m.determinate && m.member) out.intervals.push_back(c);
  }
  return out;
}

inline RealAxisIntervals real_axis_stable_intervals(const RationalTF& h, double scan_range = 1e3) {
  return real_axis_stable_intervals(NyquistRegion(h), scan_range);
}

/// Parity-interlacing: an even number of real poles between every pair of
/// consecutive real zeros in [0, +inf], the zero at infinity included.
inline bool pip_check(const RationalTF& h, double tol = 1e-9) {
  const auto nonneg_real = [&](const std::vector<Complex>& roots) {
    std::vector<double> out;
    for (const auto& r : roots) {
      const double scale = std::max(1.0, std::abs(r));
      if (std::abs(r.imag()) <= tol * scale && r.real() >= -tol * scale)
        out.push_back(std::max(0.0, r.real()));
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  std::vector<double> zs = nonneg_real(h.zeros());
  for (int i = 0; i < h.relative_degree(); ++i) zs.push_back(std::numeric_limits<double>::infinity());
  const std::vector<double> ps = nonneg_real(h.poles());
  for (std::size_t i = 0; i + 1 < zs.size(); ++i) {
    const auto between = std::count_if(ps.begin(), ps.end(),
                                       [&](double p) { return p > zs[i] && p < zs[i + 1]; });
    if (between % 2 != 0) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Routh array

struct RouthResult {
  bool hurwitz = false;
  /// Sign changes in the first column (open right-half-plane roots when no
  /// zero row occurred).
  int sign_changes = 0;
  /// A zero first-column entry or an all-zero row was met.
  bool zero_pivot = false;
  std::vector<double> first_column;
};

inline RouthResult routh_array(const Polynomial& p) {
  if (p.is_zero()) throw std::invalid_argument("routh_hurwitz: zero polynomial");
  if (p.degree() < 1) throw std::invalid_argument("routh_hurwitz: degree must be >= 1");
  const int n = p.degree();
  double scale = 0.0;
  for (double c : p.coefficients()) scale = std::max(scale, std::abs(c));
  const double zero_tol = 1e-12 * scale;
  const double sign = p.leading() > 0.0 ? 1.0 : -1.0;

  const std::size_t width = static_cast<std::size_t>(n / 2 + 1);
  std::vector<std::vector<double>> rows(2, std::vector<double>(width, 0.0));
  for (int k = 0; k <= n; ++k) {
    const double c = sign * p[static_cast<std::size_t>(n - k)];
    rows[static_cast<std::size_t>(k % 2)][static_cast<std::size_t>(k / 2)] = c;
  }

  RouthResult out;
  for (int r = 1; r <= n; ++r) {
    auto& cur = rows[static_cast<std::size_t>(r)];
    const bool all_zero =
        std::all_of(cur.begin(), cur.end(), [&](double x) { return std::abs(x) <= zero_tol; });
    if (all_zero) {
      // Auxiliary polynomial from the previous row; use its derivative.
      out.zero_pivot = true;
      const auto& prev = rows[static_cast<std::size_t>(r - 1)];
      const int deg = n - (r - 1);
      for (std::size_t j = 0; j < width; ++j) {
        const int power = deg - 2 * static_cast<int>(j);
        cur[j] = power > 0 ? prev[j] * power : 0.0;
      }
    }
    if (std::abs(cur[0]) <= zero_tol) {
      out.zero_pivot = true;
      cur[0] = 1e-9 * std::max(scale, 1.0);
    }
    if (r == n) break;
    std::vector<double> next(width, 0.0);
    const auto& prev = rows[static_cast<std::size_t>(r - 1)];
    for (std::size_t j = 0; j + 1 < width; ++j) {
      next[j] = (cur[0] * prev[j + 1] - prev[0] * cur[j + 1]) / cur[0];
    }
    rows.push_back(std::move(next));
  }
  for (int r = 0; r <= n; ++r) out.first_column.push_back(rows[static_cast<std::size_t>(r)][0]);
  for (std::size_t i = 1; i < out.first_column.size(); ++i)
    if ((out.first_column[i] > 0.0) != (out.first_column[i - 1] > 0.0)) ++out.sign_changes;
  out.hurwitz = !out.zero_pivot && std::all_of(out.first_column.begin(), out.first_column.end(),
                                                [](double x) { return x > 0.0; });
  return out;
}

/// All roots in the open left half plane.
inline bool routh_hurwitz(const Polynomial& p) { return routh_array(p).hurwitz; }

// ---------------------------------------------------------------------------
// Closed forms for second-order agents

struct ClosedFormVerdict {
  bool synchronizes = false;
  /// Set when the inequality could not be evaluated.
  std::optional<std::string> reason;
};

/// Double integrator with C = [c d]: (Im l)^2 / (k |l|^2 Re l) < d^2 / c
/// and k Re l > 0.
inline ClosedFormVerdict closed_form_double_integrator(Complex lambda, double k, double c, double d) {
  if (c == 0.0) throw std::invalid_argument("closed_form_double_integrator: c must be nonzero");
  if (d < 0.0) throw std::invalid_argument("closed_form_double_integrator: d must be >= 0");
  if (lambda == Complex(0.0, 0.0)) throw std::invalid_argument("closed_form_double_integrator: lambda = 0");
  if (!(k * lambda.real() > 0.0)) return {false, std::nullopt};
  const double lhs = lambda.imag() * lambda.imag() / (k * std::norm(lambda) * lambda.real());
  return {lhs < d * d / c, std::nullopt};
}

/// Harmonic oscillator with C = [c d]:
/// (Im l)^2/(Re l)^2 - k d^2 |l|^2 / (c Re l) < d^2/c^2 and k Re l > 0;
/// for c = 0 only k Re l > 0.
inline ClosedFormVerdict closed_form_harmonic(Complex lambda, double k, double c, double d) {
  if (d < 0.0) throw std::invalid_argument("closed_form_harmonic: d must be >= 0");
  if (c == 0.0) return {k * lambda.real() > 0.0, std::nullopt};
  if (lambda.real() == 0.0) return {false, "Re lambda = 0: inequality undefined"};
  if (!(k * lambda.real() > 0.0)) return {false, std::nullopt};
  const double re = lambda.real();
  const double lhs = lambda.imag() * lambda.imag() / (re * re) - k * d * d * std::norm(lambda) / (c * re);
  return {lhs < d * d / (c * c), std::nullopt};
}

// ---------------------------------------------------------------------------
// Low-order consistency: a nonempty stable Nyquist region must meet the real
// axis.

struct ScanWindow {
  double re_min = -10.0, re_max = 10.0, im_min = -10.0, im_max = 10.0;
  friend bool operator==(const ScanWindow&, const ScanWindow&) = default;
};

struct ScanResolution {
  int nx = 101, ny = 101;
  friend bool operator==(const ScanResolution&, const ScanResolution&) = default;
};

/// First cell center, in row-major order from the bottom-left corner, that is
/// a determinate member of the region.
inline std::optional<Complex> find_region_point(const NyquistRegion& region, const ScanWindow& window = {},
                                                const ScanResolution& res = {}) {
  if (res.nx < 1 || res.ny < 1 || !(window.re_max > window.re_min) || !(window.im_max > window.im_min)) {
    throw std::invalid_argument("find_region_point: empty window or resolution");
  }
  for (int iy = 0; iy < res.ny; ++iy) {
    const double y = window.im_min + (iy + 0.5) * (window.im_max - window.im_min) / res.ny;
    for (int ix = 0; ix < res.nx; ++ix) {
      const double x = window.re_min + (ix + 0.5) * (window.re_max - window.re_min) / res.nx;
      const NyquistMembership m = region.membership(Complex(x, y));
      if (m.determinate && m.member) return Complex(x, y);
    }
  }
  return std::nullopt;
}

struct Proposition2Result {
  bool consistent = true;
  std::optional<Complex> complex_point;
  std::optional<double> real_point;
};

/// Scans the window for a point of R_N; if one exists, the real-axis
/// analysis must return a nonzero real point too.
inline Proposition2Result proposition2_check(const RationalTF& h, const ScanWindow& window = {},
                                             const ScanResolution& res = {}) {
  if (h.den().degree() < 1 || h.den().degree() > 2) {
    throw std::invalid_argument("proposition2_check: transfer function must have order 1 or 2");
  }
  const NyquistRegion region(h);
  Proposition2Result out;
  out.complex_point = find_region_point(region, window, res);
  if (!out.complex_point) return out;
  const RealAxisIntervals ri = real_axis_stable_intervals(region);
  for (const auto& iv : ri.intervals) {
    double x = iv.representative();
    if (x == 0.0) x = iv.hi > 0.0 ? 0.5 * std::min(iv.hi, 1.0) : 0.5 * std::max(iv.lo, -1.0);
    out.real_point = x;
    break;
  }
  out.consistent = out.real_point.has_value();
  return out;
}

}  // namespace syncregion
