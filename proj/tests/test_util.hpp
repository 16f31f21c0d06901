#pragma once

// Fixtures, random instance generators and independent oracles shared by the
// unit and acceptance suites. The oracles deliberately avoid the library's
// numerical paths (Eigen eigensolvers, Faddeev-LeVerrier, Kronecker solves).

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "syncregion/graphnet.hpp"
#include "syncregion/numkernel.hpp"
#include "syncregion/system.hpp"

namespace syncregion::testing {

// ---------------------------------------------------------------------------
// Systems from the worked examples

/// Controllable companion form with last row `a` and output row `c`.
inline LtiSystem companion(const std::vector<double>& a, const std::vector<double>& c) {
  const auto n = static_cast<Eigen::Index>(a.size());
  RealMatrix A = RealMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) A(i, i + 1) = 1.0;
  for (Eigen::Index j = 0; j < n; ++j) A(n - 1, j) = a[static_cast<std::size_t>(j)];
  RealMatrix B = RealMatrix::Zero(n, 1);
  B(n - 1, 0) = 1.0;
  RealMatrix C(1, n);
  for (Eigen::Index j = 0; j < n; ++j) C(0, j) = c[static_cast<std::size_t>(j)];
  return {A, B, C};
}

/// Signed-graph example: S(P, 1) avoids the Agaev cone for N = 3.
inline LtiSystem example1() { return companion({1, 2, 0, -2}, {0, 1, 1.5, 1}); }
/// OFS for odd N only; the directed 3-cycle with K = 1 synchronizes.
inline LtiSystem example2() { return companion({1, 11, 9, 8}, {0, 6, 6, 6}); }
/// H = (s + 2)(s - 0.2) / ((s + 4)(s + 1)(s - 2)).
inline LtiSystem example5() { return companion({8, 6, -3}, {-0.4, 1.8, 1}); }
/// H = (d s + c) / s^2.
inline LtiSystem double_integrator(double c, double d) { return companion({0, 0}, {c, d}); }
/// H = (d s + c) / (s^2 + 1).
inline LtiSystem harmonic(double c, double d) { return companion({-1, 0}, {c, d}); }

/// Reduced spectrum of the directed unit 3-cycle.
inline std::vector<Complex> example2_spectrum() {
  const double r = std::sqrt(3.0) / 2.0;
  return {{1.5, -r}, {1.5, r}};
}

// ---------------------------------------------------------------------------
// Polynomial oracles

/// Weierstrass (Durand-Kerner) iteration on ascending coefficients.
inline std::vector<Complex> durand_kerner(std::vector<Complex> c) {
  while (!c.empty() && c.back() == Complex(0.0)) c.pop_back();
  const std::size_t n = c.size() - 1;
  if (n == 0) return {};
  const Complex lead = c.back();
  for (auto& x : c) x /= lead;
  double radius = 0.0;
  for (std::size_t i = 0; i < n; ++i) radius = std::max(radius, std::abs(c[i]));
  radius = 1.0 + radius;
  std::vector<Complex> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = radius * std::polar(1.0, 2.0 * std::numbers::pi * (static_cast<double>(i) + 0.25) /
                                        static_cast<double>(n));
  }
  const auto eval = [&](Complex x) {
    Complex acc = c[n];
    for (std::size_t i = n; i-- > 0;) acc = acc * x + c[i];
    return acc;
  };
  for (int iter = 0; iter < 5000; ++iter) {
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Complex den = 1.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) den *= z[i] - z[j];
      if (den == Complex(0.0)) den = 1e-300;
      const Complex step = eval(z[i]) / den;
      z[i] -= step;
      change = std::max(change, std::abs(step) / std::max(1.0, std::abs(z[i])));
    }
    if (change < 1e-15) break;
  }
  // Newton polish on the original polynomial.
  for (auto& x : z) {
    for (int k = 0; k < 3; ++k) {
      Complex p = c[n], dp = 0.0;
      for (std::size_t i = n; i-- > 0;) {
        dp = dp * x + p;
        p = p * x + c[i];
      }
      if (dp != Complex(0.0)) x -= p / dp;
    }
  }
  return z;
}

inline double max_real_part(const std::vector<Complex>& roots) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& r : roots) m = std::max(m, r.real());
  return m;
}

/// Stability margin of A - s b c for a companion-form SISO system, from the
/// characteristic polynomial lambda^n - sum_i (a_i - k s c_i) lambda^i.
inline double companion_margin(const std::vector<double>& a, const std::vector<double>& c, double k,
                               Complex s) {
  std::vector<Complex> p(a.size() + 1);
  for (std::size_t i = 0; i < a.size(); ++i) p[i] = -(a[i] - k * s * c[i]);
  p[a.size()] = 1.0;
  return -max_real_part(durand_kerner(p));
}

// ---------------------------------------------------------------------------
// Matrix oracles

/// Scaling-and-squaring Taylor exponential.
inline RealMatrix taylor_expm(const RealMatrix& m) {
  const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (norm / std::pow(2.0, squarings) > 0.25) ++squarings;
  const RealMatrix a = m / std::pow(2.0, squarings);
  RealMatrix term = RealMatrix::Identity(m.rows(), m.cols());
  RealMatrix sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

/// P = int_0^inf e^{F* t} H e^{F t} dt for Hurwitz F, by composite Simpson
/// on [0, T] with T chosen from the decay margin.
inline ComplexMatrix lyapunov_by_quadrature(const ComplexMatrix& f, const ComplexMatrix& h, double margin,
                                            int panels = 4000) {
  const double t_end = 40.0 / margin;
  const double dt = t_end / panels;
  // Propagate e^{F t} with a fixed step map built by repeated squaring of a
  // short Taylor step.
  const Eigen::Index n = f.rows();
  ComplexMatrix step = ComplexMatrix::Identity(n, n);
  {
    int sq = 0;
    while (f.norm() * dt / std::pow(2.0, sq) > 0.1) ++sq;
    const ComplexMatrix a = f * (dt / std::pow(2.0, sq));
    ComplexMatrix term = ComplexMatrix::Identity(n, n);
    for (int k = 1; k < 20; ++k) {
      term = term * a / static_cast<double>(k);
      step += term;
    }
    for (int i = 0; i < sq; ++i) step = step * step;
  }
  ComplexMatrix e = ComplexMatrix::Identity(n, n);
  ComplexMatrix sum = ComplexMatrix::Zero(n, n);
  for (int i = 0; i <= panels; ++i) {
    const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += w * (e.adjoint() * h * e);
    e = e * step;
  }
  return sum * (dt / 3.0);
}

/// Eigenvalues of the directed unit cycle's interconnection matrix:
/// w (1 - e^{2 pi i k / N}).
inline std::vector<Complex> cycle_spectrum(int n, double w) {
  std::vector<Complex> out;
  for (int k = 0; k < n; ++k) out.push_back(w * (1.0 - std::polar(1.0, 2.0 * std::numbers::pi * k / n)));
  return out;
}

// ---------------------------------------------------------------------------
// Random instances

inline RealMatrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  RealMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(rng);
  return m;
}

inline LtiSystem random_system(std::mt19937_64& rng, int max_n = 4, int max_io = 2) {
  std::uniform_int_distribution<int> nd(1, max_n), io(1, max_io);
  const int n = nd(rng), m = io(rng), q = io(rng);
  return {random_matrix(rng, n, n), random_matrix(rng, n, m), random_matrix(rng, q, n)};
}

/// Random companion-form SISO system; returns the coefficient vectors too.
struct CompanionDraw {
  std::vector<double> a, c;
  LtiSystem sys;
};

inline CompanionDraw random_companion(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> a(static_cast<std::size_t>(n)), c(static_cast<std::size_t>(n));
  for (auto& x : a) x = nd(rng);
  for (auto& x : c) x = nd(rng);
  return {a, c, companion(a, c)};
}

/// Random graph; `signed_weights` draws weights from N(0, 1), otherwise
/// from U(0.1, 2).
inline WeightedDigraph random_graph(std::mt19937_64& rng, int n, double density, bool signed_weights) {
  std::bernoulli_distribution edge(density);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> pos(0.1, 2.0);
  WeightedDigraph g(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && edge(rng)) g.add_edge(i, j, signed_weights ? nd(rng) : pos(rng));
  return g;
}

inline WeightedDigraph random_symmetric_graph(std::mt19937_64& rng, int n, double density) {
  std::bernoulli_distribution edge(density);
  std::normal_distribution<double> nd(0.0, 1.0);
  WeightedDigraph g(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (edge(rng)) {
        const double w = nd(rng);
        g.add_edge(i, j, w);
        g.add_edge(j, i, w);
      }
  return g;
}

/// Nonnegative graph containing a directed Hamiltonian cycle (strongly connected).
inline WeightedDigraph random_strongly_connected(std::mt19937_64& rng, int n, double density) {
  std::bernoulli_distribution edge(density);
  std::uniform_real_distribution<double> pos(0.1, 2.0);
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  WeightedDigraph g(n);
  std::vector<std::vector<bool>> used(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) {
    const int a = perm[static_cast<std::size_t>(i)], b = perm[static_cast<std::size_t>((i + 1) % n)];
    g.add_edge(a, b, pos(rng));
    used[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = true;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && !used[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] && edge(rng))
        g.add_edge(i, j, pos(rng));
  return g;
}

inline Complex random_complex(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng)};
}

}  // namespace syncregion::testing
