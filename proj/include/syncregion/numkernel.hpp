#pragma once

// Dense linear-algebra kernel shared by every analysis module: spectra,
// Hurwitz tests, Kronecker products, Lyapunov solves, characteristic
// polynomials, polynomial roots and the matrix exponential.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace syncregion {

using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

/// Thrown when an iterative numerical routine fails or an input is
/// numerically degenerate (singular systems, non-convergence, overflow).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Largest dimension `kron` will produce unless told otherwise.
inline constexpr Eigen::Index kDefaultMaxKronDimension = 4096;

/// Multiset of eigenvalues, ordered by real part then imaginary part.
struct Spectrum {
  std::vector<Complex> values;
  /// Max over eigenpairs of ||M v - lambda v|| / (||M|| ||v||).
  double residual = 0.0;
  /// False when the eigensolver did not converge; `values` is then partial.
  bool valid = true;

  [[nodiscard]] std::size_t size() const { return values.size(); }
  [[nodiscard]] double max_real_part() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& v : values) m = std::max(m, v.real());
    return m;
  }
};

namespace detail {

inline bool spectrum_less(const Complex& a, const Complex& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

inline void require_square(Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (rows != cols) {
    throw std::invalid_argument(std::string(what) + ": matrix must be square, got " +
                                std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (rows < 1) throw std::invalid_argument(std::string(what) + ": empty matrix");
}

// Pair each value with its conjugate partner and replace both by the exact
// mirror image of their average, so real inputs give exactly symmetric spectra.
inline void symmetrize_conjugates(std::vector<Complex>& values, double tol) {
  const std::size_t n = values.size();
  std::vector<bool> used(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (used[i]) continue;
    const double scale = std::max(1.0, std::abs(values[i]));
    if (std::abs(values[i].imag()) <= tol * scale) {
      values[i] = Complex(values[i].real(), 0.0);
      used[i] = true;
      continue;
    }
    std::size_t best = n;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < n; ++j) {
      if (used[j]) continue;
      const double d = std::abs(values[j] - std::conj(values[i]));
      if (d < best_dist) {
        best_dist = d;
        best = j;
      }
    }
    used[i] = true;
    if (best == n) continue;
    used[best] = true;
    const Complex avg = 0.5 * (values[i] + std::conj(values[best]));
    values[i] = avg;
    values[best] = std::conj(avg);
  }
}

template <typename Derived>
double spectral_residual(const Eigen::MatrixBase<Derived>& m, const ComplexMatrix& vectors,
                         const std::vector<Complex>& values) {
  const ComplexMatrix mc = m.template cast<Complex>();
  const double norm = std::max(mc.norm(), std::numeric_limits<double>::min());
  double worst = 0.0;
  for (Eigen::Index k = 0; k < vectors.cols(); ++k) {
    const ComplexVector v = vectors.col(k);
    const double vn = v.norm();
    if (vn == 0.0) continue;
    const double r = (mc * v - values[static_cast<std::size_t>(k)] * v).norm() / (norm * vn);
    worst = std::max(worst, r);
  }
  return worst;
}

}  // namespace detail

/// All eigenvalues of a real square matrix, with multiplicity.
inline Spectrum eigenvalues(const RealMatrix& m) {
  detail::require_square(m.rows(), m.cols(), "eigenvalues");
  Eigen::EigenSolver<RealMatrix> solver(m, /*computeEigenvectors=*/true);
  Spectrum out;
  out.valid = solver.info() == Eigen::Success;
  if (!out.valid) return out;
  std::vector<Complex> raw(solver.eigenvalues().data(),
                           solver.eigenvalues().data() + solver.eigenvalues().size());
  out.residual = detail::spectral_residual(m, solver.eigenvectors(), raw);
  out.values = std::move(raw);
  detail::symmetrize_conjugates(out.values, 1e-12);
  std::sort(out.values.begin(), out.values.end(), detail::spectrum_less);
  return out;
}

/// All eigenvalues of a complex square matrix, with multiplicity.
inline Spectrum eigenvalues(const ComplexMatrix& m) {
  detail::require_square(m.rows(), m.cols(), "eigenvalues");
  Eigen::ComplexEigenSolver<ComplexMatrix> solver(m, /*computeEigenvectors=*/true);
  Spectrum out;
  out.valid = solver.info() == Eigen::Success;
  if (!out.valid) return out;
  out.values.assign(solver.eigenvalues().data(),
                    solver.eigenvalues().data() + solver.eigenvalues().size());
  out.residual = detail::spectral_residual(m, solver.eigenvectors(), out.values);
  std::sort(out.values.begin(), out.values.end(), detail::spectrum_less);
  return out;
}

/// Largest real part of the spectrum; skips eigenvectors, used on hot paths.
inline double spectral_abscissa(const ComplexMatrix& m) {
  detail::require_square(m.rows(), m.cols(), "spectral_abscissa");
  Eigen::ComplexEigenSolver<ComplexMatrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("spectral_abscissa: eigensolver did not converge");
  }
  return solver.eigenvalues().real().maxCoeff();
}

inline double spectral_abscissa(const RealMatrix& m) {
  detail::require_square(m.rows(), m.cols(), "spectral_abscissa");
  Eigen::EigenSolver<RealMatrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("spectral_abscissa: eigensolver did not converge");
  }
  return solver.eigenvalues().real().maxCoeff();
}

struct HurwitzResult {
  bool verdict = false;
  /// Negated spectral abscissa; positive for Hurwitz matrices.
  double stability_margin = 0.0;
};

/// Hurwitz iff every eigenvalue has real part strictly below -margin.
template <typename Derived>
HurwitzResult is_hurwitz(const Eigen::MatrixBase<Derived>& m, double margin = 0.0) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dense = m;
  const double abscissa = spectral_abscissa(dense);
  return {abscissa < -margin, -abscissa};
}

/// Standard Kronecker product; throws std::length_error past `max_dimension`.
template <typename DerivedA, typename DerivedB>
auto kron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
          Eigen::Index max_dimension = kDefaultMaxKronDimension) {
  using Scalar = typename Eigen::ScalarBinaryOpTraits<typename DerivedA::Scalar,
                                                       typename DerivedB::Scalar>::ReturnType;
  const Eigen::Index rows = a.rows() * b.rows();
  const Eigen::Index cols = a.cols() * b.cols();
  if (rows > max_dimension || cols > max_dimension) {
    throw std::length_error("kron: result " + std::to_string(rows) + "x" + std::to_string(cols) +
                            " exceeds max dimension " + std::to_string(max_dimension));
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(rows, cols);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
          Scalar(a(i, j)) * b.template cast<Scalar>();
    }
  }
  return out;
}

struct LyapunovSolution {
  ComplexMatrix P;
  /// ||F* P + P F + H||_F
  double residual = 0.0;
};

/// Solves F* P + P F = -H by vectorizing to an n^2 x n^2 linear system.
/// Throws NumericalError when F and -F* share an eigenvalue.
inline LyapunovSolution solve_lyapunov(const ComplexMatrix& f, const ComplexMatrix& h,
                                       double separation_tol = 1e-10) {
  detail::require_square(f.rows(), f.cols(), "solve_lyapunov");
  const Eigen::Index n = f.rows();
  if (h.rows() != n || h.cols() != n) {
    throw std::invalid_argument("solve_lyapunov: H must match F dimensions");
  }
  if ((h - h.adjoint()).norm() > 1e-9 * std::max(1.0, h.norm())) {
    throw std::invalid_argument("solve_lyapunov: H must be Hermitian");
  }

  // lambda_i + conj(lambda_j) are the eigenvalues of the vectorized operator.
  const Spectrum spec = eigenvalues(f);
  if (!spec.valid) throw NumericalError("solve_lyapunov: eigensolver did not converge");
  const double scale = std::max(1.0, f.norm());
  for (const auto& li : spec.values) {
    for (const auto& lj : spec.values) {
      if (std::abs(li + std::conj(lj)) <= separation_tol * scale) {
        throw NumericalError(
            "solve_lyapunov: no unique solution (F and -F* share an eigenvalue)");
      }
    }
  }

  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  // vec(F* P) = (I kron F*) vec P,  vec(P F) = (F^T kron I) vec P (column-major).
  const ComplexMatrix op = kron(id, f.adjoint().eval()) + kron(f.transpose().eval(), id);
  const ComplexVector rhs = -Eigen::Map<const ComplexVector>(h.data(), n * n);
  Eigen::FullPivLU<ComplexMatrix> lu(op);
  if (!lu.isInvertible()) {
    throw NumericalError("solve_lyapunov: no unique solution (singular vectorized system)");
  }
  const ComplexVector x = lu.solve(rhs);
  LyapunovSolution out;
  out.P = Eigen::Map<const ComplexMatrix>(x.data(), n, n);
  out.P = 0.5 * (out.P + out.P.adjoint()).eval();
  out.residual = (f.adjoint() * out.P + out.P * f + h).norm();
  return out;
}

/// Polynomial with ascending-degree coefficients.
template <typename Scalar>
class BasicPolynomial {
 public:
  BasicPolynomial() = default;
  explicit BasicPolynomial(std::vector<Scalar> ascending) : coeffs_(std::move(ascending)) {
    trim();
  }

  static BasicPolynomial monomial(int degree, Scalar c = Scalar(1)) {
    std::vector<Scalar> v(static_cast<std::size_t>(degree) + 1, Scalar(0));
    v.back() = c;
    return BasicPolynomial(std::move(v));
  }

  /// prod (s - r_i)
  static BasicPolynomial from_roots(const std::vector<Scalar>& roots) {
    std::vector<Scalar> c{Scalar(1)};
    for (const auto& r : roots) {
      std::vector<Scalar> next(c.size() + 1, Scalar(0));
      for (std::size_t i = 0; i < c.size(); ++i) {
        next[i + 1] += c[i];
        next[i] -= r * c[i];
      }
      c = std::move(next);
    }
    return BasicPolynomial(std::move(c));
  }

  [[nodiscard]] const std::vector<Scalar>& coefficients() const { return coeffs_; }
  [[nodiscard]] bool is_zero() const { return coeffs_.empty(); }
  /// -1 for the zero polynomial.
  [[nodiscard]] int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  [[nodiscard]] Scalar leading() const { return coeffs_.empty() ? Scalar(0) : coeffs_.back(); }
  [[nodiscard]] Scalar operator[](std::size_t i) const {
    return i < coeffs_.size() ? coeffs_[i] : Scalar(0);
  }

  template <typename T>
  [[nodiscard]] auto operator()(const T& x) const {
    using R = decltype(Scalar(0) * x);
    R acc(0);
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + R(*it);
    return acc;
  }

  [[nodiscard]] BasicPolynomial derivative() const {
    if (coeffs_.size() <= 1) return {};
    std::vector<Scalar> d(coeffs_.size() - 1);
    for (std::size_t i = 1; i < coeffs_.size(); ++i) d[i - 1] = Scalar(double(i)) * coeffs_[i];
    return BasicPolynomial(std::move(d));
  }

  friend BasicPolynomial operator*(const BasicPolynomial& a, const BasicPolynomial& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<Scalar> c(a.coeffs_.size() + b.coeffs_.size() - 1, Scalar(0));
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
      for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return BasicPolynomial(std::move(c));
  }

  friend BasicPolynomial operator+(const BasicPolynomial& a, const BasicPolynomial& b) {
    std::vector<Scalar> c(std::max(a.coeffs_.size(), b.coeffs_.size()), Scalar(0));
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a[i] + b[i];
    return BasicPolynomial(std::move(c));
  }

  friend BasicPolynomial operator*(Scalar k, const BasicPolynomial& a) {
    std::vector<Scalar> c = a.coeffs_;
    for (auto& x : c) x *= k;
    return BasicPolynomial(std::move(c));
  }

  friend bool operator==(const BasicPolynomial&, const BasicPolynomial&) = default;

 private:
  void trim() {
    while (!coeffs_.empty() && coeffs_.back() == Scalar(0)) coeffs_.pop_back();
  }

  std::vector<Scalar> coeffs_;
};

using Polynomial = BasicPolynomial<double>;
using ComplexPolynomial = BasicPolynomial<Complex>;

/// D(s) = det(sI - A) and N(s) = c adj(sI - A) b.
struct CharPolyNumerator {
  Polynomial den;
  Polynomial num;
};

/// Faddeev-LeVerrier recursion. adj(sI - A) = sum_k M_k s^{n-k} with
/// M_1 = I and M_{k+1} = A M_k + a_{n-k} I, a_{n-k-1} = -tr(A M_{k+1}) / (k+1).
inline CharPolyNumerator char_poly_and_numerator(const RealMatrix& a, const RealVector& b,
                                                 const Eigen::RowVectorXd& c) {
  detail::require_square(a.rows(), a.cols(), "char_poly_and_numerator");
  const Eigen::Index n = a.rows();
  if (b.size() != n || c.size() != n) {
    throw std::invalid_argument("char_poly_and_numerator: b and c must have length n");
  }
  std::vector<double> den(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> num(static_cast<std::size_t>(n), 0.0);
  den[static_cast<std::size_t>(n)] = 1.0;
  RealMatrix mk = RealMatrix::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    num[static_cast<std::size_t>(n - k)] = c * mk * b;
    const RealMatrix amk = a * mk;
    const double coeff = -amk.trace() / static_cast<double>(k);
    den[static_cast<std::size_t>(n - k)] = coeff;
    mk = amk + coeff * RealMatrix::Identity(n, n);
  }
  return {Polynomial(std::move(den)), Polynomial(std::move(num))};
}

/// Roots via companion-matrix eigenvalues.
template <typename Scalar>
Spectrum poly_roots(const BasicPolynomial<Scalar>& p) {
  if (p.is_zero()) throw std::invalid_argument("poly_roots: zero polynomial");
  if (p.degree() < 1) throw std::invalid_argument("poly_roots: degree must be >= 1");
  const int n = p.degree();
  const auto& c = p.coefficients();
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat comp = Mat::Zero(n, n);
  for (int i = 1; i < n; ++i) comp(i, i - 1) = Scalar(1);
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[static_cast<std::size_t>(i)] / c.back();
  return eigenvalues(comp);
}

/// e^{M t} via scaling-and-squaring Pade; throws NumericalError on overflow.
inline RealMatrix expm(const RealMatrix& m, double t = 1.0) {
  detail::require_square(m.rows(), m.cols(), "expm");
  const RealMatrix scaled = m * t;
  RealMatrix out = scaled.exp();
  if (!out.allFinite()) throw NumericalError("expm: overflow for ||M t||");
  return out;
}

/// Hermitian positive-semidefiniteness within `tol` on the smallest eigenvalue.
template <typename Derived>
bool is_psd(const Eigen::MatrixBase<Derived>& p, double tol = 1e-9) {
  detail::require_square(p.rows(), p.cols(), "is_psd");
  const ComplexMatrix pc = p.template cast<Complex>();
  if ((pc - pc.adjoint()).norm() > tol * std::max(1.0, pc.norm())) {
    throw std::invalid_argument("is_psd: matrix is not Hermitian within tolerance");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (pc + pc.adjoint()),
                                                      Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff() >= -tol;
}

/// Smallest eigenvalue of the Hermitian part of P.
inline double min_hermitian_eigenvalue(const ComplexMatrix& p) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (p + p.adjoint()),
                                                      Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

/// Greedy nearest-neighbour pairing of two multisets. Returns the largest
/// pairing distance, or +inf if the sizes differ.
inline double match_multisets(std::vector<Complex> a, std::vector<Complex> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  std::vector<bool> taken(b.size(), false);
  for (const auto& x : a) {
    std::size_t best = b.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (taken[j]) continue;
      const double d = std::abs(x - b[j]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    taken[best] = true;
    worst = std::max(worst, best_d);
  }
  return worst;
}

}  // namespace syncregion
