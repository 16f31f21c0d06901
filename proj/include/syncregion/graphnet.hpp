#pragma once

// Weighted digraphs and the matrices they induce: the interconnection
// matrix L, the projector Q onto 1^perp, the reduced matrix Q L Q^T, plus
// reachability, the Laplacian eigenvalue cone, and graph synthesis from a
// prescribed reduced spectrum.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "syncregion/numkernel.hpp"

namespace syncregion {

struct Edge {
  int from = 0;  ///< 0-based node index i (the listening node).
  int to = 0;    ///< 0-based node index j (the neighbour).
  double weight = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Directed graph with signed weights sigma_{i,j}; no self-loops, at most
/// one edge per ordered pair. Node indices are 0-based here; the JSON file
/// format is 1-based.
class WeightedDigraph {
 public:
  explicit WeightedDigraph(int node_count) : n_(node_count) {
    if (node_count < 2) {
      throw std::invalid_argument("WeightedDigraph: node count must be > 1, got " +
                                  std::to_string(node_count));
    }
  }

  WeightedDigraph(int node_count, const std::vector<Edge>& edges) : WeightedDigraph(node_count) {
    for (const auto& e : edges) add_edge(e.from, e.to, e.weight);
  }

  /// Complete graph with identical weights on every ordered pair.
  static WeightedDigraph complete(int node_count, double weight) {
    WeightedDigraph g(node_count);
    for (int i = 0; i < node_count; ++i)
      for (int j = 0; j < node_count; ++j)
        if (i != j) g.add_edge(i, j, weight);
    return g;
  }

  /// Directed cycle i -> i+1 (mod N).
  static WeightedDigraph cycle(int node_count, double weight) {
    WeightedDigraph g(node_count);
    for (int i = 0; i < node_count; ++i) g.add_edge(i, (i + 1) % node_count, weight);
    return g;
  }

  void add_edge(int from, int to, double weight) {
    if (from < 0 || from >= n_ || to < 0 || to >= n_) {
      throw std::out_of_range("WeightedDigraph: node index out of range");
    }
    if (from == to) throw std::invalid_argument("WeightedDigraph: self-loops are not allowed");
    if (!std::isfinite(weight)) throw std::invalid_argument("WeightedDigraph: non-finite weight");
    for (const auto& e : edges_) {
      if (e.from == from && e.to == to) {
        throw std::invalid_argument("WeightedDigraph: duplicate edge (" + std::to_string(from + 1) +
                                    "," + std::to_string(to + 1) + ")");
      }
    }
    edges_.push_back({from, to, weight});
  }

  [[nodiscard]] int node_count() const { return n_; }
  [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }

  /// Sigma as a dense N x N matrix.
  [[nodiscard]] RealMatrix adjacency() const {
    RealMatrix s = RealMatrix::Zero(n_, n_);
    for (const auto& e : edges_) s(e.from, e.to) = e.weight;
    return s;
  }

  /// Member of G^+.
  [[nodiscard]] bool is_nonnegative() const {
    return std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.weight >= 0.0; });
  }

  /// Member of G^u.
  [[nodiscard]] bool is_symmetric(double tol = 0.0) const {
    const RealMatrix s = adjacency();
    return (s - s.transpose()).cwiseAbs().maxCoeff() <= tol;
  }

  friend bool operator==(const WeightedDigraph&, const WeightedDigraph&) = default;

 private:
  int n_;
  std::vector<Edge> edges_;
};

/// L with L_ii = sum_k sigma_ik and L_ij = -sigma_ij; rows sum to zero.
inline RealMatrix interconnection_matrix(const WeightedDigraph& g) {
  const int n = g.node_count();
  RealMatrix l = RealMatrix::Zero(n, n);
  for (const auto& e : g.edges()) {
    l(e.from, e.to) -= e.weight;
    l(e.from, e.from) += e.weight;
  }
  return l;
}

struct ProjectorQ {
  RealMatrix Q;   ///< (N-1) x N, orthonormal rows orthogonal to 1_N.
  RealMatrix Pi;  ///< I_N - (1/N) 1 1^T.
};

struct ProjectorResiduals {
  double kernel = 0.0;      ///< ||Q 1||
  double projector = 0.0;   ///< ||Q^T Q - Pi||
  double orthonormal = 0.0; ///< ||Q Q^T - I||
};

inline ProjectorResiduals projector_residuals(const ProjectorQ& p) {
  const Eigen::Index n = p.Q.cols();
  ProjectorResiduals r;
  r.kernel = (p.Q * RealVector::Ones(n)).norm();
  r.projector = (p.Q.transpose() * p.Q - p.Pi).norm();
  r.orthonormal = (p.Q * p.Q.transpose() - RealMatrix::Identity(n - 1, n - 1)).norm();
  return r;
}

/// Helmert rows: row i (1-based) has i entries 1/sqrt(i(i+1)), then
/// -i/sqrt(i(i+1)), then zeros.
inline ProjectorQ projector_q(int n) {
  if (n < 2) throw std::invalid_argument("projector_q: N must be >= 2");
  ProjectorQ p;
  p.Q = RealMatrix::Zero(n - 1, n);
  for (int i = 1; i < n; ++i) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(i) * (i + 1));
    for (int j = 0; j < i; ++j) p.Q(i - 1, j) = scale;
    p.Q(i - 1, i) = -static_cast<double>(i) * scale;
  }
  p.Pi = RealMatrix::Identity(n, n) - RealMatrix::Constant(n, n, 1.0 / n);
  return p;
}

struct ReducedInterconnection {
  RealMatrix Ltilde;
  Spectrum parent_spectrum;  ///< sigma(L)
  Spectrum spectrum;         ///< sigma(L~)
  /// Largest pairing distance between sigma(L~) and sigma(L) minus one zero.
  double match_error = 0.0;
  /// False when the spectral identity fails beyond the matching tolerance.
  bool spectrum_consistent = true;
};

namespace detail {

inline std::vector<Complex> remove_one_zero(std::vector<Complex> values) {
  auto it = std::min_element(values.begin(), values.end(), [](const Complex& a, const Complex& b) {
    return std::abs(a) < std::abs(b);
  });
  if (it != values.end()) values.erase(it);
  return values;
}

}  // namespace detail

inline constexpr double kSpectralMatchTol = 1e-7;

/// L~ = Q L Q^T for a caller-supplied Q satisfying the projector identities.
inline ReducedInterconnection reduced_interconnection(const WeightedDigraph& g,
                                                      const RealMatrix& q) {
  const RealMatrix l = interconnection_matrix(g);
  if (q.rows() != l.rows() - 1 || q.cols() != l.cols()) {
    throw std::invalid_argument("reduced_interconnection: Q must be (N-1) x N");
  }
  ReducedInterconnection out;
  out.Ltilde = q * l * q.transpose();
  out.parent_spectrum = eigenvalues(l);
  out.spectrum = eigenvalues(out.Ltilde);
  // Repeated eigenvalues of defective L are only accurate to ~sqrt(eps)
  // relative; scale the matching tolerance with ||L||.
  const double scale = std::max(1.0, l.norm());
  out.match_error =
      match_multisets(detail::remove_one_zero(out.parent_spectrum.values), out.spectrum.values);
  out.spectrum_consistent = out.parent_spectrum.valid && out.spectrum.valid &&
                            out.match_error <= kSpectralMatchTol * scale;
  return out;
}

inline ReducedInterconnection reduced_interconnection(const WeightedDigraph& g) {
  return reduced_interconnection(g, projector_q(g.node_count()).Q);
}

/// True iff some node is reachable from every other node along edges
/// i -> j with sigma_ij > 0. Zero-weight edges are ignored.
inline bool has_globally_reachable_node(const WeightedDigraph& g) {
  if (!g.is_nonnegative()) {
    throw std::invalid_argument("reachability undefined for signed graphs");
  }
  const int n = g.node_count();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& e : g.edges())
    if (e.weight > 0.0) adj[static_cast<std::size_t>(e.from)].push_back(e.to);

  // Tarjan's SCC, iterative.
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  int next_index = 0, comp_count = 0;
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<std::pair<int, std::size_t>> work{{root, 0}};
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!work.empty()) {
      auto& [v, child] = work.back();
      const auto& nbrs = adj[static_cast<std::size_t>(v)];
      if (child < nbrs.size()) {
        const int w = nbrs[child++];
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          work.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = comp_count;
        } while (w != v);
        ++comp_count;
      }
      const int finished = v;
      work.pop_back();
      if (!work.empty()) {
        const int parent = work.back().first;
        low[parent] = std::min(low[parent], low[finished]);
      }
    }
  }

  // A globally reachable node exists iff the condensation has a unique sink.
  std::vector<bool> has_out(static_cast<std::size_t>(comp_count), false);
  for (int v = 0; v < n; ++v)
    for (int w : adj[static_cast<std::size_t>(v)])
      if (comp[v] != comp[w]) has_out[static_cast<std::size_t>(comp[v])] = true;
  return std::count(has_out.begin(), has_out.end(), false) == 1;
}

/// |Im s| <= Re s * cot(pi/N), Re s >= 0: contains every Laplacian
/// eigenvalue of an N-node nonnegative digraph.
inline bool agaev_cone_contains(int n, Complex s) {
  if (n < 2) throw std::invalid_argument("agaev_cone_contains: N must be >= 2");
  if (s.real() < 0.0) return false;
  const double cot = 1.0 / std::tan(std::numbers::pi / n);
  return std::abs(s.imag()) <= s.real() * cot;
}

/// Builds a signed digraph whose reduced interconnection spectrum is
/// {p, ..., p} (N even, p real) or {p, conj p, ..., p, conj p} (N odd).
/// Throws std::invalid_argument for nonreal p with even N and NumericalError
/// if the constructed graph fails spectral verification.
inline WeightedDigraph synthesize_graph_from_spectrum(Complex p, int n) {
  if (n < 2) throw std::invalid_argument("synthesize_graph_from_spectrum: N must be >= 2");
  const double imag_tol = 1e-12 * std::max(1.0, std::abs(p));
  std::vector<Complex> target;
  RealMatrix l;
  if (n % 2 == 0) {
    if (std::abs(p.imag()) > imag_tol) {
      throw std::invalid_argument(
          "synthesize_graph_from_spectrum: even N requires a real spectrum point");
    }
    l = p.real() * (RealMatrix::Identity(n, n) - RealMatrix::Constant(n, n, 1.0 / n));
    target.assign(static_cast<std::size_t>(n - 1), Complex(p.real(), 0.0));
  } else {
    // L = T blockdiag(0, R, ..., R) T^{-1}, T = [1_N | e_2 ... e_N].
    RealMatrix block = RealMatrix::Zero(n, n);
    for (int k = 1; k + 1 < n; k += 2) {
      block(k, k) = p.real();
      block(k, k + 1) = -p.imag();
      block(k + 1, k) = p.imag();
      block(k + 1, k + 1) = p.real();
      target.push_back(p);
      target.push_back(std::conj(p));
    }
    RealMatrix t = RealMatrix::Identity(n, n);
    t.col(0).setOnes();
    l = t * block * t.inverse();
  }
  WeightedDigraph g(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && l(i, j) != 0.0) g.add_edge(i, j, -l(i, j));

  const ReducedInterconnection red = reduced_interconnection(g);
  if (match_multisets(red.spectrum.values, target) > kSpectralMatchTol * std::max(1.0, std::abs(p))) {
    throw NumericalError("synthesize_graph_from_spectrum: verification of the reduced spectrum failed");
  }
  return g;
}

}  // namespace syncregion
