#pragma once

// JSON and CSV formats for systems, graphs, transfer functions, scenarios,
// certificates and reports. Requires nlohmann/json ("json.hpp").
//
// Doubles are written in shortest round-trip form; non-finite values are
// written as the strings "inf", "-inf" and "nan".

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "syncregion/freqdom.hpp"
#include "syncregion/graphnet.hpp"
#include "syncregion/netsim.hpp"
#include "syncregion/syncore.hpp"
#include "syncregion/system.hpp"

namespace syncregion::io {

using Json = nlohmann::json;

/// Malformed or unreadable input.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Scalars

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline Json number_to_json(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

inline double number_from_json(const Json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ParseError(what + ": expected a number");
}

inline Json complex_to_json(Complex z) {
  return Json{{"re", number_to_json(z.real())}, {"im", number_to_json(z.imag())}};
}

inline Complex complex_from_json(const Json& j, const std::string& what) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_object() || !j.contains("re") || !j.contains("im")) {
    throw ParseError(what + ": expected {\"re\", \"im\"}");
  }
  return {number_from_json(j.at("re"), what + ".re"), number_from_json(j.at("im"), what + ".im")};
}

inline const Json& require(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(what + ": missing \"" + key + "\"");
  return j.at(key);
}

inline int int_from_json(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) throw ParseError(what + ": expected an integer");
  return j.get<int>();
}

// ---------------------------------------------------------------------------
// Matrices

inline Json matrix_to_json(const RealMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline RealMatrix matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ParseError(what + ": expected a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j.front().is_array()) throw ParseError(what + ": rows must be arrays");
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  RealMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ParseError(what + ": ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = number_from_json(row[static_cast<std::size_t>(c)], what);
    }
  }
  return m;
}

inline Json complex_matrix_to_json(const ComplexMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ComplexMatrix complex_matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw ParseError(what + ": expected a nonempty array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  ComplexMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ParseError(what + ": ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = complex_from_json(row[static_cast<std::size_t>(c)], what);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Model objects

inline Json system_to_json(const LtiSystem& sys) {
  return Json{{"A", matrix_to_json(sys.A())}, {"B", matrix_to_json(sys.B())}, {"C", matrix_to_json(sys.C())}};
}

/// DimensionError propagates unchanged so callers can tell it from syntax errors.
inline LtiSystem system_from_json(const Json& j) {
  return LtiSystem(matrix_from_json(require(j, "A", "system"), "system.A"),
                   matrix_from_json(require(j, "B", "system"), "system.B"),
                   matrix_from_json(require(j, "C", "system"), "system.C"));
}

/// Nodes are 1-based in files.
inline Json graph_to_json(const WeightedDigraph& g) {
  Json edges = Json::array();
  for (const auto& e : g.edges()) {
    edges.push_back(Json{{"i", e.from + 1}, {"j", e.to + 1}, {"w", number_to_json(e.weight)}});
  }
  return Json{{"N", g.node_count()}, {"edges", std::move(edges)}};
}

inline WeightedDigraph graph_from_json(const Json& j) {
  const int n = int_from_json(require(j, "N", "graph"), "graph.N");
  if (n < 2) throw ParseError("graph.N must be >= 2");
  WeightedDigraph g(n);
  const Json& edges = require(j, "edges", "graph");
  if (!edges.is_array()) throw ParseError("graph.edges: expected an array");
  for (const auto& e : edges) {
    const int i = int_from_json(require(e, "i", "edge"), "edge.i");
    const int k = int_from_json(require(e, "j", "edge"), "edge.j");
    const double w = number_from_json(require(e, "w", "edge"), "edge.w");
    try {
      g.add_edge(i - 1, k - 1, w);
    } catch (const std::logic_error& ex) {
      throw ParseError(std::string("graph: ") + ex.what());
    }
  }
  return g;
}

inline Json polynomial_to_json(const Polynomial& p) {
  Json out = Json::array();
  for (double c : p.coefficients()) out.push_back(number_to_json(c));
  return out;
}

inline Polynomial polynomial_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + ": expected an array of coefficients");
  std::vector<double> c;
  for (const auto& x : j) c.push_back(number_from_json(x, what));
  return Polynomial(std::move(c));
}

/// Ascending coefficients.
inline Json tf_to_json(const RationalTF& h) {
  return Json{{"num", polynomial_to_json(h.num())}, {"den", polynomial_to_json(h.den())}};
}

inline RationalTF tf_from_json(const Json& j) {
  Polynomial num = polynomial_from_json(require(j, "num", "transfer function"), "tf.num");
  Polynomial den = polynomial_from_json(require(j, "den", "transfer function"), "tf.den");
  try {
    return RationalTF(std::move(num), std::move(den));
  } catch (const std::invalid_argument& ex) {
    throw ParseError(std::string("transfer function: ") + ex.what());
  }
}

inline Json certificate_to_json(const Certificate& c) {
  Json j{{"kind", to_string(c.kind)}, {"K", matrix_to_json(c.K)}, {"point", complex_to_json(c.point)},
         {"N", c.N}};
  if (c.P) j["P"] = complex_matrix_to_json(*c.P);
  if (c.graph) j["graph"] = graph_to_json(*c.graph);
  return j;
}

inline Certificate certificate_from_json(const Json& j) {
  Certificate c;
  const Json& kind = require(j, "kind", "certificate");
  if (!kind.is_string()) throw ParseError("certificate.kind: expected a string");
  const auto k = certificate_kind_from_string(kind.get<std::string>());
  if (!k) throw ParseError("certificate.kind: unknown kind");
  c.kind = *k;
  c.K = matrix_from_json(require(j, "K", "certificate"), "certificate.K");
  c.point = complex_from_json(require(j, "point", "certificate"), "certificate.point");
  c.N = j.contains("N") ? int_from_json(j.at("N"), "certificate.N") : 0;
  if (j.contains("P")) c.P = complex_matrix_from_json(j.at("P"), "certificate.P");
  if (j.contains("graph")) c.graph = graph_from_json(j.at("graph"));
  return c;
}

inline Json verdict_to_json(const SyncVerdict& v) {
  Json eig = Json::array();
  for (const auto& e : v.eigenvalues) {
    eig.push_back(Json{{"lambda", complex_to_json(e.lambda)}, {"in_region", e.in_region},
                       {"margin", number_to_json(e.margin)}});
  }
  Json j{{"synchronizes", v.synchronizes}, {"determinate", v.determinate}, {"eigenvalues", std::move(eig)}};
  if (v.oracle_agreement) j["oracle_agreement"] = *v.oracle_agreement;
  return j;
}

inline SyncVerdict verdict_from_json(const Json& j) {
  SyncVerdict v;
  v.synchronizes = require(j, "synchronizes", "verdict").get<bool>();
  v.determinate = j.value("determinate", true);
  for (const auto& e : require(j, "eigenvalues", "verdict")) {
    v.eigenvalues.push_back({complex_from_json(require(e, "lambda", "eigenvalue"), "lambda"),
                             require(e, "in_region", "eigenvalue").get<bool>(),
                             number_from_json(require(e, "margin", "eigenvalue"), "margin")});
  }
  if (j.contains("oracle_agreement")) v.oracle_agreement = j.at("oracle_agreement").get<bool>();
  return v;
}

inline Json ofs_result_to_json(const OfsResult& r) {
  Json j{{"status", to_string(r.status)}, {"reason", r.reason}};
  if (r.certificate) j["certificate"] = certificate_to_json(*r.certificate);
  return j;
}

inline OfsResult ofs_result_from_json(const Json& j) {
  OfsResult r;
  const auto status = require(j, "status", "ofs").get<std::string>();
  bool known = false;
  for (auto s : {OfsStatus::kCertified, OfsStatus::kNotOfs, OfsStatus::kInconclusive}) {
    if (status == to_string(s)) {
      r.status = s;
      known = true;
    }
  }
  if (!known) throw ParseError("ofs.status: unknown status");
  r.reason = j.value("reason", std::string{});
  if (j.contains("certificate")) r.certificate = certificate_from_json(j.at("certificate"));
  return r;
}

inline Json intervals_to_json(const RealAxisIntervals& ri) {
  Json iv = Json::array();
  for (const auto& i : ri.intervals) iv.push_back(Json{number_to_json(i.lo), number_to_json(i.hi)});
  Json cr = Json::array();
  for (double c : ri.crossings) cr.push_back(number_to_json(c));
  return Json{{"intervals", std::move(iv)}, {"crossings", std::move(cr)}};
}

inline RealAxisIntervals intervals_from_json(const Json& j) {
  RealAxisIntervals ri;
  for (const auto& i : require(j, "intervals", "intervals")) {
    if (!i.is_array() || i.size() != 2) throw ParseError("interval: expected [lo, hi]");
    ri.intervals.push_back({number_from_json(i[0], "lo"), number_from_json(i[1], "hi")});
  }
  for (const auto& c : require(j, "crossings", "intervals")) ri.crossings.push_back(number_from_json(c, "crossing"));
  return ri;
}

// ---------------------------------------------------------------------------
// Scenarios

/// A system with optional gain, graph and transfer function. File references
/// are resolved relative to the scenario file and inlined on load.
struct Scenario {
  std::optional<LtiSystem> system;
  std::optional<GainMatrix> gain;
  std::optional<WeightedDigraph> graph;
  std::optional<RationalTF> tf;

  friend bool operator==(const Scenario& x, const Scenario& y) {
    const bool tf_eq = x.tf.has_value() == y.tf.has_value() &&
                       (!x.tf || (x.tf->num() == y.tf->num() && x.tf->den() == y.tf->den()));
    return x.system == y.system && x.gain == y.gain && x.graph == y.graph && tf_eq;
  }
};

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

namespace detail {

inline Json resolve(const Json& j, const std::filesystem::path& base) {
  if (j.is_string()) return read_json_file(base / j.get<std::string>());
  return j;
}

}  // namespace detail

inline Scenario scenario_from_json(const Json& j, const std::filesystem::path& base = ".") {
  if (!j.is_object()) throw ParseError("scenario: expected an object");
  Scenario sc;
  try {
    if (j.contains("system")) sc.system = system_from_json(detail::resolve(j.at("system"), base));
    if (j.contains("graph")) sc.graph = graph_from_json(detail::resolve(j.at("graph"), base));
    if (j.contains("tf")) sc.tf = tf_from_json(detail::resolve(j.at("tf"), base));
    if (j.contains("gain") && j.contains("k")) throw ParseError("scenario: give either gain or k");
    if (j.contains("gain")) sc.gain = matrix_from_json(j.at("gain"), "scenario.gain");
    if (j.contains("k")) sc.gain = scalar_gain(number_from_json(j.at("k"), "scenario.k"));
  } catch (const Json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  if (sc.system && sc.gain) check_gain(*sc.system, *sc.gain);
  return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_json_file(path), path.parent_path().empty() ? "." : path.parent_path());
}

inline Json scenario_to_json(const Scenario& sc) {
  Json j = Json::object();
  if (sc.system) j["system"] = system_to_json(*sc.system);
  if (sc.gain) j["gain"] = matrix_to_json(*sc.gain);
  if (sc.graph) j["graph"] = graph_to_json(*sc.graph);
  if (sc.tf) j["tf"] = tf_to_json(*sc.tf);
  return j;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string region_csv(const RegionGrid& grid) {
  std::ostringstream out;
  out << "re,im,member,margin\n";
  for (int iy = 0; iy < grid.resolution.ny; ++iy) {
    for (int ix = 0; ix < grid.resolution.nx; ++ix) {
      const Complex c = grid.center(ix, iy);
      out << format_double(c.real()) << ',' << format_double(c.imag()) << ','
          << (grid.member(ix, iy) ? 1 : 0) << ',' << format_double(grid.margin[grid.index(ix, iy)]) << '\n';
    }
  }
  return out.str();
}

inline std::string nyquist_csv(const NyquistCurve& curve) {
  std::ostringstream out;
  out << "omega,re,im,segment\n";
  for (const auto& s : curve.samples()) {
    out << format_double(s.omega) << ',' << format_double(s.value.real()) << ','
        << format_double(s.value.imag()) << ',' << s.segment << '\n';
  }
  return out.str();
}

inline std::string trajectory_csv(const Trajectory& tr, bool with_states) {
  std::ostringstream out;
  out << "t,e";
  if (with_states && !tr.states.empty()) {
    for (Eigen::Index i = 0; i < tr.states.front().size(); ++i) out << ",x_" << (i + 1);
  }
  out << '\n';
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    out << format_double(tr.times[i]) << ',' << format_double(tr.disagreement[i]);
    if (with_states) {
      for (Eigen::Index k = 0; k < tr.states[i].size(); ++k) out << ',' << format_double(tr.states[i](k));
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace syncregion::io
