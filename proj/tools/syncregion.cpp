// syncregion: command-line front end.
//
// Exit codes: 0 synchronizes / certified, 1 does not synchronize / not-OFS,
// 2 parse error, 3 dimension mismatch, 4 indeterminate / inconclusive,
// 5 divergent simulation.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "syncregion/syncregion.hpp"

namespace fs = std::filesystem;
using namespace syncregion;
using io::Json;

namespace {

enum Exit : int {
  kSync = 0,
  kNoSync = 1,
  kParse = 2,
  kDims = 3,
  kIndeterminate = 4,
  kDiverged = 5,
};

struct Common {
  std::string scenario;
  std::string out;
  std::optional<double> k;
  std::optional<int> n;
  std::uint64_t seed = 1;
  std::optional<double> tol;
  std::vector<double> window{-10.0, 10.0, -10.0, 10.0};
  std::vector<int> res{101, 101};
};

void emit(const Common& c, const std::string& name, const std::string& text) {
  if (c.out.empty()) return;
  fs::create_directories(c.out);
  io::write_text_file(fs::path(c.out) / name, text);
}

io::Scenario load(const Common& c) {
  if (c.scenario.empty()) throw io::ParseError("--scenario is required");
  io::Scenario sc = io::load_scenario(c.scenario);
  if (c.k) {
    if (!sc.system || !sc.system->is_siso()) {
      throw DimensionError("--k needs a SISO system in the scenario");
    }
    sc.gain = scalar_gain(*c.k);
  }
  return sc;
}

const LtiSystem& need_system(const io::Scenario& sc) {
  if (!sc.system) throw io::ParseError("scenario has no system");
  return *sc.system;
}

GainMatrix need_gain(const io::Scenario& sc) {
  if (!sc.gain) throw io::ParseError("scenario has no gain (give \"gain\", \"k\" or --k)");
  check_gain(need_system(sc), *sc.gain);
  return *sc.gain;
}

const WeightedDigraph& need_graph(const io::Scenario& sc) {
  if (!sc.graph) throw io::ParseError("scenario has no graph");
  return *sc.graph;
}

ScanWindow window_of(const Common& c) {
  return {c.window[0], c.window[1], c.window[2], c.window[3]};
}

// ---------------------------------------------------------------------------
// SVG

struct SvgFrame {
  double x0, x1, y0, y1;
  double width = 600.0, height = 600.0;
  [[nodiscard]] double px(double x) const { return (x - x0) / (x1 - x0) * width; }
  [[nodiscard]] double py(double y) const { return (y1 - y) / (y1 - y0) * height; }
};

std::string svg_open(const SvgFrame& f) {
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
    << "\" viewBox=\"0 0 " << f.width << ' ' << f.height << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (f.x0 < 0 && f.x1 > 0) {
    o << "<line x1=\"" << f.px(0) << "\" y1=\"0\" x2=\"" << f.px(0) << "\" y2=\"" << f.height
      << "\" stroke=\"gray\" stroke-width=\"0.5\"/>\n";
  }
  if (f.y0 < 0 && f.y1 > 0) {
    o << "<line x1=\"0\" y1=\"" << f.py(0) << "\" x2=\"" << f.width << "\" y2=\"" << f.py(0)
      << "\" stroke=\"gray\" stroke-width=\"0.5\"/>\n";
  }
  return o.str();
}

std::string region_svg(const RegionGrid& g, const std::vector<Complex>& marks) {
  const SvgFrame f{g.window.re_min, g.window.re_max, g.window.im_min, g.window.im_max};
  std::ostringstream o;
  o << svg_open(f);
  const double w = f.width / g.resolution.nx;
  const double h = f.height / g.resolution.ny;
  for (int iy = 0; iy < g.resolution.ny; ++iy) {
    for (int ix = 0; ix < g.resolution.nx; ++ix) {
      if (!g.member(ix, iy)) continue;
      o << "<rect x=\"" << ix * w << "\" y=\"" << f.height - (iy + 1) * h << "\" width=\"" << w
        << "\" height=\"" << h << "\" fill=\"#7fa7d9\"/>\n";
    }
  }
  for (const auto& m : marks) {
    o << "<circle cx=\"" << f.px(m.real()) << "\" cy=\"" << f.py(m.imag())
      << "\" r=\"3\" fill=\"none\" stroke=\"black\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string nyquist_svg(const NyquistCurve& c) {
  double r = 1e-3;
  for (const auto& s : c.samples()) r = std::max(r, std::abs(s.value));
  r = std::min(r, 1e3) * 1.1;
  const SvgFrame f{-r, r, -r, r};
  std::ostringstream o;
  o << svg_open(f) << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"";
  for (const auto& s : c.samples()) {
    const double x = std::clamp(s.value.real(), -r, r);
    const double y = std::clamp(s.value.imag(), -r, r);
    o << f.px(x) << ',' << f.py(y) << ' ';
  }
  o << "\"/>\n</svg>\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Commands

int cmd_region(const Common& c, bool svg) {
  const io::Scenario sc = load(c);
  const LtiSystem& sys = need_system(sc);
  const GainMatrix k = need_gain(sc);
  const RegionGrid grid = region_scan(sys, k, window_of(c), {c.res[0], c.res[1]}, c.tol.value_or(0.0));
  emit(c, "region.csv", io::region_csv(grid));
  std::vector<Complex> marks;
  if (sc.graph) marks = reduced_interconnection(*sc.graph).spectrum.values;
  if (svg) emit(c, "region.svg", region_svg(grid, marks));
  Json report{{"command", "region"},
              {"cells", grid.membership.size()},
              {"member_cells", grid.member_count()},
              {"window", {c.window[0], c.window[1], c.window[2], c.window[3]}},
              {"resolution", {c.res[0], c.res[1]}}};
  std::cout << io::dump(report);
  return kSync;
}

int cmd_check(const Common& c, bool oracle) {
  const io::Scenario sc = load(c);
  const LtiSystem& sys = need_system(sc);
  const GainMatrix k = need_gain(sc);
  const WeightedDigraph& g = need_graph(sc);
  const double guard = c.tol.value_or(kBoundaryGuard);

  SyncVerdict v = check_network_sync(sys, k, g);
  v.determinate = v.min_abs_margin() > guard;
  if (oracle) {
    const Eigen::Index dim = sys.states() * (g.node_count() - 1);
    if (dim <= kDefaultOracleMaxDimension) v.oracle_agreement = check_network_sync_oracle(sys, k, g) == v.synchronizes;
  }
  Json report{{"command", "check"}, {"verdict", io::verdict_to_json(v)}};
  if (sys.is_siso() && k(0, 0) != 0.0) {
    const SyncVerdict nv = nyquist_sync_check(sys, k(0, 0), g);
    report["nyquist"] = io::verdict_to_json(nv);
    report["nyquist_agrees"] = nv.synchronizes == v.synchronizes;
  }
  const std::string text = io::dump(report);
  emit(c, "check.json", text);
  std::cout << text;
  if (!v.determinate) return kIndeterminate;
  return v.synchronizes ? kSync : kNoSync;
}

int cmd_ofs(const Common& c, bool lyapunov) {
  const io::Scenario sc = load(c);
  const LtiSystem& sys = need_system(sc);
  if (!c.n) throw io::ParseError("--N is required for ofs");
  SearchConfig cfg;
  cfg.seed = c.seed;
  cfg.attach_lyapunov = lyapunov;
  cfg.s_window = window_of(c);
  cfg.s_grid = {c.res[0], c.res[1]};
  const OfsResult r = ofs_check(sys, *c.n, cfg);
  const Json report = io::ofs_result_to_json(r);
  emit(c, "ofs.json", io::dump(report));
  if (r.certificate) emit(c, "certificate.json", io::dump(io::certificate_to_json(*r.certificate)));
  std::cout << io::dump(report);
  switch (r.status) {
    case OfsStatus::kCertified: return kSync;
    case OfsStatus::kNotOfs: return kNoSync;
    case OfsStatus::kInconclusive: return kIndeterminate;
  }
  return kIndeterminate;
}

// Real s with -1/(s k) in (lo, hi); (lo, hi) never contains 0.
Json s_interval(const RealInterval& iv, double k) {
  const auto map = [k](double q) {
    if (q == 0.0) return std::numeric_limits<double>::infinity();
    if (std::isinf(q)) return 0.0;
    return -1.0 / (q * k);
  };
  double a = map(iv.lo), b = map(iv.hi);
  if (iv.lo == 0.0) a = (iv.hi > 0.0) == (k > 0.0) ? -std::numeric_limits<double>::infinity()
                                                   : std::numeric_limits<double>::infinity();
  if (iv.hi == 0.0) b = (iv.lo < 0.0) == (k > 0.0) ? std::numeric_limits<double>::infinity()
                                                  : -std::numeric_limits<double>::infinity();
  if (a > b) std::swap(a, b);
  return Json{io::number_to_json(a), io::number_to_json(b)};
}

int cmd_nyquist(const Common& c, bool svg, double range) {
  const io::Scenario sc = load(c);
  std::optional<RationalTF> h = sc.tf;
  if (!h) {
    const LtiSystem& sys = need_system(sc);
    if (!sys.is_siso()) throw DimensionError("nyquist needs a SISO system");
    h = transfer_function(sys);
  }
  const NyquistRegion region(*h);
  const RealAxisIntervals ri = real_axis_stable_intervals(region, range);
  emit(c, "nyquist.csv", io::nyquist_csv(region.finest()));
  if (svg) emit(c, "nyquist.svg", nyquist_svg(region.finest()));
  Json report{{"command", "nyquist"},
              {"tf", io::tf_to_json(*h)},
              {"p_plus", h->p_plus()},
              {"pip", pip_check(*h)},
              {"real_axis", io::intervals_to_json(ri)}};
  double k = 1.0;
  if (c.k) k = *c.k;
  else if (sc.gain && sc.gain->size() == 1) k = (*sc.gain)(0, 0);
  if (k != 0.0) {
    Json s = Json::array();
    for (const auto& iv : ri.intervals) s.push_back(s_interval(iv, k));
    report["k"] = k;
    report["region_real_intervals"] = std::move(s);
  }
  const std::string text = io::dump(report);
  emit(c, "nyquist.json", text);
  std::cout << text;
  return kSync;
}

struct SimFlags {
  std::optional<double> T;
  std::optional<double> dt;
  std::string method = "exact";
  bool states = false;
  double threshold = kDefaultSyncThreshold;
};

int cmd_simulate(const Common& c, const SimFlags& f) {
  const io::Scenario sc = load(c);
  const LtiSystem& sys = need_system(sc);
  const GainMatrix k = need_gain(sc);
  const WeightedDigraph& g = need_graph(sc);
  SimConfig cfg;
  cfg.seed = c.seed;
  if (f.method == "rk4") cfg.method = SimMethod::kRk4;
  else if (f.method != "exact") throw io::ParseError("--method must be exact or rk4");
  std::optional<double> margin;
  try {
    margin = check_network_sync(sys, k, g).min_margin();
  } catch (const NumericalError&) {
  }
  cfg.T = f.T.value_or(default_horizon(margin));
  cfg.dt = f.dt.value_or(cfg.T / 2000.0);
  const Trajectory tr = simulate_network(sys, k, g, cfg);
  emit(c, "trajectory.csv", io::trajectory_csv(tr, f.states));
  const TrajectoryVerdict v = tr.times.size() >= 2 && !tr.diverged
                                  ? sync_verdict_from_trajectory(tr, f.threshold)
                                  : TrajectoryVerdict{};
  Json report{{"command", "simulate"},
              {"T", io::number_to_json(cfg.T)},
              {"dt", io::number_to_json(cfg.dt)},
              {"method", f.method},
              {"seed", cfg.seed},
              {"diverged", tr.diverged},
              {"synchronized", v.synchronized},
              {"vacuous", v.vacuous},
              {"rate", io::number_to_json(v.rate)},
              {"e0", io::number_to_json(tr.disagreement.front())},
              {"eT", io::number_to_json(tr.disagreement.back())}};
  const std::string text = io::dump(report);
  emit(c, "simulate.json", text);
  std::cout << text;
  if (tr.diverged) return kDiverged;
  return v.synchronized ? kSync : kNoSync;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synchronization analysis for networks of identical LTI systems"};
  app.require_subcommand(1);
  Common c;
  bool svg = false, oracle = true, lyapunov = false;
  double range = 1e3;
  SimFlags sim;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", c.scenario, "Scenario JSON file")->required();
    sub->add_option("--out", c.out, "Output directory");
    sub->add_option("--k", c.k, "Scalar gain override (SISO)");
    sub->add_option("--seed", c.seed, "Random seed");
    sub->add_option("--tol", c.tol, "Tolerance (hurwitz margin for region, boundary guard for check)");
    sub->add_option("--window", c.window, "re_min,re_max,im_min,im_max")->delimiter(',')->expected(4);
    sub->add_option("--res", c.res, "nx,ny")->delimiter(',')->expected(2);
    sub->add_option("--N", c.n, "Number of agents");
  };
  auto* region = app.add_subcommand("region", "Scan the synchronization region");
  common(region);
  region->add_flag("--svg", svg, "Also write region.svg");
  auto* check = app.add_subcommand("check", "Decide synchronization of a network");
  common(check);
  check->add_flag("--oracle,!--no-oracle", oracle, "Cross-check with the Kronecker oracle");
  auto* ofs = app.add_subcommand("ofs", "Output-feedback synchronizability of N copies");
  common(ofs);
  ofs->add_flag("--lyapunov", lyapunov, "Attach a Lyapunov certificate when possible");
  auto* nyq = app.add_subcommand("nyquist", "Nyquist contour and real-axis analysis");
  common(nyq);
  nyq->add_flag("--svg", svg, "Also write nyquist.svg");
  nyq->add_option("--range", range, "Real-axis scan range");
  auto* simulate = app.add_subcommand("simulate", "Simulate the network");
  common(simulate);
  simulate->add_option("--T", sim.T, "Horizon");
  simulate->add_option("--dt", sim.dt, "Output step");
  simulate->add_option("--method", sim.method, "exact or rk4");
  simulate->add_flag("--csv-states", sim.states, "Include states in trajectory.csv");
  simulate->add_option("--threshold", sim.threshold, "Relative disagreement threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kParse;
  }
  if (c.res[0] < 2 || c.res[1] < 2) {
    std::cerr << "error: --res must be at least 2,2\n";
    return kParse;
  }

  try {
    if (region->parsed()) return cmd_region(c, svg);
    if (check->parsed()) return cmd_check(c, oracle);
    if (ofs->parsed()) return cmd_ofs(c, lyapunov);
    if (nyq->parsed()) return cmd_nyquist(c, svg, range);
    if (simulate->parsed()) return cmd_simulate(c, sim);
  } catch (const DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << '\n';
    return kDims;
  } catch (const io::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const io::Json::exception& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIndeterminate;
  }
  return kParse;
}
