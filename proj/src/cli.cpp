#include "ssmsel/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include "ssmsel/curvature.hpp"
#include "ssmsel/mode_selection.hpp"
#include "ssmsel/model_io.hpp"
#include "ssmsel/periodic_response.hpp"

namespace fs = std::filesystem;

namespace ssmsel::cli {

namespace {

const std::vector<std::string> kCommands = {"eig", "model",  "ssm",    "curvature",
                                            "select", "frc", "asweep", "reproduce"};
const std::vector<std::string> kCases = {"three-mass-frc", "beam-table1", "beam-asweep",
                                         "beam-appendixB", "curved-frc"};

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string join_ints(const std::vector<int>& v, const char* sep = ", ") {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? sep : "") << v[i];
  return os.str();
}

// Shortest text that reads back to the same double.
std::string fmt(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

bool is_builtin(const std::string& model) {
  return model == "three-mass" || model == "straight-beam" || model == "curved-beam";
}

}  // namespace

void RunConfig::validate() const {
  if (!contains(kCommands, command)) throw ConfigError("unknown command '" + command + "'");
  if (command == "reproduce" && !contains(kCases, reproduce_case)) {
    throw ConfigError("unknown reproduce case '" + reproduce_case +
                      "' (expected three-mass-frc, beam-table1, beam-asweep, beam-appendixB "
                      "or curved-frc)");
  }
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("p must lie in (0, 1)");
  if (N < 1) throw ConfigError("N must be at least 1");
  if (nh < 1) throw ConfigError("nh must be at least 1");
  if (n_elem && *n_elem < 2) throw ConfigError("n-elem must be at least 2");
  if (support && *support != "hinged" && *support != "clamped") {
    throw ConfigError("support must be hinged or clamped");
  }
  if (load != "nodal" && load != "consistent") throw ConfigError("load must be nodal or consistent");
  if (omega && !(*omega > 0.0)) throw ConfigError("omega must be positive");
  if (omega_min.has_value() != omega_max.has_value()) {
    throw ConfigError("omega-min and omega-max must be given together");
  }
  if (omega_min && !(*omega_min > 0.0 && *omega_max > 0.0 && *omega_min != *omega_max)) {
    throw ConfigError("frequency range must be positive and non-empty");
  }
  if (eps_min == eps_max) throw ConfigError("amplitude range is empty");
  if ((command == "ssm" || command == "curvature") && master.empty()) {
    throw ConfigError(command + " needs --master");
  }
  if (step < 0.0) throw ConfigError("step must be non-negative");
}

std::vector<std::string> RunConfig::describe() const {
  std::vector<std::string> lines;
  auto add = [&](const std::string& k, const std::string& v) { lines.push_back(k + " = " + v); };
  auto quoted = [](const std::string& s) { return "\"" + s + "\""; };
  auto list = [](const std::vector<int>& v) { return "[" + join_ints(v) + "]"; };
  add("model", quoted(model));
  if (n_elem) add("n-elem", std::to_string(*n_elem));
  if (support) add("support", quoted(*support));
  add("load", quoted(load));
  if (force) add("force", fmt(*force));
  add("epsilon", fmt(epsilon));
  if (omega) add("omega", fmt(*omega));
  if (omega_min) add("omega-min", fmt(*omega_min));
  if (omega_max) add("omega-max", fmt(*omega_max));
  add("eps-min", fmt(eps_min));
  add("eps-max", fmt(eps_max));
  add("nh", std::to_string(nh));
  if (!master.empty()) add("master", list(master));
  if (!initial.empty()) add("initial", list(initial));
  add("p", fmt(p));
  add("N", std::to_string(N));
  add("repeat", repeat ? "true" : "false");
  if (!dofs.empty()) add("dofs", list(dofs));
  add("step", fmt(step));
  add("svg", svg ? "true" : "false");
  return lines;
}

LoadedModel load_model(const RunConfig& cfg) {
  LoadedModel lm;
  lm.name = cfg.model;
  if (cfg.model == "three-mass") {
    auto sys = std::make_shared<SecondOrderSystem>(build_three_mass());
    Vector f = Vector::Zero(3);
    f[0] = cfg.force.value_or(0.02);
    lm.system = sys;
    lm.forcing = {f, cfg.omega.value_or(2.0), cfg.epsilon};
    lm.dof_labels = {"xi1", "eta2", "eta3"};
    lm.default_dofs = {0, 1, 2};
    return lm;
  }
  if (cfg.model == "straight-beam" || cfg.model == "curved-beam") {
    const bool curved = cfg.model == "curved-beam";
    BeamParams params = curved ? curved_beam_params() : straight_beam_params();
    if (cfg.n_elem) params.n_elem = *cfg.n_elem;
    if (cfg.support) params.support = parse_support(*cfg.support);
    BeamModel beam = build_beam(params);
    auto sys = std::make_shared<SecondOrderSystem>(beam.system);
    const double F = cfg.force.value_or(curved ? 80.0 : 2.3);
    double omega = 26.0;
    if (curved || cfg.omega) omega = cfg.omega.value_or(0.0);
    if (!(omega > 0.0)) omega = compute_modes(sys).frequency(1);
    lm.system = sys;
    lm.forcing = {beam.transverse_load(F, parse_load(cfg.load)), omega, cfg.epsilon};
    for (const auto& d : beam.dofs) {
      lm.dof_labels.push_back(std::string(to_string(d.kind)) + "@" + std::to_string(d.node + 1));
    }
    // Axial and transverse displacement of the 4th node.
    for (DofKind k : {DofKind::Axial, DofKind::Transverse}) {
      const int i = beam.index(3, k);
      if (i >= 0) lm.default_dofs.push_back(i);
    }
    lm.beam = std::move(beam);
    return lm;
  }
  if (cfg.n_elem || cfg.support) throw ConfigError("beam options require a built-in beam model");
  if (!fs::exists(cfg.model)) throw ConfigError("model file '" + cfg.model + "' does not exist");
  ModelFile file = read_model(cfg.model);
  auto sys = std::make_shared<SecondOrderSystem>(std::move(file.system));
  lm.system = sys;
  if (file.forcing) {
    lm.forcing = *file.forcing;
    lm.forcing.epsilon *= cfg.epsilon;
  } else {
    lm.forcing = {Vector::Zero(sys->n), 0.0, cfg.epsilon};
  }
  if (cfg.force) throw ConfigError("--force applies to built-in models; use --epsilon for files");
  if (cfg.omega) lm.forcing.omega = *cfg.omega;
  for (int i = 0; i < sys->n; ++i) lm.dof_labels.push_back("q" + std::to_string(i + 1));
  for (int i = 0; i < std::min(sys->n, 3); ++i) lm.default_dofs.push_back(i);
  return lm;
}

namespace {

// ---------------------------------------------------------------------------
// Output helpers

class Output {
 public:
  Output(const RunConfig& cfg, std::ostream& out) : cfg_(cfg), out_(out) {
    fs::create_directories(cfg.out_dir);
  }

  std::ofstream open(const std::string& name) {
    const fs::path path = fs::path(cfg_.out_dir) / name;
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write output file '" + path.string() + "'");
    os << std::setprecision(12);
    os << "# ssmsel " << cfg_.command;
    if (cfg_.command == "reproduce") os << " " << cfg_.reproduce_case;
    os << "\n";
    for (const auto& line : cfg_.describe()) os << "# " << line << "\n";
    out_ << "wrote " << path.string() << "\n";
    return os;
  }

  bool svg() const { return cfg_.svg; }
  fs::path path(const std::string& name) const { return fs::path(cfg_.out_dir) / name; }
  std::ostream& log() { return out_; }

 private:
  const RunConfig& cfg_;
  std::ostream& out_;
};

struct Series {
  std::string name;
  std::vector<double> x, y;
};

void write_svg(const fs::path& path, const std::string& title, const std::string& xlabel,
               const std::string& ylabel, const std::vector<Series>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = 0.0, y1 = -x0;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y1 = std::max(y1, v);
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write output file '" + path.string() + "'");
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
       << std::setprecision(4) << xv << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yv
       << "</text>\n";
  }
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
     << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    os << "<polyline fill=\"none\" stroke=\"" << colors[k % 6] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << "," << py(s.y[i]) << " ";
    os << "\"/>\n";
    os << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (k + 1) << "\" text-anchor=\"end\" fill=\""
       << colors[k % 6] << "\">" << s.name << "</text>\n";
  }
  os << "</svg>\n";
}

ContinuationOptions continuation(const RunConfig& cfg) {
  ContinuationOptions opts;
  opts.hb.nh = cfg.nh;
  opts.initial_step = cfg.step;
  return opts;
}

// A traced curve together with the map to physical coordinates.
struct NamedCurve {
  std::string name;
  ResponseCurve curve;
  Matrix lift;  // empty for physical curves
};

PeriodicSolution physical(const NamedCurve& c, const PeriodicSolution& s) {
  if (c.lift.size() == 0) return s;
  PeriodicSolution out = s;
  out.coeffs = c.lift * s.coeffs;
  return out;
}

void write_curves(std::ostream& os, const std::vector<NamedCurve>& curves,
                  const LoadedModel& lm, const std::vector<int>& dofs, const std::string& param,
                  double param_scale) {
  for (const auto& c : curves) {
    for (const auto& d : c.curve.diagnostics) os << "# " << c.name << ": " << d << "\n";
    for (const auto& j : c.curve.jumps) {
      os << "# " << c.name << ": discontinuity at " << param << " = " << j.param * param_scale
         << " (norm " << j.norm_before << " -> " << j.norm_after << ")\n";
    }
    for (double t : c.curve.turning_points) {
      os << "# " << c.name << ": turning point at " << param << " = " << t * param_scale << "\n";
    }
    if (!c.curve.complete) os << "# " << c.name << ": branch incomplete\n";
  }
  os << "curve," << param << ",response_norm,mass_norm";
  for (int d : dofs) os << ",amp_" << lm.dof_labels[d];
  os << ",residual,iterations,arclength\n";
  for (const auto& c : curves) {
    for (const auto& p : c.curve.points) {
      const PeriodicSolution q = physical(c, p.solution);
      os << c.name << "," << p.param * param_scale << "," << p.norm << "," << p.mass_norm;
      for (int d : dofs) os << "," << q.dof_amplitude(d);
      os << "," << p.solution.residual << "," << p.solution.iterations << "," << (p.arclength ? 1 : 0)
         << "\n";
    }
  }
}

void curves_svg(Output& out, const std::string& file, const std::string& title,
                const std::string& xlabel, const std::vector<NamedCurve>& curves,
                double param_scale) {
  if (!out.svg()) return;
  std::vector<Series> series;
  for (const auto& c : curves) {
    Series s{c.name, {}, {}};
    for (const auto& p : c.curve.points) {
      s.x.push_back(p.param * param_scale);
      s.y.push_back(p.norm);
    }
    series.push_back(std::move(s));
  }
  write_svg(out.path(file), title, xlabel, "max_t |q(t)|", series);
  out.log() << "wrote " << out.path(file).string() << "\n";
}

std::vector<int> report_dofs(const RunConfig& cfg, const LoadedModel& lm) {
  if (cfg.dofs.empty()) return lm.default_dofs;
  std::vector<int> out;
  for (int d : cfg.dofs) {
    if (d < 1 || d > lm.system->n) throw ConfigError("dof " + std::to_string(d) + " out of range");
    out.push_back(d - 1);
  }
  return out;
}

std::vector<int> range(int a, int b) {
  std::vector<int> v(b - a + 1);
  std::iota(v.begin(), v.end(), a);
  return v;
}

std::string set_label(const MasterSplit& s) { return "{" + join_ints(s.master(), " ") + "}"; }

NamedCurve full_curve(const std::string& name, ResponseCurve c) { return {name, std::move(c), Matrix()}; }

SecondOrderSystem linearized(const SecondOrderSystem& sys) { return {sys.M, sys.C, sys.K}; }

void require_forcing(const LoadedModel& lm) {
  if (lm.forcing.amplitude.isZero(0.0)) {
    throw ConfigError("model has no forcing; add a FORCE section or use a built-in model");
  }
  if (!(lm.forcing.omega > 0.0)) throw ConfigError("forcing frequency is not set; use --omega");
}

// ---------------------------------------------------------------------------
// Commands

int cmd_eig(const RunConfig& cfg, Output& out) {
  const LoadedModel lm = load_model(cfg);
  const ModalModel modal = compute_modes(lm.system);
  auto os = out.open("eigen.csv");
  os << "mode,omega,zeta,frequency_hz";
  if (lm.beam) os << ",axial_fraction";
  os << "\n";
  for (int k = 1; k <= modal.size(); ++k) {
    os << k << "," << modal.frequency(k) << "," << modal.damping(k) << ","
       << modal.frequency(k) / (2 * std::numbers::pi);
    if (lm.beam) {
      // Share of the modal kinetic energy carried by axial DOFs.
      const Vector u = modal.mode(k);
      Vector ua = Vector::Zero(u.size());
      for (int i = 0; i < u.size(); ++i) {
        if (lm.beam->dofs[i].kind == DofKind::Axial) ua[i] = u[i];
      }
      os << "," << ua.dot(lm.system->M * ua);
    }
    os << "\n";
  }
  out.log() << "n = " << modal.size() << ", omega_1 = " << modal.frequency(1) << " rad/s\n";
  return 0;
}

int cmd_model(const RunConfig& cfg, Output& out) {
  const LoadedModel lm = load_model(cfg);
  auto os = out.open("model.txt");
  std::optional<ForcingSpec> forcing;
  if (!lm.forcing.amplitude.isZero(0.0)) forcing = lm.forcing;
  write_model(os, *lm.system, forcing);
  return 0;
}

int cmd_ssm(const RunConfig& cfg, Output& out) {
  const LoadedModel lm = load_model(cfg);
  const ModalModel modal = compute_modes(lm.system);
  const MasterSplit split(cfg.master, modal.size());
  const NonresonanceReport nr = check_nonresonance(modal, split);
  const SSMCoefficients coeffs = compute_ssm(modal, split);
  auto os = out.open("ssm.csv");
  for (const auto& w : nr.warnings) os << "# " << w << "\n";
  for (const auto& v : nr.violations) {
    os << "# near resonance with slave mode " << v.slave << " (relative distance "
       << v.relative_distance << ")\n";
  }
  os << "mode,row,col,value\n";
  for (const auto& [k, W] : coeffs.W) {
    for (int r = 0; r < W.rows(); ++r)
      for (int c = 0; c < W.cols(); ++c) os << k << "," << r + 1 << "," << c + 1 << "," << W(r, c) << "\n";
  }
  out.log() << "master set " << set_label(split) << ", spectral quotient "
            << (nr.sigma ? std::to_string(*nr.sigma) : "n/a") << ", "
            << (nr.passed() ? "no" : std::to_string(nr.violations.size())) << " near resonances\n";
  return 0;
}

void write_curvature(std::ostream& os, const CurvatureReport& rep) {
  const double total = rep.sum_abs();
  os << "mode,curvature,abs_curvature,share,w_norm\n";
  for (const auto& e : rep.entries) {
    os << e.mode << "," << e.curvature << "," << std::abs(e.curvature) << ","
       << (total > 0 ? std::abs(e.curvature) / total : 0.0) << "," << e.w_norm << "\n";
  }
}

int cmd_curvature(const RunConfig& cfg, Output& out) {
  const LoadedModel lm = load_model(cfg);
  const ModalModel modal = compute_modes(lm.system);
  const MasterSplit split(cfg.master, modal.size());
  const CurvatureReport rep = curvature_report(compute_ssm(modal, split));
  auto os = out.open("curvature.csv");
  os << "# total curvature " << rep.total << "\n";
  write_curvature(os, rep);
  const auto ranked = rep.ranked();
  out.log() << "largest |curv_k|:";
  for (std::size_t i = 0; i < std::min<std::size_t>(5, ranked.size()); ++i) {
    out.log() << " " << ranked[i].mode << " (" << ranked[i].curvature << ")";
  }
  out.log() << "\n";
  return 0;
}

SelectionReport selection(const RunConfig& cfg, const ModalModel& modal, const ForcingSpec& f,
                          int N, std::optional<std::vector<int>> initial) {
  SelectionConfig sc;
  sc.p = cfg.p;
  sc.N = N;
  sc.repeat = cfg.repeat;
  if (!cfg.initial.empty()) initial = cfg.initial;
  sc.initial = std::move(initial);
  return run_selection(modal, f, sc);
}

void write_selection(Output& out, const SelectionReport& rep, const std::string& prefix) {
  auto os = out.open(prefix + "selection.txt");
  os << "initial " << set_label(rep.initial) << "\n";
  if (rep.linear) {
    os << "linear_participation";
    for (double v : rep.linear->participation) os << " " << v;
    os << "\n";
  }
  for (std::size_t r = 0; r < rep.rounds.size(); ++r) {
    const auto& round = rep.rounds[r];
    os << "round " << r + 1 << " master " << set_label(round.split) << " recommended {"
       << join_ints(round.recommendation.added, " ") << "} accepted {"
       << join_ints(round.accepted, " ") << "}\n";
    auto cs = out.open(prefix + "curvature_round" + std::to_string(r + 1) + ".csv");
    cs << "# master " << set_label(round.split) << "\n";
    write_curvature(cs, round.recommendation.curvature);
  }
  os << "final " << set_label(rep.final_set) << "\n";
  os << "termination " << rep.termination << "\n";
  out.log() << "selected " << set_label(rep.final_set) << " (" << rep.termination << ")\n";
}

int cmd_select(const RunConfig& cfg, Output& out) {
  const LoadedModel lm = load_model(cfg);
  const ModalModel modal = compute_modes(lm.system);
  if (cfg.initial.empty()) require_forcing(lm);
  write_selection(out, selection(cfg, modal, lm.forcing, cfg.N, std::nullopt), "");
  return 0;
}

int cmd_frc(const RunConfig& cfg, Output& out) {
  const LoadedModel lm = load_model(cfg);
  if (lm.forcing.amplitude.isZero(0.0)) throw ConfigError("model has no forcing");
  const ModalModel modal = compute_modes(lm.system);
  const double w1 = modal.frequency(1);
  const double lo = cfg.omega_min.value_or(0.7 * w1), hi = cfg.omega_max.value_or(1.3 * w1);
  const ContinuationOptions opts = continuation(cfg);
  std::vector<NamedCurve> curves;
  if (cfg.master.empty()) {
    curves.push_back(full_curve("full", frequency_sweep(*lm.system, lm.forcing, lo, hi, opts)));
  } else {
    const ReducedModel rom = reduce(modal, MasterSplit(cfg.master, modal.size()), lm.forcing);
    curves.push_back({"rom" + set_label(rom.split), frequency_sweep(rom, lo, hi, opts), rom.lift});
  }
  auto os = out.open("frc.csv");
  write_curves(os, curves, lm, report_dofs(cfg, lm), "omega", 1.0);
  curves_svg(out, "frc.svg", "forced response", "omega [rad/s]", curves, 1.0);
  for (const auto& d : curves.front().curve.diagnostics) out.log() << "note: " << d << "\n";
  return 0;
}

int cmd_asweep(const RunConfig& cfg, Output& out) {
  const LoadedModel lm = load_model(cfg);
  require_forcing(lm);
  const ModalModel modal = compute_modes(lm.system);
  const ContinuationOptions opts = continuation(cfg);
  const double e0 = cfg.eps_min * lm.forcing.epsilon, e1 = cfg.eps_max * lm.forcing.epsilon;
  const ForcingSpec unit = lm.forcing.with_epsilon(1.0);
  std::vector<NamedCurve> curves;
  if (cfg.master.empty()) {
    curves.push_back(full_curve("full", amplitude_sweep(*lm.system, unit, e0, e1, opts)));
  } else {
    const ReducedModel rom = reduce(modal, MasterSplit(cfg.master, modal.size()), unit);
    curves.push_back({"rom" + set_label(rom.split), amplitude_sweep(rom, e0, e1, opts), rom.lift});
  }
  auto os = out.open("asweep.csv");
  write_curves(os, curves, lm, report_dofs(cfg, lm), "epsilon", 1.0);
  curves_svg(out, "asweep.svg", "amplitude sweep", "epsilon", curves, 1.0);
  return 0;
}

// ---------------------------------------------------------------------------
// Reproduction bundles

struct ErrorRow {
  std::string name;
  MasterSplit split;
  double e_r = std::numeric_limits<double>::quiet_NaN();
  double norm = 0.0;
  bool complete = false;
  std::size_t jumps = 0;
};

// Amplitude sweeps of the full model and each ROM up to the nominal load,
// followed by the mass-norm error at the end point.
std::vector<ErrorRow> error_table(const RunConfig& cfg, const LoadedModel& lm,
                                  const ModalModel& modal,
                                  const std::vector<std::pair<std::string, MasterSplit>>& sets,
                                  std::vector<NamedCurve>& curves) {
  const ContinuationOptions opts = continuation(cfg);
  const ForcingSpec unit = lm.forcing.with_epsilon(1.0);
  const double e0 = cfg.eps_min * lm.forcing.epsilon, e1 = cfg.eps_max * lm.forcing.epsilon;
  curves.push_back(full_curve("full", amplitude_sweep(*lm.system, unit, e0, e1, opts)));
  const ResponseCurve full = curves.back().curve;
  std::vector<ErrorRow> rows;
  for (const auto& [name, split] : sets) {
    const ReducedModel rom = reduce(modal, split, unit);
    curves.push_back({name, amplitude_sweep(rom, e0, e1, opts), rom.lift});
    const ResponseCurve& c = curves.back().curve;
    ErrorRow row{name, split};
    row.complete = c.complete && full.complete;
    row.jumps = c.jumps.size();
    if (!c.points.empty()) row.norm = c.points.back().norm;
    if (row.complete) {
      row.e_r = relative_error(full.points.back().solution, lift(c.points.back().solution, rom),
                               lm.system->M);
    }
    rows.push_back(row);
  }
  return rows;
}

int reproduce_three_mass(RunConfig cfg, Output& out) {
  cfg.model = "three-mass";
  const LoadedModel lm = load_model(cfg);
  const ModalModel modal = compute_modes(lm.system);
  const double w1 = modal.frequency(1);
  const double lo = cfg.omega_min.value_or(0.7 * w1), hi = cfg.omega_max.value_or(1.3 * w1);
  const SelectionReport sel = selection(cfg, modal, lm.forcing, 2, std::nullopt);
  write_selection(out, sel, "three_mass_");
  const ContinuationOptions opts = continuation(cfg);

  std::vector<NamedCurve> curves;
  curves.push_back(full_curve("full", frequency_sweep(*lm.system, lm.forcing, lo, hi, opts)));
  curves.push_back(full_curve("linear", frequency_sweep(linearized(*lm.system), lm.forcing, lo, hi, opts)));
  const std::vector<std::pair<std::string, MasterSplit>> roms = {
      {"I1", MasterSplit({1, 2}, 3)}, {"I2", sel.final_set}};
  for (const auto& [name, split] : roms) {
    const ReducedModel rom = reduce(modal, split, lm.forcing);
    curves.push_back({name, frequency_sweep(rom, lo, hi, opts), rom.lift});
  }
  auto os = out.open("three_mass_frc.csv");
  os << "# I1 " << set_label(roms[0].second) << ", I2 " << set_label(roms[1].second) << "\n";
  for (const auto& c : curves) {
    const CurvePoint* pk = c.curve.peak();
    if (pk) os << "# peak " << c.name << ": omega " << pk->param << ", norm " << pk->norm << "\n";
  }
  write_curves(os, curves, lm, report_dofs(cfg, lm), "omega", 1.0);
  curves_svg(out, "three_mass_frc.svg", "three-mass response", "omega [rad/s]", curves, 1.0);
  for (const auto& c : curves) {
    if (const CurvePoint* pk = c.curve.peak()) {
      out.log() << c.name << ": peak at omega = " << pk->param << " (omega/omega_1 = " << pk->param / w1
                << "), norm " << pk->norm << "\n";
    }
  }
  return 0;
}

int reproduce_beam_errors(RunConfig cfg, Output& out, double default_force,
                          const std::string& file, const std::vector<double>& reference) {
  cfg.model = "straight-beam";
  if (!cfg.force) cfg.force = default_force;
  const LoadedModel lm = load_model(cfg);
  const ModalModel modal = compute_modes(lm.system);
  const std::vector<int> i0 = cfg.initial.empty() ? range(1, 5) : cfg.initial;
  const SelectionReport sel = selection(cfg, modal, lm.forcing, cfg.N, i0);
  write_selection(out, sel, "beam_");
  const std::vector<std::pair<std::string, MasterSplit>> sets = {
      {"I0", sel.initial}, {"I1", MasterSplit(range(1, 10), modal.size())}, {"I2", sel.final_set}};
  std::vector<NamedCurve> curves;
  const auto rows = error_table(cfg, lm, modal, sets, curves);
  auto os = out.open(file);
  os << "# reference e_r values with factor-2 tolerance bands\n";
  os << "set,modes,e_r,reference,response_norm,complete,jumps\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << r.name << "," << set_label(r.split) << "," << r.e_r << "," << reference[i] << "," << r.norm
       << "," << (r.complete ? 1 : 0) << "," << r.jumps << "\n";
    out.log() << r.name << " " << set_label(r.split) << ": e_r = " << r.e_r << "\n";
  }
  auto cs = out.open(fs::path(file).stem().string() + "_curves.csv");
  write_curves(cs, curves, lm, report_dofs(cfg, lm), "force", *cfg.force);
  return 0;
}

int reproduce_beam_asweep(RunConfig cfg, Output& out) {
  cfg.model = "straight-beam";
  const LoadedModel lm = load_model(cfg);
  const ModalModel modal = compute_modes(lm.system);
  const std::vector<int> i0 = cfg.initial.empty() ? range(1, 5) : cfg.initial;
  const SelectionReport sel = selection(cfg, modal, lm.forcing, cfg.N, i0);
  const ContinuationOptions opts = continuation(cfg);
  const ForcingSpec unit = lm.forcing.with_epsilon(1.0);
  const double e0 = cfg.eps_min * lm.forcing.epsilon, e1 = cfg.eps_max * lm.forcing.epsilon;
  std::vector<NamedCurve> curves;
  curves.push_back(full_curve("full", amplitude_sweep(*lm.system, unit, e0, e1, opts)));
  curves.push_back(full_curve("linear", amplitude_sweep(linearized(*lm.system), unit, e0, e1, opts)));
  const std::vector<std::pair<std::string, MasterSplit>> roms = {
      {"I1", MasterSplit(range(1, 10), modal.size())}, {"I2", sel.final_set}};
  for (const auto& [name, split] : roms) {
    const ReducedModel rom = reduce(modal, split, unit);
    curves.push_back({name, amplitude_sweep(rom, e0, e1, opts), rom.lift});
  }
  const double F = cfg.force.value_or(2.3);
  auto os = out.open("beam_asweep.csv");
  os << "# I1 " << set_label(roms[0].second) << ", I2 " << set_label(roms[1].second) << "\n";
  write_curves(os, curves, lm, report_dofs(cfg, lm), "force", F);
  curves_svg(out, "beam_asweep.svg", "amplitude sweep", "F [N]", curves, F);
  for (const auto& c : curves) {
    out.log() << c.name << ": " << c.curve.points.size() << " points, " << c.curve.jumps.size()
              << " discontinuities, end norm "
              << (c.curve.points.empty() ? 0.0 : c.curve.points.back().norm) << "\n";
  }
  return 0;
}

int reproduce_curved(RunConfig cfg, Output& out) {
  cfg.model = "curved-beam";
  const LoadedModel lm = load_model(cfg);
  const ModalModel modal = compute_modes(lm.system);
  const double w1 = modal.frequency(1);
  const double lo = cfg.omega_min.value_or(0.4 * w1), hi = cfg.omega_max.value_or(1.2 * w1);
  const std::vector<int> i0 = cfg.initial.empty() ? range(1, 5) : cfg.initial;
  const SelectionReport sel = selection(cfg, modal, lm.forcing, cfg.N, i0);
  write_selection(out, sel, "curved_");
  const ContinuationOptions opts = continuation(cfg);
  std::vector<NamedCurve> curves;
  curves.push_back(full_curve("full", frequency_sweep(*lm.system, lm.forcing, lo, hi, opts)));
  curves.push_back(full_curve("linear", frequency_sweep(linearized(*lm.system), lm.forcing, lo, hi, opts)));
  const std::vector<std::pair<std::string, MasterSplit>> roms = {
      {"I1", MasterSplit(range(1, sel.final_set.m()), modal.size())}, {"I2", sel.final_set}};
  for (const auto& [name, split] : roms) {
    const ReducedModel rom = reduce(modal, split, lm.forcing);
    curves.push_back({name, frequency_sweep(rom, lo, hi, opts), rom.lift});
  }
  auto os = out.open("curved_frc.csv");
  os << "# omega_1 " << w1 << "\n";
  os << "# I1 " << set_label(roms[0].second) << ", I2 " << set_label(roms[1].second) << "\n";
  for (const auto& c : curves) {
    const CurvePoint* pk = c.curve.peak();
    if (pk) os << "# peak " << c.name << ": omega " << pk->param << ", norm " << pk->norm << "\n";
  }
  write_curves(os, curves, lm, report_dofs(cfg, lm), "omega", 1.0);
  curves_svg(out, "curved_frc.svg", "curved beam response", "omega [rad/s]", curves, 1.0);
  out.log() << "omega_1 = " << w1 << " rad/s\n";
  for (const auto& c : curves) {
    if (const CurvePoint* pk = c.curve.peak()) {
      out.log() << c.name << ": peak at omega/omega_1 = " << pk->param / w1 << ", norm " << pk->norm << "\n";
    }
  }
  return 0;
}

int cmd_reproduce(const RunConfig& cfg, Output& out) {
  const std::string& c = cfg.reproduce_case;
  if (c == "three-mass-frc") return reproduce_three_mass(cfg, out);
  if (c == "beam-table1") return reproduce_beam_errors(cfg, out, 2.3, "beam_table1.csv", {0.22, 0.18, 0.03});
  if (c == "beam-appendixB") {
    return reproduce_beam_errors(cfg, out, 2.44, "beam_appendixB.csv", {15.25, 15.84, 0.11});
  }
  if (c == "beam-asweep") return reproduce_beam_asweep(cfg, out);
  return reproduce_curved(cfg, out);
}

void error_record(std::ostream& err, int status, const std::string& kind, const std::string& msg,
                  const RunConfig* cfg) {
  nlohmann::json j;
  j["status"] = status;
  j["error"] = kind;
  j["message"] = msg;
  if (cfg) {
    j["command"] = cfg->command;
    if (!is_builtin(cfg->model)) j["path"] = cfg->model;
  }
  err << j.dump() << "\n";
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
    Output output(cfg, out);
    if (cfg.command == "eig") return cmd_eig(cfg, output);
    if (cfg.command == "model") return cmd_model(cfg, output);
    if (cfg.command == "ssm") return cmd_ssm(cfg, output);
    if (cfg.command == "curvature") return cmd_curvature(cfg, output);
    if (cfg.command == "select") return cmd_select(cfg, output);
    if (cfg.command == "frc") return cmd_frc(cfg, output);
    if (cfg.command == "asweep") return cmd_asweep(cfg, output);
    return cmd_reproduce(cfg, output);
  } catch (const ConfigError& e) {
    error_record(err, 2, "config", e.what(), &cfg);
    return 2;
  } catch (const ModelFormatError& e) {
    error_record(err, 2, "model_format", e.what(), &cfg);
    return 2;
  } catch (const fs::filesystem_error& e) {
    error_record(err, 2, "io", e.what(), &cfg);
    return 2;
  } catch (const std::invalid_argument& e) {
    error_record(err, 2, "invalid_argument", e.what(), &cfg);
    return 2;
  } catch (const ModalError& e) {
    error_record(err, 3, "modal", e.what(), &cfg);
    return 3;
  } catch (const ResonanceError& e) {
    error_record(err, 3, "resonance", e.what(), &cfg);
    return 3;
  } catch (const ConvergenceError& e) {
    error_record(err, 3, "convergence", e.what(), &cfg);
    return 3;
  } catch (const std::exception& e) {
    error_record(err, 1, "internal", e.what(), &cfg);
    return 1;
  }
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mode selection for spectral-submanifold based reduced-order models"};
  app.set_config("--config", "", "Read options from a key = value file");
  RunConfig cfg;
  double force = std::numeric_limits<double>::quiet_NaN();
  double omega = force, omega_min = force, omega_max = force;
  int n_elem = 0;
  std::string support;

  app.add_option("command", cfg.command, "eig | model | ssm | curvature | select | frc | asweep | reproduce")
      ->required();
  app.add_option("case", cfg.reproduce_case,
                 "reproduce case: three-mass-frc | beam-table1 | beam-asweep | beam-appendixB | curved-frc");
  app.add_option("--model", cfg.model, "three-mass, straight-beam, curved-beam or a model file");
  app.add_option("--n-elem", n_elem, "Beam element count");
  app.add_option("--support", support, "Beam supports: hinged or clamped");
  app.add_option("--load", cfg.load, "Beam load discretization: consistent or nodal");
  app.add_option("--force", force, "Load amplitude of a built-in model");
  app.add_option("--epsilon", cfg.epsilon, "Forcing amplitude multiplier");
  app.add_option("--omega", omega, "Forcing frequency [rad/s]");
  app.add_option("--omega-min", omega_min, "Lower end of the frequency sweep [rad/s]");
  app.add_option("--omega-max", omega_max, "Upper end of the frequency sweep [rad/s]");
  app.add_option("--eps-min", cfg.eps_min, "Start of the amplitude sweep, fraction of the load");
  app.add_option("--eps-max", cfg.eps_max, "End of the amplitude sweep, fraction of the load");
  app.add_option("--nh", cfg.nh, "Number of harmonics");
  app.add_option("--master", cfg.master, "Master modes (1-based)")->delimiter(',');
  app.add_option("--initial", cfg.initial, "Initial master set for selection")->delimiter(',');
  app.add_option("--p", cfg.p, "Curvature tolerance");
  app.add_option("--N", cfg.N, "Maximum number of master modes");
  app.add_flag("--repeat", cfg.repeat, "Repeat selection rounds until N modes are reached");
  app.add_option("--dofs", cfg.dofs, "DOFs (1-based) reported in response tables")->delimiter(',');
  app.add_option("--step", cfg.step, "Initial continuation step (0: automatic)");
  app.add_option("--out", cfg.out_dir, "Output directory")->envname("SSMSEL_OUT");
  app.add_flag("--svg", cfg.svg, "Also write SVG plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    error_record(err, 2, "usage", e.what(), nullptr);
    return 2;
  }
  if (!std::isnan(force)) cfg.force = force;
  if (!std::isnan(omega)) cfg.omega = omega;
  if (!std::isnan(omega_min)) cfg.omega_min = omega_min;
  if (!std::isnan(omega_max)) cfg.omega_max = omega_max;
  if (n_elem != 0) cfg.n_elem = n_elem;
  if (!support.empty()) cfg.support = support;
  return run(cfg, out, err);
}

}  // namespace ssmsel::cli
