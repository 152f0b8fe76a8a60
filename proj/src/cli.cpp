#include "hlsim/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "hlsim/boundary_layer.hpp"
#include "hlsim/diagnostics.hpp"
#include "hlsim/io.hpp"
#include "hlsim/profile_model.hpp"
#include "hlsim/svg.hpp"

namespace hlsim {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Model1Args {
  double K = 1.0;
  std::vector<double> Ks{1.0, 1.15, 1.3};
  double t_end = 1e6;
  double tol = 1e-9;
  double t_first = 1e-6;
  int per_decade = 64;
  std::string out = "model1_out";
  int threads = 0;
};

struct Model2Args {
  double delta = 0.01;
  double L = 50.0;
  std::size_t nx = 256;
  std::size_t ny = 256;
  double stop_Q = 1e6;
  double t_max = 1.0;
  double dt0 = 1e-3;
  double threshold = 0.1;
  double D_cap = kDefaultDCap;
  int refine = 0;
  bool oracles = false;
  bool snapshot = false;
  GridOptions grid;
  std::string out = "model2_out";
  int threads = 0;
};

struct StrictArgs {
  double delta = 0.01;
  double L = 50.0;
  double Q = 1.0;
  double D = 1.0;
  double J = std::nan("");
};

json fit_json(const FitResult& f) {
  return json{{"slope", f.slope},         {"intercept", f.intercept}, {"r_squared", f.r_squared},
              {"t_lo", f.window.t_lo},    {"t_hi", f.window.t_hi},   {"n_points", f.n_points}};
}

void set_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

// Appends flags from a flat JSON config for every key not given on the
// command line, so explicit flags take precedence.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
  }
  if (!cfg.is_object()) throw ConfigError("config file must hold a flat JSON object");
  for (const auto& [key, value] : cfg.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ',';
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      args.push_back(flag);
      args.push_back(joined);
    } else if (value.is_string()) {
      args.push_back(flag);
      args.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      args.push_back(flag);
      args.push_back(value.dump());
    } else {
      throw ConfigError("config key '" + key + "' must be a number, string, boolean or array");
    }
  }
  return args;
}

// ---- model1 ---------------------------------------------------------------

int run_model1(const Model1Args& a, double K, const fs::path& dir, json& summary, std::ostream& out) {
  if (!(K > 0.0)) throw ConfigError("K must be positive");
  if (!(a.t_end > 0.0)) throw ConfigError("t-end must be positive");
  if (!(a.tol > 0.0)) throw ConfigError("tol must be positive");
  if (!(a.per_decade > 0) || !(a.t_first > 0.0)) throw ConfigError("sample plan must be positive");

  IntegrateOptions opts;
  opts.plan = SamplePlan{a.t_first, a.per_decade};
  const ProfileTrajectory traj = integrate(K, a.t_end, a.tol, opts);
  const double k = default_k(K);

  std::vector<ProfileAuditedSample> rows;
  rows.reserve(traj.samples.size());
  std::map<std::string, std::size_t> by_check;
  std::size_t violations = 0, exploratory_violations = 0;
  bool regime_ok = true;
  bool seen_F = false;
  for (const auto& s : traj.samples) {
    ProfileAuditedSample row{s, classify_regime(s.state, K), audit_state(s, K, k)};
    if (row.regime == Regime::Outside) regime_ok = false;
    if (row.regime == Regime::FinalF) seen_F = true;
    if (row.regime == Regime::InitialI && seen_F) regime_ok = false;
    for (const auto& r : row.audits) {
      // The ratio margin must be strictly positive once t > 0.
      const bool strict_fail = r.check_name == "ratio" && s.state.t > 0.0 && !(r.margin > 0.0);
      if (r.applicable && (r.violated || strict_fail)) {
        ++by_check[r.check_name];
        (r.exploratory ? exploratory_violations : violations)++;
      }
    }
    rows.push_back(std::move(row));
  }
  if (!regime_ok) ++violations;
  violations += traj.monotonicity_violations;

  fs::create_directories(dir);
  write_profile_csv(dir / "timeseries.csv", rows);
  write_audit_csv(dir / "audits.csv", rows);

  const TimeSeries series = traj.to_series();
  summary = json::object();
  summary["model"] = "profile";
  summary["K"] = K;
  summary["t_end"] = a.t_end;
  summary["ode_tol"] = a.tol;
  summary["k"] = k;
  summary["k_upper_bound"] = k_upper_bound(K);
  summary["exploratory"] = !validated_K(K);
  summary["samples"] = traj.samples.size();
  summary["accepted_steps"] = traj.accepted_steps;
  summary["rejected_steps"] = traj.rejected_steps;
  summary["monotonicity_violations"] = traj.monotonicity_violations;
  summary["regime_sequence_ok"] = regime_ok;
  summary["violations"] = violations;
  summary["exploratory_violations"] = exploratory_violations;
  summary["violations_by_check"] = by_check;

  if (traj.samples.size() > 1) {
    const auto& s1 = traj.samples[1].state;
    summary["early_ratio"] = {{"t", s1.t}, {"A_over_B", s1.A / s1.B}, {"target", 2.0 * K / (2.0 + std::numbers::pi)}};
  }
  if (traj.transition_time) {
    const double t0 = *traj.transition_time;
    const auto it = std::find_if(traj.samples.begin(), traj.samples.end(),
                                 [t0](const ProfileSample& s) { return s.state.t == t0; });
    json tr{{"t0", t0}};
    if (it != traj.samples.end()) {
      tr["A"] = it->state.A;
      tr["B"] = it->state.B;
      tr["B_above_2_over_K"] = it->state.B > 2.0 / K;
    }
    summary["transition"] = tr;
  } else {
    summary["transition"] = nullptr;
  }

  try {
    FitResult f = fit_power_law(series, "B", default_power_law_window(series));
    json j = fit_json(f);
    j["target"] = K < 2.0 ? 1.0 / (2.0 - K) : std::nan("");
    summary["B_exponent"] = j;
  } catch (const InsufficientData& e) {
    summary["B_exponent"] = {{"error", e.what()}};
  }
  try {
    const Window w{a.t_end / 1000.0, a.t_end};
    const BoundednessReport b = boundedness_window(series, K, w);
    json means = json::array();
    for (const auto& d : b.decade_means) means.push_back({{"decade", d.decade}, {"mean", d.mean}, {"n", d.n_points}});
    summary["tail"] = {{"expression", "A - (K/3) log B"}, {"t_lo", w.t_lo},       {"t_hi", w.t_hi},
                       {"sup", b.sup},                   {"inf", b.inf},          {"spread", b.sup - b.inf},
                       {"max_decade_drift", b.max_decade_drift},
                       {"total_variation", b.total_variation},
                       {"decade_means", means}};
  } catch (const InsufficientData& e) {
    summary["tail"] = {{"error", e.what()}};
  }
  try {
    const auto est = extrapolate_blowup(series, "B", final_decade_window(series, "B"));
    summary["blowup_trend"] = {{"t_star", est.t_star}, {"fit", fit_json(est.fit)}};
  } catch (const Error& e) {
    summary["blowup_trend"] = {{"none", e.what()}};
  }
  summary["status"] = violations > 0 ? "violation" : "ok";
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  out << "model1 K=" << K << ": " << traj.samples.size() << " samples, violations " << violations;
  if (summary["B_exponent"].contains("slope")) out << ", B exponent " << summary["B_exponent"]["slope"].get<double>();
  out << " -> " << dir.string() << "\n";
  return violations > 0 ? kExitViolation : kExitOk;
}

std::string k_dir_name(double K) {
  std::ostringstream s;
  s << "K_" << K;
  return s.str();
}

int cmd_model1_sweep(const Model1Args& a, std::ostream& out) {
  if (a.Ks.empty()) throw ConfigError("sweep needs at least one K");
  json all = json::array();
  int code = kExitOk;
  std::vector<double> exps;
  for (double K : a.Ks) {
    json s;
    code = std::max(code, run_model1(a, K, fs::path(a.out) / k_dir_name(K), s, out));
    all.push_back(s);
    if (s["B_exponent"].contains("slope")) exps.push_back(s["B_exponent"]["slope"].get<double>());
  }
  json sweep;
  sweep["model"] = "profile_sweep";
  sweep["K"] = a.Ks;
  sweep["runs"] = all;
  bool monotone = exps.size() == a.Ks.size();
  for (std::size_t i = 1; monotone && i < exps.size(); ++i) {
    monotone = (a.Ks[i] > a.Ks[i - 1]) == (exps[i] > exps[i - 1]);
  }
  sweep["exponents_follow_K"] = monotone;
  write_text(fs::path(a.out) / "sweep_summary.json", sweep.dump(2) + "\n");
  return code;
}

// ---- model2 ---------------------------------------------------------------

struct Model2Outcome {
  json summary;
  int code = kExitOk;
  std::optional<double> t_star;
};

Model2Outcome run_model2(const Model2Args& a, std::size_t nx, std::size_t ny, double threshold, const fs::path& dir) {
  InitialData init;
  init.delta = a.delta;
  init.L = a.L;
  validate(init);
  RunControls rc;
  rc.dt0 = a.dt0;
  rc.d_change_threshold = threshold;
  rc.D_cap = a.D_cap;
  rc.Q_max = a.stop_Q;
  rc.t_max = a.t_max;
  rc.check_oracles = a.oracles;
  const RunResult r = run(init, nx, ny, rc, a.grid);

  fs::create_directories(dir);
  write_boundary_csv(dir / "timeseries.csv", r.samples);
  if (a.snapshot) write_final_state_csv(dir / "final_state.csv", r.final_grid);

  std::size_t box_violations = 0, box_applicable = 0, jchain_applicable = 0, jchain_negative = 0;
  for (const auto& s : r.samples) {
    if (s.box.applicable) {
      ++box_applicable;
      if (s.box.violated) ++box_violations;
    }
    if (s.jchain.applicable) {
      ++jchain_applicable;
      if (s.jchain.margin < 0.0) ++jchain_negative;
    }
  }
  const std::size_t violations = r.monitors.total() + box_violations;

  Model2Outcome o;
  json& s = o.summary;
  s["model"] = "boundary_layer";
  s["delta"] = a.delta;
  s["L"] = a.L;
  s["nx"] = nx;
  s["ny"] = ny;
  s["threshold"] = threshold;
  s["dt0"] = a.dt0;
  s["D_cap"] = a.D_cap;
  s["stop_Q"] = a.stop_Q;
  s["t_max"] = a.t_max;
  s["strict_constants"] = strict_constants_hold(init);
  s["status"] = to_string(r.status);
  s["stop_reason"] = r.message;
  const auto& f = r.final_state;
  s["final"] = {{"t", f.t}, {"J", f.J}, {"D", f.D}, {"Q", f.Q}, {"H", f.H}, {"E", f.E}};
  s["accepted_steps"] = r.accepted_steps;
  s["rejected_steps"] = r.rejected_steps;
  const auto& m = r.monitors;
  s["monitors"] = {{"D_decrease", m.D_decrease},       {"D_below_one", m.D_below_one},
                   {"H_mismatch", m.H_mismatch},       {"omega_negative", m.omega_negative},
                   {"omega_decrease", m.omega_decrease}, {"U_decrease", m.U_decrease},
                   {"axis_moved", m.axis_moved}};
  s["box_audit"] = {{"applicable", box_applicable}, {"violated", box_violations}};
  s["jchain_audit"] = {{"applicable", jchain_applicable}, {"negative_margin", jchain_negative}};
  if (a.oracles) {
    s["oracles"] = {{"max_plateau_rel_err", r.oracles.max_plateau_rel_err},
                    {"plateau_checks", r.oracles.plateau_checks},
                    {"max_omega_rel_err", r.oracles.max_omega_rel_err},
                    {"omega_checks", r.oracles.omega_checks}};
  }
  s["violations"] = violations;

  const TimeSeries series = r.to_series();
  try {
    const auto est = extrapolate_blowup(series, "Q", final_decade_window(series, "Q"));
    s["T_star"] = est.t_star;
    s["r_squared"] = est.fit.r_squared;
    s["fit"] = fit_json(est.fit);
    o.t_star = est.t_star;
  } catch (const Error& e) {
    s["T_star"] = nullptr;
    s["fit"] = {{"error", e.what()}};
  }
  o.code = violations > 0 ? kExitViolation : kExitOk;
  return o;
}

int cmd_model2_run(const Model2Args& a, std::ostream& out) {
  if (a.refine == 1 || a.refine < 0) throw ConfigError("refine factor must be 0 (off) or >= 2");
  const fs::path dir(a.out);
  Model2Outcome base = run_model2(a, a.nx, a.ny, a.threshold, dir);
  int code = base.code;
  if (a.refine >= 2) {
    const auto f = static_cast<std::size_t>(a.refine);
    Model2Outcome fine = run_model2(a, a.nx * f, a.ny * f, a.threshold / a.refine, dir / "refined");
    write_text(dir / "refined" / "summary.json", fine.summary.dump(2) + "\n");
    json ref{{"factor", a.refine}, {"T_star_coarse", base.summary["T_star"]}, {"T_star_fine", fine.summary["T_star"]}};
    if (base.t_star && fine.t_star) {
      ref["relative_change"] = std::abs(*fine.t_star - *base.t_star) / std::abs(*base.t_star);
    } else {
      ref["relative_change"] = nullptr;
    }
    base.summary["refinement"] = ref;
    code = std::max(code, fine.code);
  }
  write_text(dir / "summary.json", base.summary.dump(2) + "\n");
  out << "model2 delta=" << a.delta << " L=" << a.L << " " << a.nx << "x" << a.ny << ": status "
      << base.summary["status"].get<std::string>() << ", Q=" << base.summary["final"]["Q"].get<double>()
      << " at t=" << base.summary["final"]["t"].get<double>() << " -> " << dir.string() << "\n";
  return code;
}

int cmd_model2_strict(const StrictArgs& a, std::ostream& out) {
  InitialData init;
  init.delta = a.delta;
  init.L = a.L;
  validate(init);
  if (!(a.Q > 0.0) || !(a.D >= 1.0)) throw ConfigError("audit-strict needs Q > 0 and D >= 1");
  GlobalQuantities gq;
  gq.Q = a.Q;
  gq.D = a.D;
  gq.H = a.Q * a.Q;
  gq.E = gq.H / (a.delta * a.D);
  const double chain_coeff = std::numbers::pi / 48.0 * std::log(a.L / 5.0);
  json s;
  s["delta"] = a.delta;
  s["L"] = a.L;
  s["L_threshold"] = 5.0 * std::exp(96.0 / std::numbers::pi);
  s["strict_constants"] = strict_constants_hold(init);
  s["E"] = gq.E;
  s["E_le_2"] = gq.E <= 2.0;
  s["box_height_le_1"] = a.delta * a.delta * a.L / gq.H <= 1.0;
  s["J_lower_bound"] = chain_coeff * a.Q / a.delta;
  s["J_needed_at_E_2"] = 2.0 * a.Q / a.delta;
  s["bound_exceeds_need"] = chain_coeff > 2.0;
  bool ok = strict_constants_hold(init) && chain_coeff > 2.0;
  if (!std::isnan(a.J)) {
    const AuditReport r = audit_J_chain(gq, init, a.Q, a.J);
    s["jchain_applicable"] = r.applicable;
    s["jchain_margin"] = r.applicable ? json(r.margin) : json(nullptr);
    if (r.applicable && r.violated) ok = false;
  }
  s["holds"] = ok;
  out << s.dump(2) << "\n";
  return ok ? kExitOk : kExitViolation;
}

// ---- report ---------------------------------------------------------------

bool report_profile(const fs::path& dir, std::ostream& out) {
  const CsvTable t = read_csv(dir / "timeseries.csv");
  const auto ts = t.numeric("t");
  const auto B = t.numeric("B");
  SvgPlot p;
  p.title = "B(t), log-log";
  p.x_label = "t";
  p.y_label = "B";
  p.log_x = p.log_y = true;
  p.series.push_back(SvgSeries{ts, B, "#1f77b4", "B(t)", false});
  if (fs::exists(dir / "summary.json")) {
    std::ifstream in(dir / "summary.json");
    const json s = json::parse(in);
    if (s.contains("B_exponent") && s["B_exponent"].contains("slope")) {
      const double slope = s["B_exponent"]["slope"], icpt = s["B_exponent"]["intercept"];
      SvgSeries fit;
      fit.color = "#d62728";
      fit.dashed = true;
      char label[64];
      std::snprintf(label, sizeof label, "fit: exponent %.5f", slope);
      fit.label = label;
      for (double t : ts) {
        if (t > 0.0) {
          fit.x.push_back(t);
          fit.y.push_back(std::exp(icpt + slope * std::log(t)));
        }
      }
      p.series.push_back(std::move(fit));
    }
  }
  write_text(dir / "B_loglog.svg", render_svg(p));
  out << "wrote " << (dir / "B_loglog.svg").string() << "\n";
  return true;
}

bool report_boundary(const fs::path& dir, std::ostream& out) {
  const CsvTable t = read_csv(dir / "timeseries.csv");
  const auto ts = t.numeric("t");
  const auto Q = t.numeric("Q");
  SvgPlot p;
  p.title = "1/Q(t)";
  p.x_label = "t";
  p.y_label = "1/Q";
  SvgSeries inv{{}, {}, "#1f77b4", "1/Q", false};
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (Q[i] > 0.0) {
      inv.x.push_back(ts[i]);
      inv.y.push_back(1.0 / Q[i]);
    }
  }
  p.series.push_back(inv);
  if (fs::exists(dir / "summary.json")) {
    std::ifstream in(dir / "summary.json");
    const json s = json::parse(in);
    if (s.contains("T_star") && s["T_star"].is_number() && s["fit"].contains("slope")) {
      const double slope = s["fit"]["slope"], icpt = s["fit"]["intercept"];
      const double t_star = s["T_star"], lo = s["fit"]["t_lo"];
      SvgSeries fit;
      fit.color = "#d62728";
      fit.dashed = true;
      fit.label = "linear fit on the final decade of Q";
      fit.x = {lo, t_star};
      fit.y = {icpt + slope * lo, icpt + slope * t_star};
      p.series.push_back(std::move(fit));
      char label[64];
      std::snprintf(label, sizeof label, "T* = %.6g", t_star);
      p.markers.push_back(SvgMarker{t_star, 0.0, label});
    }
  }
  write_text(dir / "invQ.svg", render_svg(p));
  out << "wrote " << (dir / "invQ.svg").string() << "\n";
  return true;
}

std::string detect_model(const fs::path& dir) {
  if (fs::exists(dir / "summary.json")) {
    std::ifstream in(dir / "summary.json");
    const json s = json::parse(in, nullptr, false);
    if (s.is_object() && s.contains("model")) return s["model"].get<std::string>();
  }
  if (fs::exists(dir / "timeseries.csv")) {
    const CsvTable t = read_csv(dir / "timeseries.csv");
    if (std::find(t.header.begin(), t.header.end(), "B") != t.header.end()) return "profile";
    if (std::find(t.header.begin(), t.header.end(), "Q") != t.header.end()) return "boundary_layer";
  }
  return "";
}

int cmd_report(const std::string& dir_name, std::ostream& out, std::ostream& err) {
  const fs::path dir(dir_name);
  if (!fs::is_directory(dir)) {
    err << "report: " << dir_name << " is not a directory\n";
    return kExitConfig;
  }
  int produced = 0;
  std::vector<fs::path> dirs{dir};
  std::vector<fs::path> subdirs;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) subdirs.push_back(e.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  dirs.insert(dirs.end(), subdirs.begin(), subdirs.end());
  for (const auto& d : dirs) {
    const std::string model = detect_model(d);
    if (model == "profile" && fs::exists(d / "timeseries.csv")) produced += report_profile(d, out);
    if (model == "boundary_layer" && fs::exists(d / "timeseries.csv")) produced += report_boundary(d, out);
  }
  if (produced == 0) {
    err << "report: no run output found in " << dir_name << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonlocal profile ODE and boundary-layer blow-up models"};
  app.name("hlsim");
  app.require_subcommand(1);

  Model1Args m1;
  Model2Args m2;
  StrictArgs st;
  std::string config;
  std::string report_dir;

  auto* model1 = app.add_subcommand("model1", "nonlocal ODE profile model");
  model1->require_subcommand(1);
  auto* m1run = model1->add_subcommand("run", "integrate one K and audit every sample");
  auto* m1sweep = model1->add_subcommand("sweep", "run several K values");
  for (auto* c : {m1run, m1sweep}) {
    c->add_option("--t-end", m1.t_end, "final time")->capture_default_str();
    c->add_option("--tol", m1.tol, "ODE tolerance (absolute and relative)")->capture_default_str();
    c->add_option("--t-first", m1.t_first, "first sample time")->capture_default_str();
    c->add_option("--per-decade", m1.per_decade, "samples per decade")->capture_default_str();
    c->add_option("--out", m1.out, "output directory")->capture_default_str();
    c->add_option("--threads", m1.threads, "OpenMP threads (0 = runtime default)");
    c->add_option("--config", config, "flat JSON file with default flag values");
  }
  m1run->add_option("--K", m1.K, "depletion parameter")->capture_default_str();
  m1sweep->add_option("--K", m1.Ks, "comma-separated K values")->delimiter(',')->capture_default_str();

  auto* model2 = app.add_subcommand("model2", "boundary-layer model");
  model2->require_subcommand(1);
  auto* m2run = model2->add_subcommand("run", "simulate until Q_max, t_max or blow-up");
  m2run->add_option("--delta", m2.delta, "plateau scale")->capture_default_str();
  m2run->add_option("--L", m2.L, "plateau width factor")->capture_default_str();
  m2run->add_option("--nx", m2.nx, "x1 labels")->capture_default_str();
  m2run->add_option("--ny", m2.ny, "x2 labels")->capture_default_str();
  m2run->add_option("--stop-Q", m2.stop_Q, "stop once Q reaches this value")->capture_default_str();
  m2run->add_option("--t-max", m2.t_max, "stop at this time")->capture_default_str();
  m2run->add_option("--dt0", m2.dt0, "initial time step")->capture_default_str();
  m2run->add_option("--threshold", m2.threshold, "halve dt above this relative D change")->capture_default_str();
  m2run->add_option("--D-cap", m2.D_cap, "treat D above this as blow-up")->capture_default_str();
  m2run->add_option("--refine", m2.refine, "also run with grid x factor and threshold / factor");
  m2run->add_option("--cluster-fraction", m2.grid.cluster_fraction, "share of x1 labels in the rising shoulder")
      ->capture_default_str();
  m2run->add_option("--cluster-min", m2.grid.cluster_min, "smallest clustered shoulder offset")
      ->capture_default_str();
  m2run->add_option("--x2-min", m2.grid.x2_min, "smallest positive x2 label")->capture_default_str();
  m2run->add_flag("--oracles", m2.oracles, "check plateau and vorticity oracles every step");
  m2run->add_flag("--snapshot", m2.snapshot, "write final_state.csv");
  m2run->add_option("--out", m2.out, "output directory")->capture_default_str();
  m2run->add_option("--threads", m2.threads, "OpenMP threads (0 = runtime default)");
  m2run->add_option("--config", config, "flat JSON file with default flag values");

  auto* m2strict = model2->add_subcommand("audit-strict", "check the strict constants and the J chain bound at a given state");
  m2strict->add_option("--delta", st.delta)->capture_default_str();
  m2strict->add_option("--L", st.L)->capture_default_str();
  m2strict->add_option("--Q", st.Q)->capture_default_str();
  m2strict->add_option("--D", st.D)->capture_default_str();
  m2strict->add_option("--J", st.J, "measured J (optional)");
  m2strict->add_option("--config", config, "flat JSON file with default flag values");

  auto* report = app.add_subcommand("report", "write SVG plots for a run directory");
  report->add_option("dir", report_dir, "run directory")->required();

  try {
    std::vector<std::string> args = merge_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (m1run->parsed()) {
      set_threads(m1.threads);
      json s;
      return run_model1(m1, m1.K, fs::path(m1.out), s, out);
    }
    if (m1sweep->parsed()) {
      set_threads(m1.threads);
      return cmd_model1_sweep(m1, out);
    }
    if (m2run->parsed()) {
      set_threads(m2.threads);
      return cmd_model2_run(m2, out);
    }
    if (m2strict->parsed()) return cmd_model2_strict(st, out);
    if (report->parsed()) return cmd_report(report_dir, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}

}  // namespace hlsim
