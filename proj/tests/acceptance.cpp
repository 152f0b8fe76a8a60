// Acceptance run: one PASS/FAIL line per criterion.
//   acceptance            run all criteria
//   acceptance --only N   run criterion N only (exit status reflects it)

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "hlsim/boundary_layer.hpp"
#include "hlsim/cli.hpp"
#include "hlsim/diagnostics.hpp"
#include "hlsim/errors.hpp"
#include "hlsim/profile_model.hpp"
#include "hlsim/quadrature.hpp"
#include "oracles.hpp"

using namespace hlsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- shared runs ------------------------------------------------------------

const std::vector<double> kCriterion3K{1.0, 1.15, 1.3};
constexpr double kProfileTEnd = 1e6;
constexpr double kProfileTol = 1e-9;

const ProfileTrajectory& profile_run(double K) {
  static std::map<double, ProfileTrajectory> cache;
  auto it = cache.find(K);
  if (it == cache.end()) it = cache.emplace(K, integrate(K, kProfileTEnd, kProfileTol)).first;
  return it->second;
}

const InitialData kInit{0.01, 50.0};

// Run used by the oracle and structural criteria.
const RunResult& oracle_run() {
  static const RunResult r = [] {
    RunControls rc;
    rc.t_max = 0.3;
    rc.check_oracles = true;
    return run(kInit, 256, 256, rc);
  }();
  return r;
}

constexpr double kBlowupTMax = 2.0;
constexpr double kBlowupDCap = 1e20;

// ---- independent checks -------------------------------------------------------

double core_min(double A, double B, double K, double k) {
  std::vector<double> ys;
  for (int i = 0; i <= 100; ++i) ys.push_back(i / 100.0);
  if (B > 0) {
    ys.push_back(A / B + std::log(2.0 / (K * B)) / B);
    ys.push_back(A / B + std::log(1.0 / (k * B)) / (k * B));
    ys.push_back(A / B - std::log(B) / B);
  }
  double m = INFINITY;
  for (double y : ys) {
    y = std::min(1.0, std::max(0.0, y));
    m = std::min(m, std::exp(-A + B * y) - y);
  }
  return m;
}

bool in_F(double A, double B, double K) { return B > 2.0 / K && A > 1.0 && A <= K * B / 2.0; }

// ---- criteria -----------------------------------------------------------------

Outcome criterion1() {
  const Rates r = rhs({0.0, 0.0, 1.0}, 1e-12);
  const double eA = std::abs(r.dA - 0.25);
  const double eB = std::abs(r.dB - (0.25 + std::numbers::pi / 8.0));
  const double eO = std::abs(r.dB - oracle::dB_b0(0.0, 1.0));
  return {eA <= 1e-10 && eB <= 1e-10 && eO <= 1e-10,
          fmt("dA=%.15f (err %.1e), dB=%.15f (err %.1e)", r.dA, eA, r.dB, eB)};
}

Outcome criterion2() {
  bool ok = true;
  std::string d;
  for (double K : {1.0, 1.3}) {
    IntegrateOptions opt;
    opt.plan = SamplePlan{1e-6, 64};
    const auto tr = integrate(K, 1e-6, kProfileTol, opt);
    const auto& s = tr.samples.back().state;
    const double ratio = s.A / s.B, target = 2.0 * K / (2.0 + std::numbers::pi);
    ok = ok && s.t == 1e-6 && std::abs(ratio - target) <= 1e-4;
    d += fmt("K=%.2f A/B=%.8f target %.8f; ", K, ratio, target);
  }
  return {ok, d};
}

Outcome criterion3() {
  bool ok = true;
  std::string d;
  for (double K : kCriterion3K) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& tr = profile_run(K);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::size_t violations = tr.monotonicity_violations;
    bool seen_F = false;
    for (const auto& s : tr.samples) {
      const Regime g = classify_regime(s.state, K);
      if (g == Regime::Outside || (seen_F && g != Regime::FinalF)) ++violations;
      seen_F = seen_F || g == Regime::FinalF;
      for (const auto& a : audit_state(s, K, default_k(K))) {
        if (a.applicable && a.violated) ++violations;
      }
    }
    const bool reached = tr.samples.back().state.t == kProfileTEnd;
    const auto series = tr.to_series();
    const auto fit = fit_power_law(series, "B", {1e4, 1e6});
    const double target = 1.0 / (2.0 - K);
    const auto tail = boundedness_window(series, K, {1e3, 1e6});
    const bool k_ok = reached && violations == 0 && std::abs(fit.slope - target) <= 0.05 &&
                      tail.sup - tail.inf <= 0.5 && tail.max_decade_drift <= 0.05 && secs <= 120.0;
    ok = ok && k_ok;
    d += fmt("K=%.2f: violations %zu, exponent %.5f (target %.5f), tail spread %.2e, drift %.2e, %.1fs; ", K,
             violations, fit.slope, target, tail.sup - tail.inf, tail.max_decade_drift, secs);
  }
  return {ok, d};
}

Outcome criterion4() {
  bool ok = true;
  std::string d;
  for (double K : {1.0, 1.3}) {
    const auto a = find_transition_time(K, 1e-9);
    const auto b = find_transition_time(K, 1e-11);
    const double rel = std::abs(a.t0 - b.t0) / b.t0;
    ok = ok && std::isfinite(a.t0) && a.state.B > 2.0 / K && b.state.B > 2.0 / K && rel <= 1e-6;
    d += fmt("K=%.1f t0=%.10g B(t0)=%.6f (> %.4f), refinement change %.1e; ", K, b.t0, b.state.B, 2.0 / K, rel);
  }
  return {ok, d};
}

Outcome criterion5() {
  std::size_t states = 0, core = 0, ratio = 0, ineq = 0, pinch = 0, f_states = 0;
  for (double K : kCriterion3K) {
    const double kb = 48.0 * (1.0 - std::exp(-6.0 / K)) / (K * std::pow(K * K + 4.0, 2));
    const double k = 0.5 * (1.0 + kb);
    for (const auto& s : profile_run(K).samples) {
      const double A = s.state.A, B = s.state.B, t = s.state.t;
      ++states;
      if (core_min(A, B, K, k) < -1e-12) ++core;
      if (t > 0.0 && !(A - 0.5 * K * B < 0.0)) ++ratio;
      if (!in_F(A, B, K)) continue;
      ++f_states;
      if (1.0 - A + std::log(0.5 * K * B) < -1e-12) ++ineq;
      if (1.0 - k * A + std::log(k * B) < -1e-12) ++ineq;
      const double e3 = std::exp(3.0 * A);
      const double q = K * K / 4.0 + 1.0;
      if (s.dA > e3 / (9.0 * B * B) + 1e-12) ++pinch;
      if (s.dB < e3 / (3.0 * B) / (K * q * q) * (1.0 - std::exp(-6.0 / K)) - 1e-12) ++pinch;
      if (s.dB > e3 / (3.0 * K * B) + 1e-12) ++pinch;
    }
  }
  const bool ok = core + ratio + ineq + pinch == 0 && f_states > 0;
  return {ok, fmt("%zu states (%zu in F): core %zu, ratio %zu, inequalities %zu, pinching %zu violations", states,
                  f_states, core, ratio, ineq, pinch)};
}

Outcome criterion6() {
  const double direct = 48.0 * (1.0 - std::exp(-6.0)) / 25.0;
  const double err = std::abs(k_upper_bound(1.0) - direct);
  bool range = true;
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i <= 30; ++i) {
    const double K = 1.0 + 0.01 * i;
    const double v = k_upper_bound(K);
    range = range && v > 1.0 && v < 2.0;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {err <= 1e-9 && range,
          fmt("k_upper_bound(1)=%.11f (err %.1e); range on [1,1.3]: [%.5f, %.5f]", k_upper_bound(1.0), err, lo, hi)};
}

Outcome criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult& r = oracle_run();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  // Independent check on the final state.
  const auto& g = r.final_grid;
  const auto& q = r.final_state;
  const double d = kInit.delta, L = kInit.L;
  double plateau = 0.0, omega = 0.0;
  std::size_t np = 0, no = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double x1 = g.x1[k % g.nx], x2 = g.x2[k / g.nx];
    const double pred = x1 + x2 * q.H / (2.0 * d);
    if (x1 >= d && pred <= L * d) {
      plateau = std::max(plateau, std::abs(g.U[k] - pred) / g.U[k]);
      ++np;
    }
    const double shift = x2 * q.H / (2.0 * d);
    if (x1 >= std::max(shift, d) && x1 <= L * d / 2.0 && x2 <= d * d * L / q.H) {
      const double z = std::sqrt(shift / x1);
      const double et = x2 <= 1.0 ? 1.0 : eta(x2, kInit);
      const double o = et * q.Q / d * (z > 0.0 ? std::atan(z) / z : 1.0);
      if (o > 0.0) {
        omega = std::max(omega, std::abs(g.omega[k] - o) / o);
        ++no;
      }
    }
  }
  const auto& s = r.oracles;
  const bool ok = s.plateau_checks > 0 && s.omega_checks > 0 && s.max_plateau_rel_err <= 1e-6 &&
                  s.max_omega_rel_err <= 1e-3 && plateau <= 1e-6 && omega <= 1e-3 && secs <= 600.0;
  return {ok, fmt("256x256 to t=%.2f: plateau max rel err %.2e over %zu checks, vorticity %.2e over %zu checks; "
                  "final-state recheck %.2e (%zu) / %.2e (%zu); %.0fs",
                  q.t, s.max_plateau_rel_err, s.plateau_checks, s.max_omega_rel_err, s.omega_checks, plateau, np,
                  omega, no, secs)};
}

struct BlowupRun {
  RunResult result;
  std::string fit_note;
  double t_star = NAN, r2 = NAN;
};

BlowupRun blowup_run(std::size_t n, double threshold) {
  RunControls rc;
  rc.t_max = kBlowupTMax;
  rc.Q_max = 1e6;
  rc.D_cap = kBlowupDCap;
  rc.d_change_threshold = threshold;
  BlowupRun b{run(kInit, n, n, rc), "", NAN, NAN};
  const TimeSeries series = b.result.to_series();
  try {
    const auto e = extrapolate_blowup(series, "Q", final_decade_window(series, "Q"));
    b.t_star = e.t_star;
    b.r2 = e.fit.r_squared;
    b.fit_note = fmt("T*=%.6g r2=%.4f", b.t_star, b.r2);
  } catch (const Error& e) {
    b.fit_note = e.what();
  }
  return b;
}

// Ratio J delta / Q when E first exceeds 2; the chain inequality needs
// it above (pi/48) log(L/5), and closing the blow-up argument needs > 2.
double chain_ratio_at_E2(const RunResult& r) {
  for (const auto& s : r.samples) {
    if (s.gq.E > 2.0) return s.gq.J * kInit.delta / s.gq.Q;
  }
  return NAN;
}

Outcome criterion8() {
  const BlowupRun base = blowup_run(256, 0.1);
  const BlowupRun fine = blowup_run(512, 0.05);
  const auto& f = base.result.final_state;
  const bool reached = base.result.status != RunStatus::TimeLimit && f.Q >= 1e6;
  const bool fit_ok = std::isfinite(base.r2) && base.r2 >= 0.99;
  const double change = std::abs(fine.t_star - base.t_star) / base.t_star;
  const bool stable = std::isfinite(change) && change < 0.1;
  return {reached && fit_ok && stable,
          fmt("256x256 to t=%.2f: Q=%.4g D=%.4g E=%.4g (%s); fit: %s; 512x512 threshold 0.05: Q=%.4g D=%.4g; "
              "T* change %s; J*delta/Q at E=2: %.3f (blow-up argument needs > 2)",
              f.t, f.Q, f.D, f.E, to_string(base.result.status).c_str(), base.fit_note.c_str(),
              fine.result.final_state.Q, fine.result.final_state.D,
              std::isfinite(change) ? fmt("%.3g", change).c_str() : "undefined", chain_ratio_at_E2(base.result))};
}

Outcome criterion9() {
  const RunResult& r = oracle_run();
  std::size_t d_bad = 0, h_bad = 0;
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    const auto& g = r.samples[i].gq;
    if (g.D < 1.0 || (i > 0 && g.D < r.samples[i - 1].gq.D)) ++d_bad;
    if (g.H != g.Q * g.Q) ++h_bad;
  }
  std::size_t axis_bad = 0, omega_bad = 0;
  const auto& fg = r.final_grid;
  for (std::size_t i = 0; i < fg.nx; ++i) {
    if (fg.U[i] != fg.x1[i]) ++axis_bad;
  }
  for (double w : fg.omega) {
    if (!(w >= 0.0)) ++omega_bad;
  }
  const auto& m = r.monitors;
  const std::size_t total = m.total() + d_bad + h_bad + axis_bad + omega_bad;
  return {total == 0,
          fmt("%zu samples: D %zu/%zu, H=Q^2 %zu/%zu, omega<0 %zu/%zu, omega decrease %zu, U decrease %zu, "
              "axis moved %zu/%zu (monitor/recheck)",
              r.samples.size(), m.D_decrease + m.D_below_one, d_bad, m.H_mismatch, h_bad, m.omega_negative,
              omega_bad, m.omega_decrease, m.U_decrease, m.axis_moved, axis_bad)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome criterion10() {
  const fs::path root = fs::temp_directory_path() / "hlsim_acceptance_determinism";
  fs::remove_all(root);
  auto cli = [](std::vector<std::string> args) {
    std::ostringstream out, err;
    return run_cli(args, out, err);
  };
  bool ok = true;
  std::string d;
  for (double K : kCriterion3K) {
    const std::string k = fmt("%.2f", K);
    std::vector<std::string> csv;
    for (const char* threads : {"1", "4"}) {
      const fs::path dir = root / ("m1_" + k + "_" + threads);
      cli({"model1", "run", "--K", k, "--t-end", "1e6", "--tol", "1e-9", "--threads", threads, "--out", dir.string()});
      csv.push_back(slurp(dir / "timeseries.csv"));
    }
    const bool same = !csv[0].empty() && csv[0] == csv[1];
    ok = ok && same;
    d += fmt("model1 K=%s %s; ", k.c_str(), same ? "identical" : "DIFFERENT");
  }
  std::vector<std::string> csv;
  for (const char* threads : {"1", "4"}) {
    const fs::path dir = root / (std::string("m2_") + threads);
    cli({"model2", "run", "--delta", "0.01", "--L", "50", "--nx", "256", "--ny", "256", "--stop-Q", "1e6", "--t-max",
         fmt("%g", kBlowupTMax), "--D-cap", fmt("%g", kBlowupDCap), "--threads", threads, "--out", dir.string()});
    csv.push_back(slurp(dir / "timeseries.csv"));
  }
  const bool same = !csv[0].empty() && csv[0] == csv[1];
  ok = ok && same;
  d += fmt("model2 256x256 1 vs 4 threads %s (%zu bytes)", same ? "identical" : "DIFFERENT", csv[0].size());
  fs::remove_all(root);
  return {ok, d};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9, criterion10};
  int only = 0;
  if (argc == 3 && std::string(argv[1]) == "--only") only = std::atoi(argv[2]);
  if (argc != 1 && (only < 1 || only > 10)) {
    std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
    return 2;
  }
  int failed = 0;
  for (int i = 1; i <= 10; ++i) {
    if (only != 0 && i != only) continue;
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(i - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d: %s | %s\n", i, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
