#include "hlsim/boundary_layer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace hlsim {

void validate(const InitialData& init) {
  const double d = init.delta, L = init.L;
  if (!(d > 0.0 && d < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (!(L > 5.0)) throw ConfigError("L must exceed 5");
  if (!(d * L < 1.0)) throw ConfigError("delta * L must be below 1");
  if (!((L + 1.0) * d < 1.0)) throw ConfigError("(L + 1) * delta must be below 1");
  if (init.smoothing != "quintic") throw ConfigError("unknown smoothing '" + init.smoothing + "'");
  if (!(init.x2_cut > 0.0)) throw ConfigError("x2_cut must be positive");
}

bool strict_constants_hold(const InitialData& init) {
  return init.L > 5.0 * std::exp(96.0 / std::numbers::pi) && init.delta * init.L <= 1.0;
}

double smoothstep(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * u * (u * (6.0 * u - 15.0) + 10.0);
}

double phi(double x1, const InitialData& init) {
  const double d = init.delta, L = init.L;
  if (x1 <= 0.5 * d || x1 >= (L + 1.0) * d) return 0.0;
  if (x1 < d) return smoothstep((x1 - 0.5 * d) / (0.5 * d)) / d;
  if (x1 <= L * d) return 1.0 / d;
  return smoothstep(((L + 1.0) * d - x1) / d) / d;
}

double eta(double x2, const InitialData& init) {
  const double half = 0.5 * init.x2_cut;
  if (x2 <= half) return 1.0;
  if (x2 >= init.x2_cut) return 0.0;
  return smoothstep((init.x2_cut - x2) / half);
}

double flow_potential(double v) {
  static const double r15 = std::sqrt(15.0);
  return 33.0 / 200.0 * std::log(v) - 33.0 / 400.0 * std::log(v * v - 2.5 * v + 5.0 / 3.0) +
         9.0 * r15 / 200.0 * std::atan((4.0 * v - 5.0) * r15 / 5.0) - (3.0 * v + 1.0) / (20.0 * v * v);
}

double invert_flow_potential(double target, double guess) {
  static const double p1 = flow_potential(1.0);
  if (target >= p1) return 1.0;
  // Newton in z = 1/v^2: dP/dz = -1/(2(6v^2 - 15v + 10)) lies in [-1/2, -1/20],
  // which also brackets the root in [1, 1 + 20 (P(1) - target)].
  double lo = 1.0, hi = 1.0 + 20.0 * (p1 - target);
  double z = guess > 0.0 ? 1.0 / (guess * guess) : hi;
  if (!(z > lo && z < hi)) z = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double v = 1.0 / std::sqrt(z);
    const double f = flow_potential(v) - target;
    if (f == 0.0) return v;
    if (f > 0.0) {
      lo = z;
    } else {
      hi = z;
    }
    const double slope = -0.5 / (v * (6.0 * v - 15.0) + 10.0);
    double zn = z - f / slope;
    if (std::abs(zn - z) <= 4e-16 * z) return 1.0 / std::sqrt(zn);
    if (!(zn > lo && zn < hi)) zn = 0.5 * (lo + hi);
    z = zn;
  }
  return 1.0 / std::sqrt(z);
}

double phi_flow(double u, double tau, const InitialData& init) {
  const double d = init.delta, L = init.L;
  const double a = 0.5 * d, c = L * d, e = (L + 1.0) * d;
  if (!(tau > 0.0) || u <= a || u >= e) return u;
  if (u < d) {
    const double pt = flow_potential((u - a) / a) + tau / (a * a) * 0.5;
    const double p1 = flow_potential(1.0);
    if (pt < p1) return a + a * invert_flow_potential(pt, (u - a) / a);
    tau = 2.0 * (pt - p1) * a * a;
    u = d;
  }
  if (u <= c) {
    const double need = d * (c - u);
    if (tau <= need) return u + tau / d;
    tau -= need;
    u = c;
  }
  const double w = std::min((e - u) / d, 1.0);
  return e - d * invert_flow_potential(flow_potential(w) - tau / (d * d), w);
}

ParticleGrid build_grid(const InitialData& init, std::size_t nx, std::size_t ny, const GridOptions& options) {
  validate(init);
  if (nx < 16 || ny < 16) throw ConfigError("grid needs nx, ny >= 16");
  if (!(options.cluster_fraction > 0.0 && options.cluster_fraction < 1.0)) {
    throw ConfigError("cluster_fraction must lie in (0, 1)");
  }
  if (!(options.cluster_min > 0.0 && options.cluster_min < 1.0)) {
    throw ConfigError("cluster_min must lie in (0, 1)");
  }
  if (!(options.x2_min > 0.0 && options.x2_min < 1e-4)) throw ConfigError("x2_min must lie in (0, 1e-4)");

  const double d = init.delta, L = init.L;
  const double a = 0.5 * d, e = (L + 1.0) * d;

  ParticleGrid g;
  g.nx = nx;
  g.ny = ny;

  const std::size_t n_rise = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(options.cluster_fraction * static_cast<double>(nx))), 2, nx - 2);
  g.x1.reserve(nx);
  g.x1.push_back(a);
  const double log_min = std::log(options.cluster_min);
  for (std::size_t k = 0; k + 1 < n_rise; ++k) {
    const double v = std::exp(log_min * (1.0 - static_cast<double>(k) / static_cast<double>(n_rise - 1)));
    g.x1.push_back(a + a * v);
  }
  const std::size_t n_rest = nx - n_rise;
  for (std::size_t k = 0; k < n_rest; ++k) {
    g.x1.push_back(d + (e - d) * static_cast<double>(k) / static_cast<double>(n_rest - 1));
  }

  g.x2.reserve(ny);
  g.x2.push_back(0.0);
  const double r = std::log(init.x2_cut / options.x2_min);
  for (std::size_t j = 0; j + 1 < ny; ++j) {
    g.x2.push_back(j + 2 == ny ? init.x2_cut
                               : options.x2_min * std::exp(r * static_cast<double>(j) / static_cast<double>(ny - 2)));
  }

  const std::size_t n = nx * ny;
  g.U.resize(n);
  g.omega.assign(n, 0.0);
  g.rho0.resize(n);
  g.forcing.resize(n);
  for (std::size_t j = 0; j < ny; ++j) {
    const double et = eta(g.x2[j], init);
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t k = g.index(i, j);
      const double f = phi(g.x1[i], init) * et;
      g.U[k] = g.x1[i];
      g.forcing[k] = f;
      g.rho0[k] = g.x1[i] * f;
    }
  }

  const double inf = std::numeric_limits<double>::infinity();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double p1 = flow_potential(1.0);
  const double c = L * d;
  FlowData& fd = g.flow;
  fd.tau_rise_end.assign(nx, inf);
  fd.tau_plateau_end.assign(nx, inf);
  fd.p_start.assign(nx, nan);
  fd.p_outer.assign(nx, nan);
  for (std::size_t i = 0; i < nx; ++i) {
    const double x = g.x1[i];
    if (x <= a || x >= e) continue;
    if (x < d) {
      fd.p_start[i] = flow_potential((x - a) / a);
      fd.tau_rise_end[i] = 2.0 * (p1 - fd.p_start[i]) * a * a;
      fd.tau_plateau_end[i] = fd.tau_rise_end[i] + d * (c - d);
      fd.p_outer[i] = p1;
    } else if (x <= c) {
      fd.tau_rise_end[i] = 0.0;
      fd.tau_plateau_end[i] = d * (c - x);
      fd.p_outer[i] = p1;
    } else {
      fd.tau_rise_end[i] = 0.0;
      fd.tau_plateau_end[i] = 0.0;
      fd.p_outer[i] = flow_potential((e - x) / d);
    }
  }
  return g;
}

namespace {

double label_to_U(const ParticleGrid& g, std::size_t i, double tau, double u_guess, const InitialData& init) {
  const double x = g.x1[i];
  const FlowData& fd = g.flow;
  if (!(tau > 0.0) || !std::isfinite(fd.tau_plateau_end[i])) return x;
  const double d = init.delta;
  if (tau < fd.tau_rise_end[i]) {
    const double a = 0.5 * d;
    const double v = invert_flow_potential(fd.p_start[i] + 2.0 * tau / (d * d), (u_guess - a) / a);
    return a + a * v;
  }
  if (tau <= fd.tau_plateau_end[i]) return std::max(x, d) + (tau - fd.tau_rise_end[i]) / d;
  const double e = (init.L + 1.0) * d;
  const double w =
      invert_flow_potential(fd.p_outer[i] - (tau - fd.tau_plateau_end[i]) / (d * d), (e - u_guess) / d);
  return e - d * w;
}

void positions_at(const ParticleGrid& g, double H, const InitialData& init, const std::vector<double>& guess,
                  std::vector<double>& out) {
  const std::size_t nx = g.nx;
  const auto n = static_cast<std::ptrdiff_t>(g.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const double tau = 0.5 * g.x2[uk / nx] * H;
    out[uk] = label_to_U(g, uk % nx, tau, guess[uk], init);
  }
}

inline double kernel(double y1, double y2) {
  const double r2 = y1 * y1 + y2 * y2;
  return y1 * y2 / (r2 * r2);
}

double row_integral(const ParticleGrid& g, const double* U, const double* omega, std::size_t j, double D) {
  const double y2 = g.x2[j];
  if (y2 == 0.0) return 0.0;
  const std::size_t base = j * g.nx;
  double sum = 0.0;
  double y_prev = U[base] / D;
  double f_prev = omega[base] == 0.0 ? 0.0 : kernel(y_prev, y2) * omega[base];
  for (std::size_t i = 1; i < g.nx; ++i) {
    const double y = U[base + i] / D;
    const double f = omega[base + i] == 0.0 ? 0.0 : kernel(y, y2) * omega[base + i];
    sum += 0.5 * (f + f_prev) * (y - y_prev);
    y_prev = y;
    f_prev = f;
  }
  return sum;
}

std::vector<double> x2_weights(const ParticleGrid& g) {
  std::vector<double> w(g.ny, 0.0);
  for (std::size_t j = 0; j + 1 < g.ny; ++j) {
    const double h = g.x2[j + 1] - g.x2[j];
    w[j] += 0.5 * h;
    w[j + 1] += 0.5 * h;
  }
  return w;
}

double reduce_rows(const std::vector<double>& rows, const std::vector<double>& w) {
  double J = 0.0;
  for (std::size_t j = 0; j < rows.size(); ++j) J += w[j] * rows[j];
  return J;
}

double compute_J_arrays(const ParticleGrid& g, const double* U, const double* omega, double D, bool parallel) {
  std::vector<double> rows(g.ny, 0.0);
  const auto ny = static_cast<std::ptrdiff_t>(g.ny);
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < ny; ++j) {
      rows[static_cast<std::size_t>(j)] = row_integral(g, U, omega, static_cast<std::size_t>(j), D);
    }
  } else {
    for (std::ptrdiff_t j = 0; j < ny; ++j) {
      rows[static_cast<std::size_t>(j)] = row_integral(g, U, omega, static_cast<std::size_t>(j), D);
    }
  }
  return reduce_rows(rows, x2_weights(g));
}

}  // namespace

void update_positions(ParticleGrid& grid, double H, const InitialData& init) {
  std::vector<double> out(grid.size());
  positions_at(grid, H, init, grid.U, out);
  grid.U.swap(out);
}

double compute_J(const ParticleGrid& grid, double D) {
  return compute_J_arrays(grid, grid.U.data(), grid.omega.data(), D, true);
}

double compute_J_serial(const ParticleGrid& grid, double D) {
  return compute_J_arrays(grid, grid.U.data(), grid.omega.data(), D, false);
}

double compute_J_jacobian(const ParticleGrid& g, double D, const InitialData& init) {
  std::vector<double> rows(g.ny, 0.0);
  for (std::size_t j = 1; j < g.ny; ++j) {
    const double y2 = g.x2[j];
    double sum = 0.0, f_prev = 0.0;
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      const double p0 = phi(g.x1[i], init);
      const double f = p0 > 0.0 ? kernel(g.U[k] / D, y2) * g.omega[k] * phi(g.U[k], init) / (p0 * D) : 0.0;
      if (i > 0) sum += 0.5 * (f + f_prev) * (g.x1[i] - g.x1[i - 1]);
      f_prev = f;
    }
    rows[j] = sum;
  }
  return reduce_rows(rows, x2_weights(g));
}

namespace {

struct Stage {
  double D, Q;
  const double* U;
  const double* omega;
};

struct Rate {
  double J, dD, dQ;
};

Rate stage_rate(const ParticleGrid& g, const Stage& s, bool parallel, std::vector<double>& domega) {
  const double J = compute_J_arrays(g, s.U, s.omega, s.D, parallel);
  const auto n = static_cast<std::ptrdiff_t>(g.size());
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    domega[uk] = g.rho0[uk] == 0.0 ? 0.0 : g.rho0[uk] * s.D / s.U[uk];
  }
  return Rate{J, J * s.D, s.D};
}

StepResult advance(const ParticleGrid& grid, const GlobalQuantities& gq, const InitialData& init, double dt,
                   bool parallel) {
  const std::size_t n = grid.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), w(n), u_stage(n);

  const Rate r1 = stage_rate(grid, Stage{gq.D, gq.Q, grid.U.data(), grid.omega.data()}, parallel, k1);

  auto prepare = [&](double h, const Rate& r, const std::vector<double>& k) {
    const double D = gq.D + h * r.dD;
    const double Q = gq.Q + h * r.dQ;
    positions_at(grid, Q * Q, init, grid.U, u_stage);
    for (std::size_t i = 0; i < n; ++i) w[i] = grid.omega[i] + h * k[i];
    return Stage{D, Q, u_stage.data(), w.data()};
  };

  const Rate r2 = stage_rate(grid, prepare(0.5 * dt, r1, k1), parallel, k2);
  const Rate r3 = stage_rate(grid, prepare(0.5 * dt, r2, k2), parallel, k3);
  const Rate r4 = stage_rate(grid, prepare(dt, r3, k3), parallel, k4);

  StepResult out{grid, gq};
  GlobalQuantities& q = out.gq;
  q.t = gq.t + dt;
  q.D = gq.D + dt / 6.0 * (r1.dD + 2.0 * r2.dD + 2.0 * r3.dD + r4.dD);
  q.Q = gq.Q + dt / 6.0 * (r1.dQ + 2.0 * r2.dQ + 2.0 * r3.dQ + r4.dQ);
  q.H = q.Q * q.Q;
  q.E = q.H / (init.delta * q.D);
  for (std::size_t i = 0; i < n; ++i) {
    out.grid.omega[i] = grid.omega[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  positions_at(grid, q.H, init, grid.U, out.grid.U);
  // The exact map is monotone in H; keep roundoff in the inversion from
  // showing up as a backward step.
  for (std::size_t i = 0; i < n; ++i) out.grid.U[i] = std::max(out.grid.U[i], grid.U[i]);
  q.J = compute_J_arrays(out.grid, out.grid.U.data(), out.grid.omega.data(), q.D, parallel);
  return out;
}

}  // namespace

StepResult step(const ParticleGrid& grid, const GlobalQuantities& gq, const InitialData& init, double dt,
                const StepOptions& options) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  StepResult r = advance(grid, gq, init, dt, options.parallel);
  if (!(r.gq.D <= options.D_cap)) {
    throw BlowupDetected("D exceeded cap at t = " + std::to_string(r.gq.t), r.gq);
  }
  return r;
}

bool in_oracle_domain(double x1, double x2, double H, const InitialData& init) {
  const double d = init.delta, L = init.L;
  const double lower = std::max(0.5 * x2 * H / d, d);
  if (!(x1 >= lower && x1 <= 0.5 * L * d)) return false;
  return H <= 0.0 || x2 <= d * d * L / H;
}

double oracle_omega(double x1, double x2, double Q, double H, const InitialData& init) {
  if (!in_oracle_domain(x1, x2, H, init)) throw DomainError("label outside the plateau oracle domain");
  const double z = std::sqrt(x2 * H / (2.0 * init.delta * x1));
  const double ratio = z > 0.0 ? std::atan(z) / z : 1.0;
  return eta(x2, init) * Q / init.delta * ratio;
}

AuditReport audit_box_bound(const ParticleGrid& grid, const GlobalQuantities& gq, const InitialData& init) {
  const double d = init.delta, L = init.L;
  AuditReport rep;
  rep.time = gq.t;
  rep.check_name = "box";
  rep.applicable = false;
  rep.margin = std::numeric_limits<double>::quiet_NaN();
  if (!(gq.H > 0.0)) return rep;
  const double bound = 0.25 * std::numbers::pi * gq.Q / d;
  const double y2_max = std::min(d * d * L / gq.H, 0.5 * init.x2_cut);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < grid.ny && grid.x2[j] <= y2_max; ++j) {
    const double shift = 0.5 * grid.x2[j] * gq.H / d;
    const double lo = std::max(shift, d) + shift;
    const double hi = 0.5 * L * d + shift;
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const std::size_t k = grid.index(i, j);
      if (grid.U[k] >= lo && grid.U[k] <= hi) margin = std::min(margin, grid.omega[k] - bound);
    }
  }
  if (!std::isfinite(margin)) return rep;
  rep.applicable = true;
  rep.margin = margin;
  rep.violated = margin < -1e-6 * gq.Q / d;
  return rep;
}

AuditReport audit_J_chain(const GlobalQuantities& gq, const InitialData& init, double Q_measured,
                          double J_measured) {
  const double d = init.delta, L = init.L;
  AuditReport rep;
  rep.time = gq.t;
  rep.check_name = "jchain";
  const bool guards = gq.E <= 2.0 && gq.H > 0.0 && d * d * L / gq.H <= 1.0 && L >= 5.0;
  if (!guards) {
    rep.applicable = false;
    rep.margin = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  rep.margin = J_measured - std::numbers::pi / 48.0 * (Q_measured / d) * std::log(L / 5.0);
  rep.violated = rep.margin < 0.0;
  return rep;
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::QReached: return "blowup";
    case RunStatus::Blowup: return "blowup";
    case RunStatus::TimeLimit: return "time_limit";
  }
  return "time_limit";
}

std::size_t RunMonitors::total() const {
  return D_decrease + D_below_one + H_mismatch + omega_negative + omega_decrease + U_decrease + axis_moved;
}

TimeSeries RunResult::to_series() const {
  TimeSeries s({"J", "D", "Q", "H", "E", "max_omega"});
  for (const auto& r : samples) {
    const double row[] = {r.gq.J, r.gq.D, r.gq.Q, r.gq.H, r.gq.E, r.max_omega};
    s.append(r.gq.t, row);
  }
  return s;
}

namespace {

RunSample make_run_sample(const ParticleGrid& g, const GlobalQuantities& gq, const InitialData& init) {
  RunSample s;
  s.gq = gq;
  s.max_omega = g.omega.empty() ? 0.0 : *std::max_element(g.omega.begin(), g.omega.end());
  s.box = audit_box_bound(g, gq, init);
  s.jchain = audit_J_chain(gq, init, gq.Q, gq.J);
  return s;
}

void monitor_step(const ParticleGrid& before, const GlobalQuantities& qb, const ParticleGrid& after,
                  const GlobalQuantities& qa, RunMonitors& m) {
  if (qa.D < qb.D) ++m.D_decrease;
  if (qa.D < 1.0) ++m.D_below_one;
  if (qa.H != qa.Q * qa.Q) ++m.H_mismatch;
  for (std::size_t k = 0; k < after.size(); ++k) {
    if (after.omega[k] < 0.0) ++m.omega_negative;
    if (after.omega[k] < before.omega[k]) ++m.omega_decrease;
    if (after.U[k] < before.U[k]) ++m.U_decrease;
  }
  for (std::size_t i = 0; i < after.nx; ++i) {
    if (after.U[i] != after.x1[i]) ++m.axis_moved;
  }
}

void check_oracles(const ParticleGrid& g, const GlobalQuantities& q, const InitialData& init, OracleStats& s) {
  const double d = init.delta;
  for (std::size_t j = 0; j < g.ny; ++j) {
    const double x2 = g.x2[j];
    const double tau = 0.5 * x2 * q.H;
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double x1 = g.x1[i];
      const std::size_t k = g.index(i, j);
      if (x1 >= d && x1 <= init.L * d && tau <= g.flow.tau_plateau_end[i]) {
        const double expect = x1 + x2 * q.H / (2.0 * d);
        s.max_plateau_rel_err = std::max(s.max_plateau_rel_err, std::abs(g.U[k] - expect) / g.U[k]);
        ++s.plateau_checks;
      }
      if (q.Q > 0.0 && in_oracle_domain(x1, x2, q.H, init)) {
        const double o = oracle_omega(x1, x2, q.Q, q.H, init);
        if (o > 0.0) {
          s.max_omega_rel_err = std::max(s.max_omega_rel_err, std::abs(g.omega[k] - o) / o);
          ++s.omega_checks;
        }
      }
    }
  }
}

}  // namespace

RunResult run(const InitialData& init, std::size_t nx, std::size_t ny, const RunControls& controls,
              const GridOptions& grid_options) {
  validate(init);
  if (!(controls.Q_max > 0.0)) throw ConfigError("Q_max must be positive");
  if (!(controls.dt0 > 0.0)) throw ConfigError("dt0 must be positive");
  if (!(controls.d_change_threshold > 0.0)) throw ConfigError("step-control threshold must be positive");
  if (!(controls.t_max > 0.0)) throw ConfigError("t_max must be positive");

  RunResult res;
  ParticleGrid grid = build_grid(init, nx, ny, grid_options);
  GlobalQuantities gq;
  res.samples.push_back(make_run_sample(grid, gq, init));

  double dt = controls.dt0;
  for (;;) {
    // The last step lands on t_max exactly.
    const bool last = dt >= controls.t_max - gq.t;
    StepResult trial = advance(grid, gq, init, last ? controls.t_max - gq.t : dt, controls.parallel);
    if (last) trial.gq.t = controls.t_max;
    const double change = std::abs(trial.gq.D - gq.D) / gq.D;
    if (!std::isfinite(trial.gq.D) || !(change <= controls.d_change_threshold)) {
      ++res.rejected_steps;
      dt *= 0.5;
      if (dt < controls.dt_floor) {
        res.status = RunStatus::Blowup;
        res.message = "time step fell below the floor";
        break;
      }
      continue;
    }
    ++res.accepted_steps;
    monitor_step(grid, gq, trial.grid, trial.gq, res.monitors);
    grid = std::move(trial.grid);
    gq = trial.gq;
    if (controls.check_oracles) check_oracles(grid, gq, init, res.oracles);
    res.samples.push_back(make_run_sample(grid, gq, init));

    if (gq.D > controls.D_cap) {
      res.status = RunStatus::Blowup;
      res.message = "D exceeded the cap";
      break;
    }
    if (gq.Q >= controls.Q_max) {
      res.status = RunStatus::QReached;
      res.message = "Q reached Q_max";
      break;
    }
    if (gq.t >= controls.t_max) {
      res.status = RunStatus::TimeLimit;
      res.message = "t reached t_max";
      break;
    }
  }
  res.final_grid = std::move(grid);
  res.final_state = gq;
  return res;
}

}  // namespace hlsim
