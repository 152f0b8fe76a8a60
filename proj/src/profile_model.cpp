#include "hlsim/profile_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hlsim/dopri5.hpp"
#include "hlsim/errors.hpp"

namespace hlsim {

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::InitialI: return "I";
    case Regime::FinalF: return "F";
    case Regime::Outside: return "Outside";
  }
  return "Outside";
}

Regime classify_regime(const ProfileState& s, double K) {
  const double b_star = 2.0 / K;
  if ((s.A <= 1.0 && s.B >= b_star) || s.B <= b_star) return Regime::InitialI;
  if (s.A > 1.0 && s.A <= K * s.B / 2.0) return Regime::FinalF;
  return Regime::Outside;
}

bool validated_K(double K) { return K >= 1.0 && K <= 1.3; }

AuditReport make_report(double time, std::string name, double margin, double K) {
  AuditReport r;
  r.time = time;
  r.check_name = std::move(name);
  r.margin = margin;
  r.violated = std::isnan(margin) || margin < -kAuditTolerance;
  r.exploratory = !validated_K(K);
  return r;
}

AuditReport not_applicable(double time, std::string name, double K) {
  AuditReport r;
  r.time = time;
  r.check_name = std::move(name);
  r.margin = std::numeric_limits<double>::quiet_NaN();
  r.applicable = false;
  r.exploratory = !validated_K(K);
  return r;
}

TimeSeries ProfileTrajectory::to_series() const {
  TimeSeries series({"A", "B", "dA", "dB"});
  for (const auto& s : samples) {
    const double row[] = {s.state.A, s.state.B, s.dA, s.dB};
    series.append(s.state.t, row);
  }
  return series;
}

namespace {

using Stepper = Dopri5<2>;
using State = Stepper::State;

struct EventHit {
  double t = 0.0;
  State y{};
};

struct RunOutcome {
  ProfileTrajectory trajectory;
  std::optional<EventHit> event;
};

double loop_rhs_tol(double ode_tol, double requested) {
  if (requested > 0.0) return requested;
  return std::clamp(ode_tol * 1e-2, 1e-13, kDefaultRhsTol);
}

std::vector<double> sample_times(const SamplePlan& plan, double t_end) {
  std::vector<double> times;
  if (plan.per_decade > 0 && plan.t_first > 0.0) {
    for (int j = 0;; ++j) {
      const double t = plan.t_first * std::pow(10.0, static_cast<double>(j) / plan.per_decade);
      if (!(t < t_end)) break;
      times.push_back(t);
    }
  }
  times.push_back(t_end);
  return times;
}

ProfileSample make_sample(double t, const State& y, double K) {
  ProfileSample s;
  s.state = ProfileState{t, y[0], y[1]};
  const Rates r = rhs(ProfileParams{y[0], y[1], K}, kAuditRhsTol);
  s.dA = r.dA;
  s.dB = r.dB;
  return s;
}

// Root of A = 1 inside an accepted step: Illinois iteration on the dense
// output, then Newton on fresh steps from the step start.
template <typename F>
EventHit locate_event(const Stepper& stepper, F& f, double t, const State& y, const State& k1,
                      const Stepper::Step& step, double h) {
  double lo = 0.0, hi = 1.0;
  double g_lo = y[0] - 1.0, g_hi = step.y[0] - 1.0;
  int side = 0;
  double theta = 1.0;
  for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
    theta = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
    if (!(theta > lo && theta < hi)) theta = 0.5 * (lo + hi);
    const double g = Stepper::interpolate(step.dense, theta)[0] - 1.0;
    if (g == 0.0) break;
    if (g < 0.0) {
      lo = theta;
      g_lo = g;
      if (side == -1) g_hi *= 0.5;
      side = -1;
    } else {
      hi = theta;
      g_hi = g;
      if (side == 1) g_lo *= 0.5;
      side = 1;
    }
  }
  double s = theta * h;
  EventHit hit{t + s, Stepper::interpolate(step.dense, theta)};
  for (int it = 0; it < 8; ++it) {
    const auto trial = stepper.attempt(f, t, y, k1, s);
    hit = EventHit{t + s, trial.y};
    const double r = trial.y[0] - 1.0;
    if (std::abs(r) <= 1e-14) break;
    const double s_new = s - r / trial.k_end[0];
    if (!(s_new > 0.0 && s_new <= h)) break;
    s = s_new;
  }
  return hit;
}

RunOutcome run_profile(double K, double t_end, double ode_tol, const SamplePlan* plan, double rhs_tol,
                       bool stop_at_event) {
  if (!(K > 0.0)) throw ConfigError("K must be positive");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (!(ode_tol > 0.0)) throw ConfigError("ode_tol must be positive");

  const double qtol = loop_rhs_tol(ode_tol, rhs_tol);
  auto f = [K, qtol](double, const State& y) {
    const Rates r = rhs(ProfileParams{std::max(y[0], 0.0), std::max(y[1], 0.0), K}, qtol);
    return State{r.dA, r.dB};
  };

  Stepper stepper(ode_tol, ode_tol);
  const std::vector<double> targets = plan ? sample_times(*plan, t_end) : std::vector<double>{t_end};

  RunOutcome out;
  ProfileTrajectory& traj = out.trajectory;
  traj.K = K;

  double t = 0.0;
  State y{0.0, 0.0};
  State k1 = f(t, y);
  if (plan) traj.samples.push_back(make_sample(t, y, K));

  double h = 0.1 * std::pow(ode_tol, 0.2) / std::max(std::abs(k1[0]), std::abs(k1[1]));
  std::size_t next = 0;

  while (next < targets.size()) {
    const double target = targets[next];
    if (h < 1e-14 * std::max(1.0, t)) {
      throw StepFloor("profile integration step " + std::to_string(h) + " below floor at t = " +
                      std::to_string(t));
    }
    const bool clamped = h >= target - t;
    const double h_try = clamped ? target - t : h;
    const auto step = stepper.attempt(f, t, y, k1, h_try);

    if (!std::isfinite(step.error)) {
      h *= 0.1;
      ++traj.rejected_steps;
      continue;
    }
    if (step.error > 1.0) {
      h = stepper.propose(h_try, step.error, false);
      ++traj.rejected_steps;
      continue;
    }

    ++traj.accepted_steps;
    if (!(step.y[0] > y[0]) || !(step.y[1] > y[1])) ++traj.monotonicity_violations;
    const double h_next = stepper.propose(h_try, step.error, true);

    if (!out.event && y[0] < 1.0 && step.y[0] >= 1.0) {
      const EventHit hit = locate_event(stepper, f, t, y, k1, step, h_try);
      out.event = hit;
      traj.transition_time = hit.t;
      const double t_new = clamped ? target : t + h_try;
      if (plan && hit.t > t && hit.t < t_new) traj.samples.push_back(make_sample(hit.t, hit.y, K));
      if (stop_at_event) return out;
    }

    t = clamped ? target : t + h_try;
    y = step.y;
    k1 = step.k_end;
    if (clamped) {
      if (plan) traj.samples.push_back(make_sample(t, y, K));
      ++next;
      // A short clamped step says little about the natural step size.
      if (h_try >= h) h = h_next;
    } else {
      h = h_next;
    }
  }
  return out;
}

}  // namespace

ProfileTrajectory integrate(double K, double t_end, double ode_tol, const IntegrateOptions& options) {
  return run_profile(K, t_end, ode_tol, &options.plan, options.rhs_tol, false).trajectory;
}

Transition find_transition_time(double K, double ode_tol, double horizon) {
  if (!(K > 0.0 && K < 2.0)) throw ConfigError("find_transition_time needs K in (0, 2)");
  const RunOutcome out = run_profile(K, horizon, ode_tol, nullptr, 0.0, true);
  if (!out.event) {
    throw NotReached("A stays below 1 up to t = " + std::to_string(horizon));
  }
  return Transition{out.event->t, ProfileState{out.event->t, out.event->y[0], out.event->y[1]}};
}

double k_upper_bound(double K) {
  if (!(K > 0.0)) throw std::invalid_argument("k_upper_bound: K must be positive");
  const double q = K * K + 4.0;
  return 48.0 * (1.0 - std::exp(-6.0 / K)) / (K * q * q);
}

double default_k(double K) { return 0.5 * (1.0 + k_upper_bound(K)); }

std::vector<double> audit_grid(const ProfileState& s, double K, double k) {
  std::vector<double> grid;
  grid.reserve(105);
  for (int i = 0; i <= 100; ++i) grid.push_back(i / 100.0);
  if (s.B > 0.0) {
    const double c = s.A / s.B;
    const double extra[] = {c, c + std::log(2.0 / (K * s.B)) / s.B, c + std::log(1.0 / (k * s.B)) / (k * s.B),
                            c + std::log(1.0 / s.B) / s.B};
    for (double y : extra) {
      if (std::isfinite(y)) grid.push_back(std::clamp(y, 0.0, 1.0));
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

namespace {

template <typename Fn>
double grid_min(const std::vector<double>& grid, Fn&& fn, double y_max = 1.0) {
  double m = std::numeric_limits<double>::infinity();
  for (double y : grid) {
    if (y <= y_max) m = std::min(m, fn(y));
  }
  return m;
}

}  // namespace

std::vector<AuditReport> audit_profile_bounds(const ProfileState& s, double K, double k,
                                              const std::vector<double>& grid) {
  const double A = s.A, B = s.B;
  auto eg = [A, B](double y) { return std::exp(-A + B * y); };
  std::vector<AuditReport> out;
  out.push_back(make_report(s.t, "core", grid_min(grid, [&](double y) { return eg(y) - y; }), K));

  const Regime regime = classify_regime(s, K);
  if (regime == Regime::InitialI) {
    // The short-time bound only covers y <= A/B; beyond it e^{-G} > 1 >= y.
    const double y_max = B > 0.0 ? std::min(1.0, A / B) : (A > 0.0 ? 1.0 : 0.0);
    std::vector<double> pts = grid;
    pts.push_back(y_max);
    out.push_back(make_report(
        s.t, "short_time", grid_min(pts, [&](double y) { return eg(y) - (2.0 / K) * y; }, y_max), K));
  } else {
    out.push_back(not_applicable(s.t, "short_time", K));
  }
  if (regime == Regime::FinalF) {
    out.push_back(make_report(s.t, "bound_1", grid_min(grid, [&](double y) { return 0.5 * K * eg(y) - y; }), K));
    out.push_back(make_report(
        s.t, "bound_2", grid_min(grid, [&](double y) { return std::exp(k * (-A + B * y)) - y; }), K));
  } else {
    out.push_back(not_applicable(s.t, "bound_1", K));
    out.push_back(not_applicable(s.t, "bound_2", K));
  }
  return out;
}

AuditReport audit_ratio(const ProfileState& s, double K) {
  return make_report(s.t, "ratio", 0.5 * K * s.B - s.A, K);
}

std::vector<AuditReport> audit_inequalities(const ProfileState& s, double K, double k) {
  // Margins are reported everywhere but only claimed in F.
  std::vector<AuditReport> out{make_report(s.t, "ineq_1", 1.0 - s.A + std::log(0.5 * K * s.B), K),
                               make_report(s.t, "ineq_2", 1.0 - k * s.A + std::log(k * s.B), K)};
  const bool in_F = classify_regime(s, K) == Regime::FinalF;
  for (auto& r : out) r.applicable = in_F;
  return out;
}

std::vector<AuditReport> audit_pinching(const ProfileState& s, double dA, double dB, double K) {
  if (classify_regime(s, K) != Regime::FinalF) {
    return {not_applicable(s.t, "pinch_A_upper", K), not_applicable(s.t, "pinch_B_lower", K),
            not_applicable(s.t, "pinch_B_upper", K)};
  }
  const double e3a = std::exp(3.0 * s.A);
  const double q = K * K / 4.0 + 1.0;
  const double b_lower = e3a * (1.0 - std::exp(-6.0 / K)) / (3.0 * K * s.B * q * q);
  return {make_report(s.t, "pinch_A_upper", e3a / (9.0 * s.B * s.B) - dA, K),
          make_report(s.t, "pinch_B_lower", dB - b_lower, K),
          make_report(s.t, "pinch_B_upper", e3a / (3.0 * K * s.B) - dB, K)};
}

std::vector<AuditReport> audit_state(const ProfileSample& sample, double K, double k) {
  const ProfileState& s = sample.state;
  std::vector<AuditReport> out = audit_profile_bounds(s, K, k, audit_grid(s, K, k));
  out.push_back(audit_ratio(s, K));
  for (auto& r : audit_inequalities(s, K, k)) out.push_back(std::move(r));
  for (auto& r : audit_pinching(s, sample.dA, sample.dB, K)) out.push_back(std::move(r));
  return out;
}

}  // namespace hlsim
