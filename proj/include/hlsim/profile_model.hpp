#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hlsim/diagnostics.hpp"
#include "hlsim/quadrature.hpp"

namespace hlsim {

struct ProfileState {
  double t = 0.0;
  double A = 0.0;
  double B = 0.0;
};

enum class Regime { InitialI, FinalF, Outside };

std::string_view to_string(Regime r);
Regime classify_regime(const ProfileState& s, double K);

inline constexpr double kAuditTolerance = 1e-12;

// Rates used for audits and exported derivatives; tighter than the ODE loop
// because some pinching bounds are tight to ~1e-10 relative at late times.
inline constexpr double kAuditRhsTol = 1e-13;

struct AuditReport {
  double time = 0.0;
  std::string check_name;
  double margin = 0.0;  // >= 0 when the inequality holds
  bool violated = false;
  bool applicable = true;
  bool exploratory = false;  // K outside the validated range [1, 1.3]
};

AuditReport make_report(double time, std::string name, double margin, double K);
AuditReport not_applicable(double time, std::string name, double K);
bool validated_K(double K);

struct SamplePlan {
  double t_first = 1e-6;
  int per_decade = 64;
};

struct ProfileSample {
  ProfileState state;
  double dA = 0.0;
  double dB = 0.0;
};

struct ProfileTrajectory {
  double K = 1.0;
  std::vector<ProfileSample> samples;
  std::optional<double> transition_time;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t monotonicity_violations = 0;

  // Columns t, A, B, dA, dB.
  TimeSeries to_series() const;
};

struct IntegrateOptions {
  SamplePlan plan;
  // Quadrature tolerance inside the ODE loop; 0 selects one derived from ode_tol.
  double rhs_tol = 0.0;
};

// Integrates A' = int y e^{-G}/(y^2+e^{-2G})^2, B' = (1/K) int e^{-G}/(...)^2
// from A = B = 0 with a Dormand-Prince 5(4) pair. Samples at t = 0, on a
// geometric schedule, at the A = 1 crossing and at t_end.
ProfileTrajectory integrate(double K, double t_end, double ode_tol, const IntegrateOptions& options = {});

struct Transition {
  double t0 = 0.0;
  ProfileState state;
};

// First time with A = 1. Throws NotReached if it lies beyond horizon.
Transition find_transition_time(double K, double ode_tol, double horizon = 1e8);

double k_upper_bound(double K);
// Midpoint of (1, k_upper_bound(K)).
double default_k(double K);

// 101 uniform points plus the analytic minimisers of the audited profiles.
std::vector<double> audit_grid(const ProfileState& s, double K, double k);

// Core bound always; short-time bound in regime I; bound_1/bound_2 in F.
std::vector<AuditReport> audit_profile_bounds(const ProfileState& s, double K, double k,
                                              const std::vector<double>& grid);
// K B/2 - A, which must be positive for t > 0.
AuditReport audit_ratio(const ProfileState& s, double K);
std::vector<AuditReport> audit_inequalities(const ProfileState& s, double K, double k);
std::vector<AuditReport> audit_pinching(const ProfileState& s, double dA, double dB, double K);

// Every audit above on one sampled state (inequalities and pinching only in F).
std::vector<AuditReport> audit_state(const ProfileSample& sample, double K, double k);

}  // namespace hlsim
