#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hlsim/diagnostics.hpp"
#include "hlsim/errors.hpp"
#include "hlsim/profile_model.hpp"

namespace hlsim {

struct InitialData {
  double delta = 0.01;
  double L = 50.0;
  std::string smoothing = "quintic";
  double x2_cut = 2.0;
};

// Throws ConfigError unless 0 < delta < 1, L > 5, delta*L < 1, (L+1)*delta < 1.
void validate(const InitialData& init);

// Constants under which blow-up is guaranteed: L > 5 e^{96/pi}, delta*L <= 1.
bool strict_constants_hold(const InitialData& init);

// 6u^5 - 15u^4 + 10u^3 on [0,1], clamped outside.
double smoothstep(double u);
double phi(double x1, const InitialData& init);
double eta(double x2, const InitialData& init);

// Antiderivative of 1/smoothstep on (0,1]; increasing, -> -inf at 0.
double flow_potential(double v);
// v in (0,1] with flow_potential(v) = target (target <= flow_potential(1)).
double invert_flow_potential(double target, double guess);

// Exact flow of du/dtau = phi(u) for time tau >= 0.
double phi_flow(double u, double tau, const InitialData& init);

struct GridOptions {
  // Share of x1 labels placed in the rising shoulder [delta/2, delta),
  // geometrically clustered toward delta/2.
  double cluster_fraction = 0.25;
  // Smallest clustered offset, as a fraction of the shoulder width.
  double cluster_min = 1e-9;
  // Smallest positive x2 label.
  double x2_min = 1e-16;
};

// Per-particle data for the exact label -> U map at a given H.
struct FlowData {
  std::vector<double> tau_rise_end;     // tau at which U reaches delta
  std::vector<double> tau_plateau_end;  // tau at which U reaches L*delta
  std::vector<double> p_start;          // potential of the label in the rising shoulder
  std::vector<double> p_outer;          // potential on entry to the outer shoulder
};

struct ParticleGrid {
  std::size_t nx = 0;  // labels per row (x1)
  std::size_t ny = 0;  // rows (x2)
  std::vector<double> x1;  // label axis, size nx
  std::vector<double> x2;  // label axis, size ny; x2[0] = 0
  // Row-major particle arrays, index j * nx + i.
  std::vector<double> U;
  std::vector<double> omega;
  std::vector<double> rho0;
  std::vector<double> forcing;
  FlowData flow;

  std::size_t size() const { return nx * ny; }
  std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
  double label_x1(std::size_t k) const { return x1[k % nx]; }
  double label_x2(std::size_t k) const { return x2[k / nx]; }
};

struct GlobalQuantities {
  double t = 0.0;
  double J = 0.0;
  double D = 1.0;
  double Q = 0.0;
  double H = 0.0;
  double E = 0.0;
};

ParticleGrid build_grid(const InitialData& init, std::size_t nx, std::size_t ny,
                        const GridOptions& options = {});

// U of every particle at the given H, warm-started from the current U.
void update_positions(ParticleGrid& grid, double H, const InitialData& init);

// Trapezoid in current positions y1 = U/D along rows, then in x2.
// Rows are evaluated with OpenMP; the reduction order is fixed.
double compute_J(const ParticleGrid& grid, double D);
double compute_J_serial(const ParticleGrid& grid, double D);
// Label-space variant using the exact Jacobian dU/dx1 = phi(U)/phi(x1).
double compute_J_jacobian(const ParticleGrid& grid, double D, const InitialData& init);

inline constexpr double kDefaultDCap = 1e12;

class BlowupDetected : public Error {
 public:
  BlowupDetected(const std::string& what, GlobalQuantities state) : Error(what), state_(state) {}
  const GlobalQuantities& state() const { return state_; }

 private:
  GlobalQuantities state_;
};

struct StepOptions {
  double D_cap = kDefaultDCap;
  bool parallel = true;
};

struct StepResult {
  ParticleGrid grid;
  GlobalQuantities gq;
};

// Classical RK4 on (D, Q, omega) with J recomputed at every stage; U at each
// stage is the exact image of its label at the stage value of H.
StepResult step(const ParticleGrid& grid, const GlobalQuantities& gq, const InitialData& init, double dt,
                const StepOptions& options = {});

// Closed-form omega for labels that stayed on the plateau, including the
// eta(x2) factor. Throws DomainError outside the admissible label set.
double oracle_omega(double x1, double x2, double Q, double H, const InitialData& init);
bool in_oracle_domain(double x1, double x2, double H, const InitialData& init);

// omega - (pi/4) Q/delta on particles inside the box, restricted to eta = 1.
AuditReport audit_box_bound(const ParticleGrid& grid, const GlobalQuantities& gq, const InitialData& init);
// J - (pi/48)(Q/delta) log(L/5), applicable when E <= 2, delta^2 L/H <= 1, L >= 5.
AuditReport audit_J_chain(const GlobalQuantities& gq, const InitialData& init, double Q_measured,
                          double J_measured);

struct RunControls {
  double dt0 = 1e-3;
  double d_change_threshold = 0.1;
  double dt_floor = 1e-15;
  double D_cap = kDefaultDCap;
  double Q_max = 1e6;
  double t_max = 100.0;
  bool parallel = true;
  bool check_oracles = false;
};

enum class RunStatus { QReached, TimeLimit, Blowup };
std::string to_string(RunStatus s);

// Counts of structural violations over all accepted steps.
struct RunMonitors {
  std::size_t D_decrease = 0;
  std::size_t D_below_one = 0;
  std::size_t H_mismatch = 0;
  std::size_t omega_negative = 0;
  std::size_t omega_decrease = 0;
  std::size_t U_decrease = 0;
  std::size_t axis_moved = 0;
  std::size_t total() const;
};

struct OracleStats {
  double max_plateau_rel_err = 0.0;
  double max_omega_rel_err = 0.0;
  std::size_t plateau_checks = 0;
  std::size_t omega_checks = 0;
};

struct RunSample {
  GlobalQuantities gq;
  double max_omega = 0.0;
  AuditReport box;
  AuditReport jchain;
};

struct RunResult {
  RunStatus status = RunStatus::TimeLimit;
  std::string message;
  std::vector<RunSample> samples;
  ParticleGrid final_grid;
  GlobalQuantities final_state;
  RunMonitors monitors;
  OracleStats oracles;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  // Columns t, J, D, Q, H, E, max_omega.
  TimeSeries to_series() const;
};

RunResult run(const InitialData& init, std::size_t nx, std::size_t ny, const RunControls& controls = {},
              const GridOptions& grid_options = {});

}  // namespace hlsim
