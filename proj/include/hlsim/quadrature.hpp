#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace hlsim {

// Affine profile G(y) = A - B*y of the nonlocal ODE model, with the
// depletion parameter K scaling the B equation.
struct ProfileParams {
  double A = 0.0;
  double B = 0.0;
  double K = 1.0;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t evaluations = 0;
  std::size_t panels = 0;
};

enum class Integrand { A, B };

struct QuadratureOptions {
  std::size_t max_panels = 10000;
};

struct Rates {
  double dA = 0.0;
  double dB = 0.0;
};

// Tolerance used for right-hand-side evaluations inside the ODE loop.
inline constexpr double kDefaultRhsTol = 1e-10;

// Integrands are evaluated in log space; a log-magnitude above this raises
// OverflowError (reached for A around 233 at y = 0).
inline constexpr double kMaxLogIntegrand = 700.0;

// y e^{-G} / (y^2 + e^{-2G})^2
double integrand_a(const ProfileParams& p, double y);
// e^{-G} / (y^2 + e^{-2G})^2, without the 1/K prefactor.
double integrand_b(const ProfileParams& p, double y);

// Root of h(y) = y - e^{-A+By} in (0,1) when h changes sign on [0,1].
std::optional<double> peak_split(const ProfileParams& p);

// Sorted interior breakpoints used to pre-split [0,1] before adaptation.
std::vector<double> breakpoints(const ProfileParams& p);

// Adaptive 15/7 Gauss-Kronrod quadrature of the selected integrand over
// [0,1]. Converges once error_estimate <= tol * |value|; throws
// NonConvergence when the panel budget runs out first.
QuadratureResult adaptive_integrate(Integrand f, const ProfileParams& p, double tol,
                                    const QuadratureOptions& options = {});

// (A', B') of the profile model at the given state.
Rates rhs(const ProfileParams& p, double tol = kDefaultRhsTol);

// Closed-form (A', B') for the B = 0 slice, used as a test oracle.
Rates oracle_rhs_b0(double A, double K);

}  // namespace hlsim
