#include "hlsim/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <string>

#include "hlsim/errors.hpp"

namespace hlsim {

namespace {

// Kronrod 15-point abscissae on [-1,1] (non-negative half) and weights;
// odd indices are the Gauss 7-point nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr double kEps = std::numeric_limits<double>::epsilon();

// log of e^{-G} / (y^2 + e^{-2G})^2, computed without forming e^{-G}.
double log_kernel(const ProfileParams& p, double y) {
  const double g = -p.A + p.B * y;  // log e^{-G}
  const double ly = y > 0.0 ? std::log(y) : -std::numeric_limits<double>::infinity();
  const double lmax = std::max(ly, g);
  const double ratio = std::exp(std::min(ly, g) - lmax);
  const double q = 1.0 + ratio * ratio;
  return g - 4.0 * lmax - 2.0 * std::log(q);
}

double checked_exp(double log_value) {
  if (log_value > kMaxLogIntegrand) {
    throw OverflowError("profile integrand exceeds floating-point range (log magnitude " +
                        std::to_string(log_value) + ")");
  }
  return std::exp(log_value);
}

struct Panel {
  double a = 0.0;
  double b = 0.0;
  double value = 0.0;
  double error = 0.0;
};

struct ByError {
  bool operator()(const Panel& l, const Panel& r) const {
    if (l.error != r.error) return l.error < r.error;
    return l.a > r.a;
  }
};

template <typename F>
Panel gauss_kronrod_15(F&& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = kWgk[7] * fc;
  double gauss = kWg[3] * fc;
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += kWgk[j] * pair;
    if (j % 2 == 1) gauss += kWg[j / 2] * pair;
  }
  kronrod *= half;
  gauss *= half;
  double error = std::abs(kronrod - gauss);
  // Integrands are non-negative, so |value| doubles as the resabs scale.
  const double roundoff = 50.0 * kEps * std::abs(kronrod);
  if (error < roundoff) error = roundoff;
  return Panel{a, b, kronrod, error};
}

}  // namespace

double integrand_a(const ProfileParams& p, double y) {
  if (y <= 0.0) return 0.0;
  return y * checked_exp(log_kernel(p, y));
}

double integrand_b(const ProfileParams& p, double y) {
  return checked_exp(log_kernel(p, y));
}

std::optional<double> peak_split(const ProfileParams& p) {
  auto h = [&](double y) { return y - std::exp(-p.A + p.B * y); };
  // h(0) = -e^{-A} < 0; only a sign change at y = 1 brackets an interior root.
  if (!(h(1.0) > 0.0)) return std::nullopt;
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-14) {
    const double mid = 0.5 * (lo + hi);
    if (h(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> breakpoints(const ProfileParams& p) {
  std::vector<double> points;
  if (auto root = peak_split(p)) points.push_back(*root);
  if (p.B < 1.0) points.push_back(std::min(1.0, 3.0 * std::exp(-p.A)));
  // Geometric ladder from the narrowest feature width up to 1: the decay
  // length 1/(3B) of e^{3G} and the front position e^{-A}.
  const double start = std::min(1.0 / (3.0 * std::max(p.B, 1.0)), std::exp(-p.A) / 3.0);
  for (double y = start; y < 1.0; y *= 2.0) points.push_back(y);
  std::sort(points.begin(), points.end());
  std::vector<double> unique;
  for (double y : points) {
    if (y <= 0.0 || y >= 1.0) continue;
    if (!unique.empty() && y - unique.back() <= 1e-15 * y) continue;
    unique.push_back(y);
  }
  return unique;
}

QuadratureResult adaptive_integrate(Integrand which, const ProfileParams& p, double tol,
                                    const QuadratureOptions& options) {
  if (!(tol > 0.0)) throw std::invalid_argument("adaptive_integrate: tol must be positive");
  std::size_t evaluations = 0;
  auto f = [&](double y) {
    ++evaluations;
    return which == Integrand::A ? integrand_a(p, y) : integrand_b(p, y);
  };

  std::vector<double> edges{0.0};
  for (double y : breakpoints(p)) edges.push_back(y);
  edges.push_back(1.0);

  std::priority_queue<Panel, std::vector<Panel>, ByError> heap;
  double total = 0.0;
  double total_error = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    Panel panel = gauss_kronrod_15(f, edges[i], edges[i + 1]);
    total += panel.value;
    total_error += panel.error;
    heap.push(panel);
  }

  while (total_error > tol * std::abs(total)) {
    if (heap.size() >= options.max_panels) {
      throw NonConvergence("adaptive_integrate: panel budget of " +
                           std::to_string(options.max_panels) +
                           " exhausted (error estimate " + std::to_string(total_error) +
                           ", value " + std::to_string(total) + ")");
    }
    const Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    Panel left = gauss_kronrod_15(f, worst.a, mid);
    Panel right = gauss_kronrod_15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }

  // Re-sum in left-to-right order so the result does not carry the
  // incremental update's cancellation.
  std::vector<Panel> panels;
  panels.reserve(heap.size());
  while (!heap.empty()) {
    panels.push_back(heap.top());
    heap.pop();
  }
  std::sort(panels.begin(), panels.end(), [](const Panel& l, const Panel& r) { return l.a < r.a; });
  QuadratureResult result;
  for (const Panel& panel : panels) {
    result.value += panel.value;
    result.error_estimate += panel.error;
  }
  result.evaluations = evaluations;
  result.panels = panels.size();
  return result;
}

Rates rhs(const ProfileParams& p, double tol) {
  if (!(p.K > 0.0)) throw std::invalid_argument("rhs: K must be positive");
  const QuadratureResult a = adaptive_integrate(Integrand::A, p, tol);
  const QuadratureResult b = adaptive_integrate(Integrand::B, p, tol);
  return Rates{a.value, b.value / p.K};
}

Rates oracle_rhs_b0(double A, double K) {
  const double a = std::exp(-A);
  const double a2 = a * a;
  const double dA = 1.0 / (2.0 * a) - a / (2.0 * (1.0 + a2));
  const double dB = (1.0 / (2.0 * a * (1.0 + a2)) + std::atan(1.0 / a) / (2.0 * a2)) / K;
  return Rates{dA, dB};
}

}  // namespace hlsim
