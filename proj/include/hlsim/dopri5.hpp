#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace hlsim {

// Dormand-Prince 5(4) embedded pair with FSAL and the fourth-order
// continuous extension. Stateless apart from the PI controller memory.
template <std::size_t N>
class Dopri5 {
 public:
  using State = std::array<double, N>;

  struct Step {
    State y;        // fifth-order solution at t + h
    State k_end;    // f(t + h, y), reused as next k1
    double error;   // scaled RMS error norm; accept when <= 1
    std::array<State, 5> dense;
  };

  Dopri5(double atol, double rtol) : atol_(atol), rtol_(rtol) {}

  template <typename F>
  Step attempt(F&& f, double t, const State& y0, const State& k1, double h) const {
    State k2, k3, k4, k5, k6, tmp;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y0[i] + h * (a21 * k1[i]);
    k2 = f(t + c2 * h, tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y0[i] + h * (a31 * k1[i] + a32 * k2[i]);
    k3 = f(t + c3 * h, tmp);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y0[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    k4 = f(t + c4 * h, tmp);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y0[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    k5 = f(t + c5 * h, tmp);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y0[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    k6 = f(t + h, tmp);
    Step out;
    for (std::size_t i = 0; i < N; ++i)
      out.y[i] = y0[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    out.k_end = f(t + h, out.y);

    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double err = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                              e7 * out.k_end[i]);
      const double scale = atol_ + rtol_ * std::max(std::abs(y0[i]), std::abs(out.y[i]));
      sum += (err / scale) * (err / scale);
    }
    out.error = std::sqrt(sum / static_cast<double>(N));

    for (std::size_t i = 0; i < N; ++i) {
      const double dy = out.y[i] - y0[i];
      const double bspl = h * k1[i] - dy;
      out.dense[0][i] = y0[i];
      out.dense[1][i] = dy;
      out.dense[2][i] = bspl;
      out.dense[3][i] = dy - h * out.k_end[i] - bspl;
      out.dense[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                             d7 * out.k_end[i]);
    }
    return out;
  }

  // theta in [0,1] across the step the coefficients came from.
  static State interpolate(const std::array<State, 5>& c, double theta) {
    const double s = 1.0 - theta;
    State y;
    for (std::size_t i = 0; i < N; ++i)
      y[i] = c[0][i] + theta * (c[1][i] + s * (c[2][i] + theta * (c[3][i] + s * c[4][i])));
    return y;
  }

  // PI step-size proposal (Hairer & Wanner, beta = 0.04). Updates the
  // controller memory only for accepted steps.
  double propose(double h, double error, bool accepted) {
    constexpr double beta = 0.04;
    constexpr double safety = 0.9;
    const double fac11 = std::pow(std::max(error, 1e-300), 0.2 - beta * 0.75);
    if (accepted) {
      double fac = fac11 / std::pow(facold_, beta);
      fac = std::clamp(fac / safety, 0.1, 5.0);
      facold_ = std::max(error, 1e-4);
      return h / fac;
    }
    return h / std::min(5.0, fac11 / safety);
  }

 private:
  static constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                          a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                          a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
  static constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                          a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                          e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  double atol_;
  double rtol_;
  double facold_ = 1e-4;
};

}  // namespace hlsim
