#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hlsim {

// Column-oriented time series: strictly increasing t, uniquely named fields.
class TimeSeries {
 public:
  TimeSeries() = default;
  explicit TimeSeries(std::vector<std::string> names);

  void append(double t, std::span<const double> values);

  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& times() const { return times_; }
  bool has(std::string_view name) const;
  std::span<const double> column(std::string_view name) const;

 private:
  std::vector<std::string> names_;
  std::vector<double> times_;
  std::vector<std::vector<double>> columns_;
};

struct Window {
  double t_lo = 0.0;
  double t_hi = 0.0;
};

struct FitResult {
  double slope = 0.0;  // exponent for power laws
  double intercept = 0.0;
  double r_squared = 0.0;
  Window window;
  std::size_t n_points = 0;
};

inline constexpr std::size_t kMinFitPoints = 8;

// Least-squares line through (x, y); r^2 clamped to [0,1].
FitResult fit_line(std::span<const double> x, std::span<const double> y);

// Slope of log(value) against log(t) over the window.
FitResult fit_power_law(const TimeSeries& series, std::string_view field, Window window);

// Last two decades of the series.
Window default_power_law_window(const TimeSeries& series);

struct DecadeMean {
  int decade = 0;  // covers [10^decade, 10^(decade+1))
  double mean = 0.0;
  std::size_t n_points = 0;
};

struct BoundednessReport {
  double sup = 0.0;
  double inf = 0.0;
  std::vector<DecadeMean> decade_means;
  double max_decade_drift = 0.0;   // largest |difference| of consecutive decade means
  double total_variation = 0.0;    // summed |difference| of consecutive decade means
};

BoundednessReport boundedness_window(std::span<const double> t, std::span<const double> values,
                                     Window window);

// A - (K/3) log B evaluated on the series' A and B columns.
std::vector<double> tail_expression(const TimeSeries& series, double K);
BoundednessReport boundedness_window(const TimeSeries& series, double K, Window window);

struct BlowupEstimate {
  double t_star = 0.0;
  FitResult fit;
};

inline constexpr double kRootSlack = 1e-2;

// Fits 1/field linearly in t and returns the root of the fitted line.
// Throws NoBlowupTrend when the slope is not negative, or when the root
// lies more than kRootSlack window widths before the last sample.
BlowupEstimate extrapolate_blowup(const TimeSeries& series, std::string_view field, Window window);

// Window from the first sample where field >= final/10 to the last sample.
Window final_decade_window(const TimeSeries& series, std::string_view field);

}  // namespace hlsim
