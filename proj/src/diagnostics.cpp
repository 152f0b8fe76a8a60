#include "hlsim/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "hlsim/errors.hpp"

namespace hlsim {

TimeSeries::TimeSeries(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    for (std::size_t j = i + 1; j < names_.size(); ++j) {
      if (names_[i] == names_[j]) throw std::invalid_argument("TimeSeries: duplicate field " + names_[i]);
    }
  }
  columns_.resize(names_.size());
}

void TimeSeries::append(double t, std::span<const double> values) {
  if (values.size() != names_.size()) {
    throw std::invalid_argument("TimeSeries::append: expected " + std::to_string(names_.size()) +
                                " values, got " + std::to_string(values.size()));
  }
  if (!times_.empty() && !(t > times_.back())) {
    throw std::invalid_argument("TimeSeries::append: times must be strictly increasing");
  }
  times_.push_back(t);
  for (std::size_t i = 0; i < values.size(); ++i) columns_[i].push_back(values[i]);
}

bool TimeSeries::has(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::span<const double> TimeSeries::column(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::out_of_range("TimeSeries: no field " + std::string(name));
  return columns_[static_cast<std::size_t>(it - names_.begin())];
}

FitResult fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < kMinFitPoints || y.size() != n) {
    throw InsufficientData("fit needs at least " + std::to_string(kMinFitPoints) + " points, got " +
                           std::to_string(n));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw InsufficientData("fit needs distinct abscissae");
  FitResult fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.n_points = n;
  return fit;
}

namespace {

std::vector<std::size_t> window_indices(std::span<const double> t, Window w) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= w.t_lo && t[i] <= w.t_hi) idx.push_back(i);
  }
  return idx;
}

}  // namespace

FitResult fit_power_law(const TimeSeries& series, std::string_view field, Window window) {
  const auto t = std::span<const double>(series.times());
  const auto v = series.column(field);
  std::vector<double> lx, ly;
  for (std::size_t i : window_indices(t, window)) {
    if (!(t[i] > 0.0) || !(v[i] > 0.0)) {
      throw std::invalid_argument("fit_power_law: non-positive value in window");
    }
    lx.push_back(std::log(t[i]));
    ly.push_back(std::log(v[i]));
  }
  FitResult fit = fit_line(lx, ly);
  fit.window = window;
  return fit;
}

Window default_power_law_window(const TimeSeries& series) {
  if (series.empty()) throw InsufficientData("empty series");
  const double hi = series.times().back();
  return Window{hi / 100.0, hi};
}

BoundednessReport boundedness_window(std::span<const double> t, std::span<const double> values,
                                     Window window) {
  const auto idx = window_indices(t, window);
  if (idx.empty()) throw InsufficientData("boundedness_window: no samples in window");
  BoundednessReport report;
  report.sup = values[idx.front()];
  report.inf = values[idx.front()];
  std::map<int, std::pair<double, std::size_t>> by_decade;
  for (std::size_t i : idx) {
    report.sup = std::max(report.sup, values[i]);
    report.inf = std::min(report.inf, values[i]);
    if (t[i] > 0.0) {
      // Nudge so exact powers of ten land in the decade they open.
      const int d = static_cast<int>(std::floor(std::log10(t[i]) + 1e-12));
      auto& [sum, count] = by_decade[d];
      sum += values[i];
      ++count;
    }
  }
  for (const auto& [d, acc] : by_decade) {
    report.decade_means.push_back(DecadeMean{d, acc.first / static_cast<double>(acc.second), acc.second});
  }
  for (std::size_t i = 1; i < report.decade_means.size(); ++i) {
    const double diff = std::abs(report.decade_means[i].mean - report.decade_means[i - 1].mean);
    report.max_decade_drift = std::max(report.max_decade_drift, diff);
    report.total_variation += diff;
  }
  return report;
}

std::vector<double> tail_expression(const TimeSeries& series, double K) {
  const auto A = series.column("A");
  const auto B = series.column("B");
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] - (K / 3.0) * std::log(B[i]);
  return out;
}

BoundednessReport boundedness_window(const TimeSeries& series, double K, Window window) {
  const auto expr = tail_expression(series, K);
  return boundedness_window(series.times(), expr, window);
}

BlowupEstimate extrapolate_blowup(const TimeSeries& series, std::string_view field, Window window) {
  const auto t = std::span<const double>(series.times());
  const auto v = series.column(field);
  std::vector<double> x, y;
  for (std::size_t i : window_indices(t, window)) {
    if (!(v[i] > 0.0)) throw std::invalid_argument("extrapolate_blowup: non-positive value in window");
    x.push_back(t[i]);
    y.push_back(1.0 / v[i]);
  }
  FitResult fit = fit_line(x, y);
  fit.window = window;
  if (!(fit.slope < 0.0)) {
    throw NoBlowupTrend("extrapolate_blowup: 1/" + std::string(field) + " is not decreasing (slope " +
                        std::to_string(fit.slope) + ")");
  }
  // Root via the centroid to keep the result invariant under shifts of t.
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  const double t_star = mx - my / fit.slope;
  // A root inside the window contradicts the positive values observed up to
  // the last sample, so the trend is not a finite-time singularity.
  const double t_last = x.back();
  if (t_star < t_last - kRootSlack * (t_last - x.front())) {
    throw NoBlowupTrend("extrapolate_blowup: fitted root of 1/" + std::string(field) + " at t=" +
                        std::to_string(t_star) + " precedes the last sample at t=" + std::to_string(t_last));
  }
  return BlowupEstimate{t_star, fit};
}

Window final_decade_window(const TimeSeries& series, std::string_view field) {
  const auto v = series.column(field);
  if (v.empty()) throw InsufficientData("final_decade_window: empty series");
  const double threshold = v.back() / 10.0;
  std::size_t first = v.size() - 1;
  while (first > 0 && v[first - 1] >= threshold) --first;
  return Window{series.times()[first], series.times().back()};
}

}  // namespace hlsim
