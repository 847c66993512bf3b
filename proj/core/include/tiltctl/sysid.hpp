#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tiltctl {

struct SysidError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Logged step response: strictly increasing timestamps, at least 10 samples.
struct StepLogSeries {
  std::vector<double> t;         // s
  std::vector<double> command;
  std::vector<double> response;
  std::string units;

  void validate() const;
};

struct FirstOrderFit {
  double tau = 0.0;        // s
  double dead_time = 0.0;  // s
  double fit_pct = 0.0;    // 100 (1 - |y - y_hat| / |y - mean(y)|), one-step-ahead
};

/// Prediction-error fit of a first-order-plus-dead-time response: closed-form
/// least squares over the discrete pole at each candidate dead time (1 ms
/// grid, golden-section refined). Throws SysidError when no step is present in
/// the command or the response carries no information.
FirstOrderFit fit_first_order(const StepLogSeries& series);

/// Least-squares k_t for f = k_t * omega^2. Needs >= 3 samples with distinct
/// speeds; throws SysidError otherwise.
double fit_quadratic_thrust(const std::vector<std::pair<double, double>>& omega_thrust);

/// CSV import with a `time,command,response` header row.
StepLogSeries read_step_log_csv(const std::string& path);

}  // namespace tiltctl
