#include "tiltctl/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace tiltctl {
namespace {

// Command value at query time with previous-sample hold; before the log the
// command is assumed at its first value.
double command_at(const StepLogSeries& s, double query)
{
  if (query <= s.t.front()) return s.command.front();
  auto it = std::upper_bound(s.t.begin(), s.t.end(), query);
  const auto idx = static_cast<size_t>(it - s.t.begin());
  return s.command[idx - 1];
}

struct PoleFit {
  double a = 0.0;    // discrete pole
  double sse = std::numeric_limits<double>::infinity();
};

// Closed-form least squares of y[n+1] = a y[n] + (1 - a) u_d[n] at a fixed
// dead time.
PoleFit fit_pole(const StepLogSeries& s, double dead_time)
{
  const size_t n = s.t.size();
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i + 1 < n; ++i) {
    const double u = command_at(s, s.t[i] - dead_time);
    num += (s.response[i + 1] - u) * (s.response[i] - u);
    den += (s.response[i] - u) * (s.response[i] - u);
  }
  PoleFit fit;
  if (den <= 0.0) return fit;
  fit.a = std::clamp(num / den, 1e-8, 1.0 - 1e-8);
  fit.sse = 0.0;
  for (size_t i = 0; i + 1 < n; ++i) {
    const double u = command_at(s, s.t[i] - dead_time);
    const double e = s.response[i + 1] - fit.a * s.response[i] - (1.0 - fit.a) * u;
    fit.sse += e * e;
  }
  return fit;
}

}  // namespace

void StepLogSeries::validate() const
{
  if (t.size() < 10) throw SysidError("step log needs at least 10 samples");
  if (command.size() != t.size() || response.size() != t.size())
    throw SysidError("step log channels must have equal length");
  for (size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw SysidError("step log timestamps must strictly increase");
}

FirstOrderFit fit_first_order(const StepLogSeries& series)
{
  series.validate();
  const size_t n = series.t.size();

  const auto [cmd_min, cmd_max] = std::minmax_element(series.command.begin(), series.command.end());
  const double cmd_span = *cmd_max - *cmd_min;
  if (cmd_span <= 1e-12 * std::max(1.0, std::abs(*cmd_max)))
    throw SysidError("fit_first_order: no step found in the command channel");

  double mean = 0.0;
  for (double y : series.response) mean += y;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double y : series.response) var += (y - mean) * (y - mean);
  if (var <= 1e-20 * std::max(1.0, mean * mean))
    throw SysidError("fit_first_order: response variance is ~0, not identifiable");

  const double span = series.t.back() - series.t.front();
  const double dt_mean = span / static_cast<double>(n - 1);
  const double dead_max = std::min(0.5 * span, 1.0);

  // 1 ms dead-time grid, then golden-section refinement around the best cell.
  double best_dead = 0.0;
  PoleFit best = fit_pole(series, 0.0);
  for (double dead = 0.001; dead <= dead_max; dead += 0.001) {
    const PoleFit f = fit_pole(series, dead);
    if (f.sse < best.sse) {
      best = f;
      best_dead = dead;
    }
  }
  {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = std::max(0.0, best_dead - 0.001);
    double hi = std::min(dead_max, best_dead + 0.001);
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double f1 = fit_pole(series, x1).sse;
    double f2 = fit_pole(series, x2).sse;
    for (int it = 0; it < 40 && hi - lo > 1e-7; ++it) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = fit_pole(series, x1).sse;
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = fit_pole(series, x2).sse;
      }
    }
    const double mid = 0.5 * (lo + hi);
    const PoleFit f = fit_pole(series, mid);
    if (f.sse <= best.sse) {
      best = f;
      best_dead = mid;
    }
  }

  FirstOrderFit out;
  out.dead_time = best_dead;
  out.tau = -dt_mean / std::log(best.a);

  double err = 0.0, ref = 0.0, mean_tail = 0.0;
  for (size_t i = 1; i < n; ++i) mean_tail += series.response[i];
  mean_tail /= static_cast<double>(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) {
    const double u = command_at(series, series.t[i] - best_dead);
    const double pred = best.a * series.response[i] + (1.0 - best.a) * u;
    err += (series.response[i + 1] - pred) * (series.response[i + 1] - pred);
    ref += (series.response[i + 1] - mean_tail) * (series.response[i + 1] - mean_tail);
  }
  out.fit_pct = ref > 0.0 ? 100.0 * (1.0 - std::sqrt(err / ref)) : 100.0;
  return out;
}

double fit_quadratic_thrust(const std::vector<std::pair<double, double>>& omega_thrust)
{
  if (omega_thrust.size() < 3)
    throw SysidError("fit_quadratic_thrust: needs at least 3 samples");
  double num = 0.0, den = 0.0;
  for (const auto& [omega, thrust] : omega_thrust) {
    const double w2 = omega * omega;
    num += thrust * w2;
    den += w2 * w2;
  }
  if (den <= 0.0) throw SysidError("fit_quadratic_thrust: degenerate design matrix");
  return num / den;
}

StepLogSeries read_step_log_csv(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw SysidError("cannot open step log: " + path);
  StepLogSeries s;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 || (s.t.empty() && line.find("time") != std::string::npos)) {
      if (line.find("time") != std::string::npos) continue;  // header row
    }
    std::istringstream row(line);
    std::string cell;
    double vals[3];
    for (int c = 0; c < 3; ++c) {
      if (!std::getline(row, cell, ','))
        throw SysidError(path + ":" + std::to_string(line_no) + ": expected 3 columns");
      try {
        vals[c] = std::stod(cell);
      } catch (const std::exception&) {
        throw SysidError(path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    s.t.push_back(vals[0]);
    s.command.push_back(vals[1]);
    s.response.push_back(vals[2]);
  }
  return s;
}

}  // namespace tiltctl
