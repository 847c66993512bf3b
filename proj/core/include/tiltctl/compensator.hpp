#pragma once

#include <utility>

namespace tiltctl {

/// Discrete integral compensator with trapezoidal integration and
/// back-calculation anti-windup. The clamped output is the world-Z
/// disturbance-force parameter handed to the solver each tick; after every
/// update the back-calculated accumulator satisfies k_i * integral = output.
struct ITermState {
  double integral = 0.0;  // m s
  double k_i = 5.0;       // N / (m s)
  double t_s = 0.01;      // s
  double u_min = -5.0;    // N
  double u_max = 5.0;     // N
  double e_prev = 0.0;    // m
};

/// One update with error sample e; returns the clamped output and the new
/// state. With k_i <= 0 the compensator is disabled (output 0, state frozen).
std::pair<double, ITermState> iterm_update(const ITermState& state, double e);

ITermState iterm_reset(const ITermState& state);

}  // namespace tiltctl
