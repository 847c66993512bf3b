#include "tiltctl/compensator.hpp"

#include <algorithm>

namespace tiltctl {

std::pair<double, ITermState> iterm_update(const ITermState& state, double e)
{
  ITermState next = state;
  if (state.k_i <= 0.0) return {0.0, next};

  const double integral_raw = state.integral + 0.5 * state.t_s * (state.e_prev + e);
  const double u_raw = state.k_i * integral_raw;
  const double u = std::clamp(u_raw, state.u_min, state.u_max);
  next.integral = integral_raw + (u - u_raw) / state.k_i;
  next.e_prev = e;
  return {u, next};
}

ITermState iterm_reset(const ITermState& state)
{
  ITermState next = state;
  next.integral = 0.0;
  next.e_prev = 0.0;
  return next;
}

}  // namespace tiltctl
