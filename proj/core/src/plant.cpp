#include "tiltctl/plant.hpp"

#include <cmath>

namespace tiltctl {
namespace {

constexpr double kZeroThrustEps = 1e-9;

ModelLayout plant_layout(const RobotParams& params, const PlantOptions& opts)
{
  ModelLayout l;
  l.rotor_count = params.rotor_count;
  l.servo_state = true;
  l.thrust_state = opts.thrust_model;
  return l;
}

Eigen::VectorXd pack_plant(const ModelLayout& l, const PlantState& x)
{
  Eigen::VectorXd v = l.pack(x.state);
  if (l.thrust_state) v.segment(l.thrust_offset(), l.rotor_count) = x.thrust;
  return v;
}

// Commands as seen by the thrust dynamics: zero while a rotor's spin-up dead
// time has not elapsed. Only meaningful with the thrust model enabled.
Eigen::VectorXd effective_thrust_cmd(const PlantState& x, const Input& u,
                                     const PlantOptions& opts, double now)
{
  Eigen::VectorXd cmd = u.thrust_cmd;
  if (!opts.dead_time) return cmd;
  for (int i = 0; i < cmd.size(); ++i)
    if (x.pending[i].active && now < x.pending[i].release_time) cmd[i] = 0.0;
  return cmd;
}

}  // namespace

PlantState PlantState::hover_init(const State& s, const Eigen::VectorXd& thrust0)
{
  PlantState p;
  p.state = s;
  p.thrust = thrust0;
  p.pending.resize(thrust0.size());
  return p;
}

Eigen::VectorXd plant_deriv(const PlantState& x, const Input& u, const Disturbance& d,
                            const RobotParams& params, const PlantOptions& opts, double now)
{
  const ModelLayout l = plant_layout(params, opts);
  Input u_eff = u;
  if (opts.thrust_model) u_eff.thrust_cmd = effective_thrust_cmd(x, u, opts, now);
  Eigen::VectorXd xdot;
  eval_deriv(l, params, pack_plant(l, x), u_eff.to_vec(), d, xdot);
  return xdot;
}

int step_plant(PlantState& x, const Input& u, const Disturbance& d, const RobotParams& params,
               const PlantOptions& opts, double now, double h)
{
  const ModelLayout l = plant_layout(params, opts);
  const int np = params.rotor_count;

  Input u_eff = u;
  if (opts.thrust_model && opts.dead_time) {
    for (int i = 0; i < np; ++i) {
      auto& p = x.pending[i];
      if (p.active) {
        // Entry lives until the rotor spins up or the command is withdrawn at
        // standstill; commands pass through once the release time elapses.
        if (x.thrust[i] > kZeroThrustEps ||
            (u.thrust_cmd[i] <= kZeroThrustEps && x.thrust[i] <= kZeroThrustEps))
          p.active = false;
      } else if (x.thrust[i] <= kZeroThrustEps && u.thrust_cmd[i] > kZeroThrustEps) {
        p.active = true;
        p.release_time = now + params.t_dead;
        p.command = u.thrust_cmd[i];
      }
    }
    u_eff.thrust_cmd = effective_thrust_cmd(x, u, opts, now);
  }

  Eigen::VectorXd next = discrete_step(l, params, pack_plant(l, x), u_eff.to_vec(), d, h, 1);

  int clamped = 0;
  for (int i = 0; i < np; ++i) {
    double& a = next[l.servo_offset() + i];
    if (a < params.servo_min || a > params.servo_max) {
      a = std::clamp(a, params.servo_min, params.servo_max);
      ++clamped;
    }
  }
  if (l.thrust_state) {
    for (int i = 0; i < np; ++i) {
      double& f = next[l.thrust_offset() + i];
      if (f < 0.0 || f > params.thrust_max) {
        f = std::clamp(f, 0.0, params.thrust_max);
        ++clamped;
      }
    }
    x.thrust = next.segment(l.thrust_offset(), np);
  } else {
    x.thrust = u.thrust_cmd;
  }
  x.state = l.unpack(next);
  return clamped;
}

}  // namespace tiltctl
