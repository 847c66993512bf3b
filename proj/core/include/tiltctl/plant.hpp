#pragma once

#include <vector>

#include "tiltctl/model.hpp"

namespace tiltctl {

struct PlantOptions {
  bool thrust_model = false;  // first-order thrust lag states
  bool dead_time = false;     // rotor spin-up dead time from standstill
};

/// Simulated-plant state: the 17-dim control-model state plus, when the
/// first-order thrust model is enabled, actual per-rotor thrusts and a pending
/// dead-time queue (one (release_time, command) entry per rotor at most).
struct PlantState {
  State state;
  Eigen::VectorXd thrust;  // N, length N_p; tracks commands when the model is off

  struct PendingCommand {
    double release_time = 0.0;
    double command = 0.0;
    bool active = false;
  };
  std::vector<PendingCommand> pending;

  static PlantState hover_init(const State& s, const Eigen::VectorXd& thrust0);
};

/// Continuous plant derivative at time `now`, identical to the control model
/// except that enabled thrust states integrate toward the dead-time-delayed
/// command. Layout: [p v q w alpha (f)].
Eigen::VectorXd plant_deriv(const PlantState& x, const Input& u, const Disturbance& d,
                            const RobotParams& params, const PlantOptions& opts, double now);

/// Advances the plant by one step h: refreshes the dead-time queue at the step
/// start, integrates (rigid body RK4, actuator channels exact), then clamps
/// servo angles to their bounds and thrusts to [0, f_max]. Returns the number
/// of clamped entries.
int step_plant(PlantState& x, const Input& u, const Disturbance& d, const RobotParams& params,
               const PlantOptions& opts, double now, double h);

}  // namespace tiltctl
