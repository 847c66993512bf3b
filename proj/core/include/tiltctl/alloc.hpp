#pragma once

#include <Eigen/Core>

#include "tiltctl/model.hpp"
#include "tiltctl/robot_params.hpp"

namespace tiltctl {

struct ConfigurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Linear map from the virtual inputs z = [f_1 sin a_1, f_1 cos a_1, ...] to
/// the body wrench, with its precomputed Moore-Penrose inverse. Immutable
/// after construction.
struct AllocationMap {
  Eigen::MatrixXd wrench_of_z;  // 6 x 2 N_p
  Eigen::MatrixXd z_of_wrench;  // 2 N_p x 6, pseudoinverse
};

/// Builds the allocation matrix column by column from rotor_wrench at the two
/// unit virtual inputs of each rotor. Throws ConfigurationError if the map has
/// row rank below 6.
AllocationMap build_allocation(const RobotParams& params);

struct AllocationResult {
  Eigen::VectorXd thrust;         // f_{i,r} >= 0, clamped to the thrust bounds
  Eigen::VectorXd angle;          // alpha_{i,r} in (-pi, pi], clamped to the servo bounds
  Eigen::VectorXd virtual_input;  // minimum-norm z before clamping
  bool saturated = false;   // some output was clamped to the actuator bounds
  bool degenerate = false;  // some rotor had ~zero demanded thrust (angle set to 0)
};

/// Minimum-norm per-rotor thrust/tilt references realizing the wrench, clamped
/// to the actuator bounds.
AllocationResult allocate(const AllocationMap& map, const Wrench& wrench,
                          const RobotParams& params);

}  // namespace tiltctl
