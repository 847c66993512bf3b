#pragma once

#include <functional>
#include <vector>

#include "tiltctl/alloc.hpp"
#include "tiltctl/model.hpp"

namespace tiltctl {

struct PoseTarget {
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();
  Quat quat = Quat(1, 0, 0, 0);
};

/// Parametric 6-DoF pose trajectory with analytic first and second
/// derivatives. Attitude is given as intrinsic ZYX Euler angles of time.
struct PoseTrajectory {
  std::function<Eigen::Vector3d(double)> pos, vel, acc;
  std::function<Eigen::Vector3d(double)> rpy, rpy_rate, rpy_acc;
  double period = 0.0;  // s, 0 for aperiodic
};

/// References for one OCP horizon: N+1 full states and N inputs. The servo
/// part of u_ref equals the allocated tilt angles.
struct ReferenceWindow {
  std::vector<State> x;  // size N+1
  std::vector<Input> u;  // size N
  bool saturated = false;
};

/// Constant-pose window: every stage holds the target pose with zero rates;
/// wrench feedforward is the hover wrench rotated into the body frame.
ReferenceWindow setpoint_window(const PoseTarget& target, const RobotParams& params,
                                const AllocationMap& map, int horizon, double dt);

/// Samples the trajectory at t_now + k dt; body-rate and wrench feedforward
/// from the analytic derivatives (reference gyroscopic torque omitted).
ReferenceWindow trajectory_window(const PoseTrajectory& traj, double t_now,
                                  const RobotParams& params, const AllocationMap& map,
                                  int horizon, double dt);

/// Lemniscate pose trajectory with period T:
///   p = [cos(w t), sin(2 w t)/2, 0.3 sin(2 w t + pi/2) + 1]
///   rpy = [-sin(2 w t)/2, 0.5 cos(w t), pi/2 sin(w t + pi) + pi/2],  w = 2 pi / T.
PoseTrajectory build_figure8(double period);

/// Degenerate trajectory holding one pose forever.
PoseTrajectory constant_pose_trajectory(const PoseTarget& target);

/// Body angular velocity and acceleration of an RPY-parameterized attitude
/// path (used by trajectory_window; exposed for testing).
void rpy_path_rates(const Eigen::Vector3d& rpy, const Eigen::Vector3d& rpy_rate,
                    const Eigen::Vector3d& rpy_acc, Eigen::Vector3d& omega_body,
                    Eigen::Vector3d& omega_dot_body);

}  // namespace tiltctl
