#pragma once

#include <vector>

#include <Eigen/Core>

namespace tiltctl {

/// Physical constants of an N_p-rotor tiltable multirotor: geometry, inertia,
/// rotor/servo coefficients and actuator bounds. Frames: world ENU, body FLU;
/// rotor i sits at `rotor_pos[i]` on an arm rotated by `arm_azimuth[i]` about
/// body Z, and tilts about the arm (local X) axis by the servo angle.
struct RobotParams {
  double mass = 2.773;                    // kg
  Eigen::Vector3d inertia_diag{0.0417, 0.0395, 0.0707};  // kg m^2
  double gravity = 9.81;                  // m/s^2, positive; gravity vector is [0,0,-g]
  int rotor_count = 4;

  std::vector<Eigen::Vector3d> rotor_pos;  // body frame, m
  std::vector<double> arm_azimuth;         // rad, rotation about body Z
  std::vector<int> spin_dir;               // +1 / -1

  double thrust_coeff = 1.5e-5;  // k_t, N s^2 (used by sysid; thrust itself is the input)
  double torque_ratio = 0.0153;  // k_q / k_t, m

  double thrust_min = 0.0;   // N
  double thrust_max = 30.0;  // N
  double servo_min = -M_PI / 2.0;  // rad
  double servo_max = M_PI / 2.0;   // rad

  double t_servo = 0.0859;   // s
  double t_thrust = 0.0942;  // s (plant option; the control model has no thrust state)
  double t_dead = 0.35;      // s, rotor spin-up dead time from standstill (plant option)

  /// X-layout quadrotor with 0.4 m wheelbase: arms at 45/135/225/315 deg,
  /// alternating spin directions so reaction torque cancels at uniform hover.
  static RobotParams default_tiltquad();

  double hover_thrust_per_rotor() const { return mass * gravity / rotor_count; }

  /// Throws std::invalid_argument on violated invariants (positive mass and
  /// inertia, N_p >= 3, ordered bounds, net-zero spin sum for 4 rotors, ...).
  void validate() const;
};

}  // namespace tiltctl
