#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "tiltctl/sim.hpp"

namespace tiltctl {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Scenario configuration file: sections [robot], [nmpc], [sim], [scenario]
/// with key = value lines, # comments, unknown keys rejected. Angles are
/// degrees in the file and radians internally; every default matches the
/// shipped vehicle/controller parameters.
struct FullConfig {
  // [robot]
  double mass = 2.773;
  double inertia_xx = 0.0417, inertia_yy = 0.0395, inertia_zz = 0.0707;
  double gravity = 9.81;
  int rotor_count = 4;
  double arm_length = 0.2;
  std::vector<double> arm_azimuth_deg = {45.0, 135.0, 225.0, 315.0};
  std::vector<int> spin_direction = {-1, 1, -1, 1};
  double thrust_coeff = 1.5e-5;
  double torque_ratio = 0.0153;
  double thrust_min = 0.0, thrust_max = 30.0;
  double servo_min_deg = -90.0, servo_max_deg = 90.0;
  double t_servo = 0.0859, t_thrust = 0.0942, t_dead = 0.35;

  // [nmpc]
  int horizon = 20;
  double t_integ = 0.1;
  int integ_substeps = 2;
  double q_pos_xy = 300.0, q_pos_z = 400.0;
  double q_vel_xy = 10.0, q_vel_z = 10.0;
  double q_att_xy = 300.0, q_att_z = 600.0;
  double q_rate_xy = 5.0, q_rate_z = 5.0;
  double q_servo = 2.0;
  double r_thrust = 2.0, r_servo_cmd = 250.0;
  double terminal_scale = 1.0;
  double v_limit = 1.0;
  double omega_limit = 6.0;
  double soft_state_weight = 1e4;
  double qp_tol = 1e-8;
  int qp_max_iter = 200;
  double k_i_z = 5.0, f_d_limit = 5.0;

  // [sim]
  double plant_dt = 0.005, control_dt = 0.01;
  bool thrust_model = false, dead_time = false;
  bool noise = false;
  double sigma_pos = 0.002, sigma_vel = 0.005;
  double sigma_att_deg = 0.0573, sigma_rate_deg = 0.573, sigma_servo_deg = 0.0573;

  // [scenario]
  double duration = 0.0;  // 0 keeps the subcommand default
  double traj_period = 20.0;
  double z_force_bias = 0.0;
  double dist_time = 0.0, dist_duration = 0.0;
  double dist_force_x = 0.0, dist_force_y = 0.0, dist_force_z = 0.0;
  double dist_torque_x = 0.0, dist_torque_y = 0.0, dist_torque_z = 0.0;

  RobotParams robot_params() const;

  /// Overlays everything except the reference program onto a scenario.
  void apply(Scenario& scenario) const;
};

FullConfig parse_config_text(const std::string& text, const std::string& name);
FullConfig parse_config_file(const std::string& path);
std::string serialize_config(const FullConfig& config);

}  // namespace tiltctl
