#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tiltctl/compensator.hpp"
#include "tiltctl/nmpc.hpp"
#include "tiltctl/plant.hpp"
#include "tiltctl/refgen.hpp"

namespace tiltctl {

/// Which actuator lags the prediction model carries.
enum class ControllerVariant { kNoServoNoThrust, kServoOnly, kServoThrust };

ModelLayout variant_layout(ControllerVariant variant, int rotor_count);
std::string variant_name(ControllerVariant variant);

/// Measurement noise (plant truth is unaffected). Attitude noise is applied in
/// the quaternion tangent space and renormalized.
struct NoiseConfig {
  bool enabled = false;
  double sigma_pos = 0.002;    // m
  double sigma_vel = 0.005;    // m/s
  double sigma_att = 0.001;    // rad
  double sigma_rate = 0.01;    // rad/s
  double sigma_servo = 0.001;  // rad
};

/// Rectangular wrench pulse applied to the plant.
struct DisturbanceEvent {
  double t_start = 0.0;
  double duration = 0.0;
  Eigen::Vector3d force_w = Eigen::Vector3d::Zero();
  Eigen::Vector3d torque_b = Eigen::Vector3d::Zero();
};

struct Scenario {
  RobotParams robot = RobotParams::default_tiltquad();
  OcpWeights weights;
  OcpConfig ocp;
  ControllerVariant variant = ControllerVariant::kServoOnly;

  struct TimedTarget {
    double t_switch = 0.0;
    PoseTarget target;
  };
  std::vector<TimedTarget> setpoints;        // step program (used without trajectory)
  std::optional<PoseTrajectory> trajectory;  // takes precedence when set

  double duration = 10.0;
  double plant_dt = 0.005;    // 200 Hz
  double control_dt = 0.01;   // 100 Hz, integer multiple of plant_dt
  PlantOptions plant;
  NoiseConfig noise;
  uint64_t seed = 0;
  std::vector<DisturbanceEvent> disturbances;
  double z_force_bias = 0.0;  // constant world-Z plant force, N

  double k_i_z = 5.0;      // integral compensator gain
  double f_d_limit = 5.0;  // compensator output limit, N

  State initial;
  bool start_on_trajectory = false;  // derive the initial state from the trajectory at t=0

  // Sanity envelope; leaving it flags the run as crashed.
  double crash_pos_limit = 50.0;   // m
  double crash_vel_limit = 50.0;   // m/s
  double crash_rate_limit = 200.0; // rad/s

  void validate() const;
};

enum class RunStatus { kOk, kDiverged, kCrashed };
std::string run_status_name(RunStatus s);

struct SolveStats {
  double solve_time_ms = 0.0;
  int qp_iters = 0;
  double kkt_residual = 0.0;
  double cost = 0.0;
};

struct LogRecord {
  double t = 0.0;
  State x;                 // plant truth
  Eigen::VectorXd thrust;  // plant thrust states (tracks the command when lag is off)
  Input applied;
  PoseTarget ref;          // active reference pose at t
  double f_dz = 0.0;
  SolveStats stats;        // most recent solve
};

struct RunLog {
  std::vector<LogRecord> records;
  std::vector<SolveStats> solves;
  RunStatus status = RunStatus::kOk;
  int clamp_events = 0;
};

struct RunSummary {
  Eigen::Vector3d rmse_pos = Eigen::Vector3d::Zero();      // m
  Eigen::Vector3d rmse_att_deg = Eigen::Vector3d::Zero();  // roll/pitch/yaw
  double overshoot_z_pct = std::numeric_limits<double>::quiet_NaN();
  double settle_s = std::numeric_limits<double>::quiet_NaN();  // 5% band on the first Z step
  double tv_total_cmd = 0.0;   // sum of |Δf_c| and |Δalpha_c| over ticks
  double tv_servo_cmd = 0.0;
  double tv_thrust_cmd = 0.0;
  double max_thrust_cmd_step = 0.0;  // max per-tick |Δf_c| entry
  double solve_ms_p50 = 0.0;
  double solve_ms_p99 = 0.0;
  RunStatus status = RunStatus::kOk;
};

/// Deterministic closed-loop run: controller at 1/control_dt with zero-order
/// hold, plant at 1/plant_dt, compensator updated before each solve.
RunLog run_closed_loop(const Scenario& scenario);

/// Summary statistics of a run against its logged references.
RunSummary metrics(const RunLog& log);

/// Largest position error norm over records with t in [t_from, t_to].
double max_pos_error_between(const RunLog& log, double t_from, double t_to);

struct VariantOutcome {
  ControllerVariant variant;
  RunSummary summary;
  RunStatus status = RunStatus::kOk;
};

/// The three prediction-model variants on one scenario (noise-free; the plant
/// carries first-order thrust states for every arm so the thrust-model variant
/// has something to predict).
struct AblationReport {
  VariantOutcome no_servo, servo, servo_thrust;
  double servo_tv_ratio = 0.0;      // no-servo / servo command total variation
  bool oscillation_ordering = false;  // ratio >= 2
  bool smoothness_ordering = false;   // pos RMSE(servo+thrust) <= 1.05 * RMSE(servo)
  bool thrust_step_ordering = false;  // max |Δf_c| strictly smaller with thrust model
};
AblationReport ablation_compare(const Scenario& base);

/// Relative wrench-term errors of first-order actuator lag: the cosine factor
/// for a servo sweep from `angle_from` to `angle_to` caught `lag_fraction`
/// short, and the thrust factor for a ramp from `thrust_from` to `thrust_to`.
struct LagSensitivity {
  double servo_pct = 0.0;
  double thrust_pct = 0.0;
};
LagSensitivity lag_sensitivity(double angle_from, double angle_to, double thrust_from,
                               double thrust_to, double lag_fraction);

// Canned scenarios (Table-I defaults unless the caller overrides fields).
Scenario hover_scenario(double duration = 10.0);
Scenario step_pose_scenario(double duration = 8.0);       // position step, attitude step at 2 s
Scenario setpoint_sequence_scenario();                    // three poses, 8 s dwell each
Scenario figure8_scenario(double period, double duration = 0.0);  // 0 -> one period
Scenario disturbance_scenario();                          // hover, 3 N / 0.3 s lateral pulse

}  // namespace tiltctl
