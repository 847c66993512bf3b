#pragma once

#include <vector>

#include "tiltctl/alloc.hpp"
#include "tiltctl/boxqp.hpp"
#include "tiltctl/model.hpp"
#include "tiltctl/refgen.hpp"

namespace tiltctl {

/// Diagonal least-squares weights. The state block covers position, velocity,
/// attitude-error vector, body rate and (when the model carries them) servo
/// angles; thrust lag states are unweighted. Terminal weights are the stage
/// state weights scaled by `terminal_scale`.
struct OcpWeights {
  double q_pos_xy = 300.0, q_pos_z = 400.0;
  double q_vel_xy = 10.0, q_vel_z = 10.0;
  double q_att_xy = 300.0, q_att_z = 600.0;
  double q_rate_xy = 5.0, q_rate_z = 5.0;
  double q_servo = 2.0;
  double r_thrust = 2.0;
  double r_servo_cmd = 250.0;
  double terminal_scale = 1.0;

  Eigen::VectorXd state_diag(const ModelLayout& layout) const;  // residual-space
  Eigen::VectorXd input_diag(int rotor_count) const;
  void validate() const;
};

struct OcpConfig {
  int horizon = 20;
  double t_integ = 0.1;       // shooting interval, s
  int integ_substeps = 2;     // RK4 substeps per interval
  double v_limit = 1.0;       // m/s, per-axis soft bound
  double omega_limit = 6.0;   // rad/s, per-axis soft bound
  double soft_state_weight = 1e4;
  double qp_tol = 1e-8;
  int qp_max_iter = 200;
  void validate() const;
};

struct WarmStart {
  std::vector<Eigen::VectorXd> x;  // N+1 states, model layout
  std::vector<Eigen::VectorXd> u;  // N inputs, [f_c, alpha_c]
};

enum class SolveStatus { kOk, kQpMaxIter, kDiverged };

struct SolveResult {
  Input u_now;
  std::vector<Eigen::VectorXd> x_pred;  // N+1 updated states
  std::vector<Eigen::VectorXd> u_pred;  // N updated inputs
  int qp_iterations = 0;
  double kkt_residual = 0.0;
  double qp_objective = 0.0;  // condensed QP objective at the step (0 at zero step)
  double cost = 0.0;          // nonlinear least-squares cost at the update
  double solve_time_ms = 0.0;
  SolveStatus status = SolveStatus::kOk;
};

/// Weighted stage residual [sqrt(Q) x_err; sqrt(R) u_err]. The servo-command
/// error is alpha_c - alpha (current state) when the model carries servo
/// states, alpha_c - alpha_r otherwise; the thrust-command error mirrors that
/// for thrust states. Attitude error is the shortest-rotation quaternion
/// vector part.
Eigen::VectorXd stage_residual(const ModelLayout& layout, const OcpWeights& weights,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                               const State& x_ref, const Input& u_ref);

/// One discrete shooting step with exact sensitivities of the map
/// (thin wrapper over discrete_step_sens with the OCP disturbance convention).
void linearize_dynamics(const ModelLayout& layout, const RobotParams& params,
                        const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                        const Eigen::Vector3d& dist_force_w, double t_integ, int substeps,
                        Eigen::VectorXd& x_next, Eigen::MatrixXd& a, Eigen::MatrixXd& b);

/// Gauss-Newton real-time-iteration solver: one SQP iteration per call around
/// the warm start, multiple-shooting defects condensed onto the input
/// increments, hard input box constraints, soft quadratic-penalty velocity and
/// body-rate bounds, full step. An instance owns its workspace; use one
/// instance per thread.
class RtiSolver {
 public:
  RtiSolver(const RobotParams& params, const ModelLayout& layout, const OcpWeights& weights,
            const OcpConfig& config);

  SolveResult solve(const Eigen::VectorXd& x_hat, const ReferenceWindow& window,
                    const WarmStart& warm, const Eigen::Vector3d& dist_force_w);

  /// Guess for the first tick: the estimate repeated along the horizon with
  /// the reference attitude blended in, hover-allocated inputs.
  WarmStart cold_start(const Eigen::VectorXd& x_hat, const ReferenceWindow& window) const;

  /// Shift by one stage, duplicating the final stage.
  static WarmStart shift_warm_start(const SolveResult& result);

  /// Measurement vector in this model's layout (drops or augments blocks as
  /// needed; thrust states taken from `thrust_meas`).
  Eigen::VectorXd pack_measurement(const State& s, const Eigen::VectorXd& thrust_meas) const;

  const ModelLayout& layout() const { return layout_; }
  const OcpConfig& config() const { return config_; }
  const OcpWeights& weights() const { return weights_; }

 private:
  void stage_residual_lin(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                          const State& x_ref, const Input& u_ref, bool terminal,
                          Eigen::VectorXd& r, Eigen::MatrixXd& c, Eigen::MatrixXd& d) const;

  RobotParams params_;
  ModelLayout layout_;
  OcpWeights weights_;
  OcpConfig config_;
  AllocationMap alloc_;
  BoxQpSolver qp_;

  // workspace (sized in the constructor)
  std::vector<Eigen::MatrixXd> a_, b_;
  std::vector<Eigen::VectorXd> defect_;
  Eigen::MatrixXd h_, m_, m_tmp_;
  Eigen::VectorXd grad_, lb_, ub_;
};

}  // namespace tiltctl
