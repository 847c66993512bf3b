#pragma once

#include <functional>
#include <stdexcept>

#include <Eigen/Core>

#include "tiltctl/geometry.hpp"
#include "tiltctl/robot_params.hpp"

namespace tiltctl {

/// Raised when an integration or linearization step produces non-finite values.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Control-model state: x = [p, v, q, omega, alpha], world ENU / body FLU.
struct State {
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();
  Eigen::Vector3d vel = Eigen::Vector3d::Zero();
  Quat quat = Quat(1, 0, 0, 0);
  Eigen::Vector3d rate = Eigen::Vector3d::Zero();       // body frame
  Eigen::VectorXd servo = Eigen::VectorXd::Zero(4);     // tilt angles, length N_p
};

/// Control input: u = [f_c, alpha_c].
struct Input {
  Eigen::VectorXd thrust_cmd = Eigen::VectorXd::Zero(4);  // N
  Eigen::VectorXd servo_cmd = Eigen::VectorXd::Zero(4);   // rad

  Eigen::VectorXd to_vec() const;
  static Input from_vec(const Eigen::VectorXd& u);
};

struct Wrench {
  Eigen::Vector3d force = Eigen::Vector3d::Zero();   // body frame, N
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();  // body frame, N m
};

struct Disturbance {
  Eigen::Vector3d force_w = Eigen::Vector3d::Zero();   // world frame, N
  Eigen::Vector3d torque_b = Eigen::Vector3d::Zero();  // body frame, N m
};

/// Prediction-model family. All variants keep u = [f_c, alpha_c]; they differ
/// in which actuators carry first-order lag states:
///   servo_state=false, thrust_state=false -> 13 states, commands act instantly
///   servo_state=true,  thrust_state=false -> 17 states (the control model)
///   servo_state=true,  thrust_state=true  -> 21 states (plant / ablation model)
struct ModelLayout {
  int rotor_count = 4;
  bool servo_state = true;
  bool thrust_state = false;

  static constexpr int kPos = 0;
  static constexpr int kVel = 3;
  static constexpr int kQuat = 6;
  static constexpr int kRate = 10;
  static constexpr int kRigidBody = 13;

  int servo_offset() const { return kRigidBody; }
  int thrust_offset() const { return kRigidBody + (servo_state ? rotor_count : 0); }
  int nx() const
  {
    return kRigidBody + (servo_state ? rotor_count : 0) + (thrust_state ? rotor_count : 0);
  }
  int nu() const { return 2 * rotor_count; }

  Eigen::VectorXd pack(const State& s) const;         // thrust states (if any) zero-filled
  State unpack(const Eigen::VectorXd& x) const;       // drops thrust states
};

/// Resultant body wrench of all rotors for tilt angles `alpha` and thrusts `f`
/// (propeller gyroscopic torque neglected).
Wrench rotor_wrench(const Eigen::VectorXd& alpha, const Eigen::VectorXd& f,
                    const RobotParams& params);

/// Wrench partial derivatives: 3 x N_p blocks per output, d{force,torque}/d{alpha,f}.
struct WrenchJacobian {
  Eigen::Matrix<double, 3, Eigen::Dynamic> df_dalpha, df_dthrust;
  Eigen::Matrix<double, 3, Eigen::Dynamic> dtau_dalpha, dtau_dthrust;
};
WrenchJacobian rotor_wrench_jac(const Eigen::VectorXd& alpha, const Eigen::VectorXd& f,
                                const RobotParams& params);

/// Full 17-dim continuous state derivative of the control model.
/// Throws std::invalid_argument if |1 - ||q||| > 1e-6.
Eigen::VectorXd control_deriv(const State& x, const Input& u, const Disturbance& d,
                              const RobotParams& params);

/// Continuous derivative for any layout, raw-vector form (no quaternion check).
void eval_deriv(const ModelLayout& layout, const RobotParams& params,
                const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                const Disturbance& d, Eigen::VectorXd& xdot);

/// Continuous derivative plus analytic Jacobians d(xdot)/dx and d(xdot)/du.
void eval_deriv_jac(const ModelLayout& layout, const RobotParams& params,
                    const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                    const Disturbance& d, Eigen::VectorXd& xdot,
                    Eigen::MatrixXd& jx, Eigen::MatrixXd& ju);

/// One classic RK4 update of an arbitrary ODE right-hand side. If
/// `quat_offset` >= 0 the 4 components starting there are renormalized to unit
/// norm afterwards. Throws NumericalError on a non-finite result.
Eigen::VectorXd rk4_step(const Eigen::VectorXd& x, double h,
                         const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& deriv,
                         int quat_offset = -1);

/// Discrete-time map over one interval `h` (split into `substeps` equal parts):
/// rigid-body states advance by classic RK4 while first-order actuator states
/// follow their exact exponential response, sampled at the RK4 stage times.
/// Unconditionally stable in the actuator time constants; the quaternion is
/// renormalized at the end unless `renormalize` is false.
Eigen::VectorXd discrete_step(const ModelLayout& layout, const RobotParams& params,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                              const Disturbance& d, double h, int substeps = 1,
                              bool renormalize = true);

/// The raw discrete map (no final renormalization) plus its exact
/// sensitivities. A is nx x nx, B is nx x nu.
void discrete_step_sens(const ModelLayout& layout, const RobotParams& params,
                        const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                        const Disturbance& d, double h, int substeps,
                        Eigen::VectorXd& x_next, Eigen::MatrixXd& a, Eigen::MatrixXd& b);

}  // namespace tiltctl
