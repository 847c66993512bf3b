#include "tiltctl/model.hpp"

#include <cmath>

#include <Eigen/Geometry>

namespace tiltctl {
namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v)
{
  Eigen::Matrix3d m;
  // clang-format off
  m <<     0, -v[2],  v[1],
        v[2],     0, -v[0],
       -v[1],  v[0],     0;
  // clang-format on
  return m;
}

// Thrust axis of rotor i in the body frame: R_Z(gamma_i) R_X(alpha_i) e_z.
Eigen::Vector3d rotor_axis(double gamma, double alpha)
{
  const double sg = std::sin(gamma), cg = std::cos(gamma);
  const double sa = std::sin(alpha), ca = std::cos(alpha);
  return {sg * sa, -cg * sa, ca};
}

Eigen::Vector3d rotor_axis_dalpha(double gamma, double alpha)
{
  const double sg = std::sin(gamma), cg = std::cos(gamma);
  const double sa = std::sin(alpha), ca = std::cos(alpha);
  return {sg * ca, -cg * ca, -sa};
}

// d(R(q) f) / dq, 3x4 with q = [w, u].
Eigen::Matrix<double, 3, 4> rot_times_vec_jac(const Quat& q, const Eigen::Vector3d& f)
{
  const double w = q[0];
  const Eigen::Vector3d u = q.tail<3>();
  Eigen::Matrix<double, 3, 4> j;
  j.col(0) = 2.0 * (w * f + u.cross(f));
  j.rightCols<3>() =
      2.0 * (-f * u.transpose() + u * f.transpose() + u.dot(f) * Eigen::Matrix3d::Identity() -
             w * skew(f));
  return j;
}

// Rigid-body derivative g(y, alpha, f) and optional Jacobians. y = [p v q w].
struct RigidBodyEval {
  Eigen::Matrix<double, 13, 1> ydot;
  Eigen::Matrix<double, 13, 13> g_y;
  Eigen::Matrix<double, 13, Eigen::Dynamic> g_alpha;   // 13 x N_p
  Eigen::Matrix<double, 13, Eigen::Dynamic> g_thrust;  // 13 x N_p
};

void eval_rigid_body(const RobotParams& params, const Eigen::Matrix<double, 13, 1>& y,
                     const Eigen::VectorXd& alpha, const Eigen::VectorXd& thrust,
                     const Disturbance& d, bool want_jac, RigidBodyEval& out)
{
  const Eigen::Vector3d vel = y.segment<3>(3);
  const Quat q = y.segment<4>(6);
  const Eigen::Vector3d omega = y.segment<3>(10);
  const Eigen::Vector3d inertia = params.inertia_diag;

  const Wrench w = rotor_wrench(alpha, thrust, params);

  out.ydot.segment<3>(0) = vel;
  out.ydot.segment<3>(3) =
      (quat_rotate(q, w.force) + d.force_w) / params.mass + Eigen::Vector3d(0, 0, -params.gravity);
  out.ydot.segment<4>(6) = 0.5 * quat_mul(q, Quat(0, omega[0], omega[1], omega[2]));
  const Eigen::Vector3d ang_mom = inertia.cwiseProduct(omega);
  out.ydot.segment<3>(10) =
      (-omega.cross(ang_mom) + w.torque + d.torque_b).cwiseQuotient(inertia);

  if (!want_jac) return;

  const int np = params.rotor_count;
  const Eigen::Matrix3d r = quat_to_rot(q);
  const Eigen::Vector3d inv_inertia = inertia.cwiseInverse();
  const WrenchJacobian wj = rotor_wrench_jac(alpha, thrust, params);

  out.g_y.setZero();
  out.g_y.block<3, 3>(0, 3).setIdentity();
  out.g_y.block<3, 4>(3, 6) = rot_times_vec_jac(q, w.force) / params.mass;
  out.g_y.block<4, 4>(6, 6) = 0.5 * quat_rmat(Quat(0, omega[0], omega[1], omega[2]));
  out.g_y.block<4, 3>(6, 10) = 0.5 * quat_lmat(q).rightCols<3>();
  out.g_y.block<3, 3>(10, 10) =
      inv_inertia.asDiagonal() * (-skew(omega) * inertia.asDiagonal().toDenseMatrix() +
                                  skew(ang_mom));

  out.g_alpha.setZero(13, np);
  out.g_thrust.setZero(13, np);
  out.g_alpha.middleRows<3>(3) = r * wj.df_dalpha / params.mass;
  out.g_thrust.middleRows<3>(3) = r * wj.df_dthrust / params.mass;
  out.g_alpha.middleRows<3>(10) = inv_inertia.asDiagonal() * wj.dtau_dalpha;
  out.g_thrust.middleRows<3>(10) = inv_inertia.asDiagonal() * wj.dtau_dthrust;
}

}  // namespace

Eigen::VectorXd Input::to_vec() const
{
  Eigen::VectorXd u(thrust_cmd.size() + servo_cmd.size());
  u << thrust_cmd, servo_cmd;
  return u;
}

Input Input::from_vec(const Eigen::VectorXd& u)
{
  const int np = static_cast<int>(u.size()) / 2;
  Input in;
  in.thrust_cmd = u.head(np);
  in.servo_cmd = u.tail(np);
  return in;
}

Eigen::VectorXd ModelLayout::pack(const State& s) const
{
  Eigen::VectorXd x = Eigen::VectorXd::Zero(nx());
  x.segment<3>(kPos) = s.pos;
  x.segment<3>(kVel) = s.vel;
  x.segment<4>(kQuat) = s.quat;
  x.segment<3>(kRate) = s.rate;
  if (servo_state) x.segment(servo_offset(), rotor_count) = s.servo.head(rotor_count);
  return x;
}

State ModelLayout::unpack(const Eigen::VectorXd& x) const
{
  State s;
  s.pos = x.segment<3>(kPos);
  s.vel = x.segment<3>(kVel);
  s.quat = x.segment<4>(kQuat);
  s.rate = x.segment<3>(kRate);
  s.servo = servo_state ? x.segment(servo_offset(), rotor_count).eval()
                        : Eigen::VectorXd::Zero(rotor_count);
  return s;
}

Wrench rotor_wrench(const Eigen::VectorXd& alpha, const Eigen::VectorXd& f,
                    const RobotParams& params)
{
  Wrench w;
  for (int i = 0; i < params.rotor_count; ++i) {
    const Eigen::Vector3d axis = rotor_axis(params.arm_azimuth[i], alpha[i]);
    const Eigen::Vector3d fi = f[i] * axis;
    w.force += fi;
    w.torque += -params.spin_dir[i] * params.torque_ratio * fi + params.rotor_pos[i].cross(fi);
  }
  return w;
}

WrenchJacobian rotor_wrench_jac(const Eigen::VectorXd& alpha, const Eigen::VectorXd& f,
                                const RobotParams& params)
{
  const int np = params.rotor_count;
  WrenchJacobian j;
  j.df_dalpha.setZero(3, np);
  j.df_dthrust.setZero(3, np);
  j.dtau_dalpha.setZero(3, np);
  j.dtau_dthrust.setZero(3, np);
  for (int i = 0; i < np; ++i) {
    const Eigen::Vector3d axis = rotor_axis(params.arm_azimuth[i], alpha[i]);
    const Eigen::Vector3d daxis = rotor_axis_dalpha(params.arm_azimuth[i], alpha[i]);
    const double kq = params.spin_dir[i] * params.torque_ratio;
    j.df_dalpha.col(i) = f[i] * daxis;
    j.df_dthrust.col(i) = axis;
    j.dtau_dalpha.col(i) = f[i] * (-kq * daxis + params.rotor_pos[i].cross(daxis));
    j.dtau_dthrust.col(i) = -kq * axis + params.rotor_pos[i].cross(axis);
  }
  return j;
}

Eigen::VectorXd control_deriv(const State& x, const Input& u, const Disturbance& d,
                              const RobotParams& params)
{
  if (std::abs(x.quat.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("control_deriv: quaternion norm deviates by more than 1e-6");
  ModelLayout layout;
  layout.rotor_count = params.rotor_count;
  Eigen::VectorXd xdot;
  eval_deriv(layout, params, layout.pack(x), u.to_vec(), d, xdot);
  return xdot;
}

void eval_deriv(const ModelLayout& layout, const RobotParams& params,
                const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                const Disturbance& d, Eigen::VectorXd& xdot)
{
  const int np = layout.rotor_count;
  const Eigen::VectorXd alpha =
      layout.servo_state ? x.segment(layout.servo_offset(), np).eval() : u.tail(np).eval();
  const Eigen::VectorXd thrust =
      layout.thrust_state ? x.segment(layout.thrust_offset(), np).eval() : u.head(np).eval();

  RigidBodyEval rb;
  eval_rigid_body(params, x.head<13>(), alpha, thrust, d, false, rb);

  xdot.resize(layout.nx());
  xdot.head<13>() = rb.ydot;
  if (layout.servo_state)
    xdot.segment(layout.servo_offset(), np) = (u.tail(np) - alpha) / params.t_servo;
  if (layout.thrust_state)
    xdot.segment(layout.thrust_offset(), np) = (u.head(np) - thrust) / params.t_thrust;
}

void eval_deriv_jac(const ModelLayout& layout, const RobotParams& params,
                    const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                    const Disturbance& d, Eigen::VectorXd& xdot,
                    Eigen::MatrixXd& jx, Eigen::MatrixXd& ju)
{
  const int np = layout.rotor_count;
  const int nx = layout.nx();
  const int nu = layout.nu();
  const Eigen::VectorXd alpha =
      layout.servo_state ? x.segment(layout.servo_offset(), np).eval() : u.tail(np).eval();
  const Eigen::VectorXd thrust =
      layout.thrust_state ? x.segment(layout.thrust_offset(), np).eval() : u.head(np).eval();

  RigidBodyEval rb;
  rb.g_alpha.resize(13, np);
  rb.g_thrust.resize(13, np);
  eval_rigid_body(params, x.head<13>(), alpha, thrust, d, true, rb);

  xdot.resize(nx);
  jx.setZero(nx, nx);
  ju.setZero(nx, nu);

  xdot.head<13>() = rb.ydot;
  jx.topLeftCorner<13, 13>() = rb.g_y;

  if (layout.servo_state) {
    const int so = layout.servo_offset();
    jx.block(0, so, 13, np) = rb.g_alpha;
    jx.block(so, so, np, np).diagonal().setConstant(-1.0 / params.t_servo);
    ju.block(so, np, np, np).diagonal().setConstant(1.0 / params.t_servo);
    xdot.segment(so, np) = (u.tail(np) - alpha) / params.t_servo;
  } else {
    ju.block(0, np, 13, np) = rb.g_alpha;
  }

  if (layout.thrust_state) {
    const int to = layout.thrust_offset();
    jx.block(0, to, 13, np) = rb.g_thrust;
    jx.block(to, to, np, np).diagonal().setConstant(-1.0 / params.t_thrust);
    ju.block(to, 0, np, np).diagonal().setConstant(1.0 / params.t_thrust);
    xdot.segment(to, np) = (u.head(np) - thrust) / params.t_thrust;
  } else {
    ju.block(0, 0, 13, np) = rb.g_thrust;
  }
}

Eigen::VectorXd rk4_step(const Eigen::VectorXd& x, double h,
                         const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& deriv,
                         int quat_offset)
{
  const Eigen::VectorXd k1 = deriv(x);
  const Eigen::VectorXd k2 = deriv(x + 0.5 * h * k1);
  const Eigen::VectorXd k3 = deriv(x + 0.5 * h * k2);
  const Eigen::VectorXd k4 = deriv(x + h * k3);
  Eigen::VectorXd out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) throw NumericalError("rk4_step: non-finite state");
  if (quat_offset >= 0) out.segment<4>(quat_offset).normalize();
  return out;
}

namespace {

struct ActuatorChannels {
  // Concatenated first-order channels: [servo block][thrust block], each N_p wide.
  int n = 0;
  int servo_begin = -1, thrust_begin = -1;  // offsets inside the concatenation
  Eigen::VectorXd tau;                      // per channel
  Eigen::VectorXd cmd;                      // command value per channel (from u)

  Eigen::VectorXd decay(double s) const { return (-s / tau.array()).exp().matrix(); }
};

ActuatorChannels make_channels(const ModelLayout& layout, const RobotParams& params,
                               const Eigen::VectorXd& u)
{
  const int np = layout.rotor_count;
  ActuatorChannels ch;
  ch.n = (layout.servo_state ? np : 0) + (layout.thrust_state ? np : 0);
  ch.tau.resize(ch.n);
  ch.cmd.resize(ch.n);
  int at = 0;
  if (layout.servo_state) {
    ch.servo_begin = at;
    ch.tau.segment(at, np).setConstant(params.t_servo);
    ch.cmd.segment(at, np) = u.tail(np);
    at += np;
  }
  if (layout.thrust_state) {
    ch.thrust_begin = at;
    ch.tau.segment(at, np).setConstant(params.t_thrust);
    ch.cmd.segment(at, np) = u.head(np);
  }
  return ch;
}

constexpr double kStageTime[4] = {0.0, 0.5, 0.5, 1.0};
constexpr double kStageWeight[4] = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};

}  // namespace

Eigen::VectorXd discrete_step(const ModelLayout& layout, const RobotParams& params,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                              const Disturbance& d, double h, int substeps, bool renormalize)
{
  const int np = layout.rotor_count;
  const double hs = h / substeps;
  const ActuatorChannels ch = make_channels(layout, params, u);

  Eigen::VectorXd cur = x;
  RigidBodyEval rb;
  for (int step = 0; step < substeps; ++step) {
    const Eigen::VectorXd act0 = cur.tail(ch.n);
    auto act_at = [&](double s) -> Eigen::VectorXd {
      return ch.cmd + (act0 - ch.cmd).cwiseProduct(ch.decay(s));
    };

    Eigen::Matrix<double, 13, 1> y = cur.head<13>();
    Eigen::Matrix<double, 13, 1> accum = Eigen::Matrix<double, 13, 1>::Zero();
    Eigen::Matrix<double, 13, 1> k = Eigen::Matrix<double, 13, 1>::Zero();
    for (int i = 0; i < 4; ++i) {
      const double s = kStageTime[i] * hs;
      const Eigen::VectorXd act = ch.n > 0 ? act_at(s) : Eigen::VectorXd();
      const Eigen::VectorXd alpha =
          layout.servo_state ? act.segment(ch.servo_begin, np).eval() : u.tail(np).eval();
      const Eigen::VectorXd thrust =
          layout.thrust_state ? act.segment(ch.thrust_begin, np).eval() : u.head(np).eval();
      eval_rigid_body(params, y + kStageTime[i] * hs * k, alpha, thrust, d, false, rb);
      k = rb.ydot;
      accum += kStageWeight[i] * k;
    }
    cur.head<13>() += hs * accum;
    if (ch.n > 0) cur.tail(ch.n) = act_at(hs);
  }
  if (!cur.allFinite()) throw NumericalError("discrete_step: non-finite state");
  if (renormalize) cur.segment<4>(ModelLayout::kQuat).normalize();
  return cur;
}

void discrete_step_sens(const ModelLayout& layout, const RobotParams& params,
                        const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                        const Disturbance& d, double h, int substeps,
                        Eigen::VectorXd& x_next, Eigen::MatrixXd& a, Eigen::MatrixXd& b)
{
  const int np = layout.rotor_count;
  const int nx = layout.nx();
  const int nu = layout.nu();
  const double hs = h / substeps;
  const ActuatorChannels ch = make_channels(layout, params, u);
  const int na = ch.n;

  a = Eigen::MatrixXd::Identity(nx, nx);
  b = Eigen::MatrixXd::Zero(nx, nu);

  Eigen::VectorXd cur = x;
  RigidBodyEval rb;
  rb.g_alpha.resize(13, np);
  rb.g_thrust.resize(13, np);

  Eigen::MatrixXd a_sub(nx, nx), b_sub(nx, nu);
  // Stage derivatives of k_i w.r.t. (y0, act0, u).
  Eigen::Matrix<double, 13, 13> dk_dy, sum_dy;
  Eigen::MatrixXd dk_da(13, na), sum_da(13, na);
  Eigen::MatrixXd dk_du(13, nu), sum_du(13, nu);

  for (int step = 0; step < substeps; ++step) {
    const Eigen::VectorXd act0 = cur.tail(na);
    auto act_at = [&](double s) -> Eigen::VectorXd {
      return ch.cmd + (act0 - ch.cmd).cwiseProduct(ch.decay(s));
    };

    Eigen::Matrix<double, 13, 1> y = cur.head<13>();
    Eigen::Matrix<double, 13, 1> accum = Eigen::Matrix<double, 13, 1>::Zero();
    Eigen::Matrix<double, 13, 1> k = Eigen::Matrix<double, 13, 1>::Zero();
    sum_dy.setZero();
    sum_da.setZero();
    sum_du.setZero();
    dk_dy.setZero();
    dk_da.setZero();
    dk_du.setZero();

    for (int i = 0; i < 4; ++i) {
      const double c = kStageTime[i];
      const double s = c * hs;
      const Eigen::VectorXd act = na > 0 ? act_at(s) : Eigen::VectorXd();
      const Eigen::VectorXd decay = na > 0 ? ch.decay(s) : Eigen::VectorXd();
      const Eigen::VectorXd alpha =
          layout.servo_state ? act.segment(ch.servo_begin, np).eval() : u.tail(np).eval();
      const Eigen::VectorXd thrust =
          layout.thrust_state ? act.segment(ch.thrust_begin, np).eval() : u.head(np).eval();

      eval_rigid_body(params, y + c * hs * k, alpha, thrust, d, true, rb);

      // Chain through the stage state y_i = y0 + c*hs*k_{i-1}.
      dk_dy = rb.g_y * (Eigen::Matrix<double, 13, 13>::Identity() + c * hs * dk_dy);
      dk_da = rb.g_y * (c * hs * dk_da);
      dk_du = rb.g_y * (c * hs * dk_du);
      if (layout.servo_state) {
        const auto e = decay.segment(ch.servo_begin, np);
        dk_da.middleCols(ch.servo_begin, np) += rb.g_alpha * e.asDiagonal();
        dk_du.rightCols(np) +=
            rb.g_alpha * (Eigen::VectorXd::Ones(np) - e).asDiagonal();
      } else {
        dk_du.rightCols(np) += rb.g_alpha;
      }
      if (layout.thrust_state) {
        const auto e = decay.segment(ch.thrust_begin, np);
        dk_da.middleCols(ch.thrust_begin, np) += rb.g_thrust * e.asDiagonal();
        dk_du.leftCols(np) +=
            rb.g_thrust * (Eigen::VectorXd::Ones(np) - e).asDiagonal();
      } else {
        dk_du.leftCols(np) += rb.g_thrust;
      }

      k = rb.ydot;
      accum += kStageWeight[i] * k;
      sum_dy += kStageWeight[i] * dk_dy;
      sum_da += kStageWeight[i] * dk_da;
      sum_du += kStageWeight[i] * dk_du;
    }

    a_sub.setZero(nx, nx);
    b_sub.setZero(nx, nu);
    a_sub.topLeftCorner<13, 13>() =
        Eigen::Matrix<double, 13, 13>::Identity() + hs * sum_dy;
    if (na > 0) {
      const Eigen::VectorXd e_end = ch.decay(hs);
      a_sub.topRightCorner(13, na) = hs * sum_da;
      a_sub.bottomRightCorner(na, na) = e_end.asDiagonal();
      if (layout.servo_state) {
        const int row = 13 + ch.servo_begin;
        b_sub.block(row, np, np, np) =
            (Eigen::VectorXd::Ones(np) - e_end.segment(ch.servo_begin, np)).asDiagonal();
      }
      if (layout.thrust_state) {
        const int row = 13 + ch.thrust_begin;
        b_sub.block(row, 0, np, np) =
            (Eigen::VectorXd::Ones(np) - e_end.segment(ch.thrust_begin, np)).asDiagonal();
      }
    }
    b_sub.topRows<13>() = hs * sum_du;

    cur.head<13>() += hs * accum;
    if (na > 0) cur.tail(na) = act_at(hs);

    a = a_sub * a;
    b = a_sub * b + b_sub;
  }

  if (!cur.allFinite() || !a.allFinite() || !b.allFinite())
    throw NumericalError("discrete_step_sens: non-finite result");
  x_next = cur;
}

}  // namespace tiltctl
