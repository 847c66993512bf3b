#include "tiltctl/refgen.hpp"

#include <cmath>

namespace tiltctl {
namespace {

struct FactorQuat {
  Quat q, dq;  // value and derivative w.r.t. the angle
};

FactorQuat axis_factor(int axis, double theta)
{
  FactorQuat f;
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  f.q.setZero();
  f.dq.setZero();
  f.q[0] = c;
  f.q[1 + axis] = s;
  f.dq[0] = -0.5 * s;
  f.dq[1 + axis] = 0.5 * c;
  return f;
}

struct QuatPath {
  Quat q, qd, qdd;
};

// q(t) = qz(yaw) o qy(pitch) o qx(roll) with all factors functions of t;
// second factor derivatives use d^2 q_axis / d theta^2 = -q_axis / 4.
QuatPath rpy_quat_path(const Eigen::Vector3d& rpy, const Eigen::Vector3d& rpy_rate,
                       const Eigen::Vector3d& rpy_acc)
{
  const FactorQuat fx = axis_factor(0, rpy[0]);
  const FactorQuat fy = axis_factor(1, rpy[1]);
  const FactorQuat fz = axis_factor(2, rpy[2]);
  const double rd = rpy_rate[0], pd = rpy_rate[1], yd = rpy_rate[2];
  const double rdd = rpy_acc[0], pdd = rpy_acc[1], ydd = rpy_acc[2];

  QuatPath out;
  out.q = quat_mul(fz.q, quat_mul(fy.q, fx.q));
  out.qd = quat_mul(fz.dq, quat_mul(fy.q, fx.q)) * yd +
           quat_mul(fz.q, quat_mul(fy.dq, fx.q)) * pd +
           quat_mul(fz.q, quat_mul(fy.q, fx.dq)) * rd;
  out.qdd = quat_mul(fz.q, quat_mul(fy.q, fx.q)) * (-0.25) * (yd * yd + pd * pd + rd * rd) +
            quat_mul(fz.dq, quat_mul(fy.q, fx.q)) * ydd +
            quat_mul(fz.q, quat_mul(fy.dq, fx.q)) * pdd +
            quat_mul(fz.q, quat_mul(fy.q, fx.dq)) * rdd +
            2.0 * (quat_mul(fz.dq, quat_mul(fy.dq, fx.q)) * (yd * pd) +
                   quat_mul(fz.dq, quat_mul(fy.q, fx.dq)) * (yd * rd) +
                   quat_mul(fz.q, quat_mul(fy.dq, fx.dq)) * (pd * rd));
  return out;
}

State make_ref_state(const Eigen::Vector3d& pos, const Eigen::Vector3d& vel, const Quat& q,
                     const Eigen::Vector3d& omega, const Eigen::VectorXd& alpha)
{
  State s;
  s.pos = pos;
  s.vel = vel;
  s.quat = q;
  s.rate = omega;
  s.servo = alpha;
  return s;
}

}  // namespace

void rpy_path_rates(const Eigen::Vector3d& rpy, const Eigen::Vector3d& rpy_rate,
                    const Eigen::Vector3d& rpy_acc, Eigen::Vector3d& omega_body,
                    Eigen::Vector3d& omega_dot_body)
{
  const QuatPath path = rpy_quat_path(rpy, rpy_rate, rpy_acc);
  omega_body = 2.0 * quat_mul(quat_conj(path.q), path.qd).tail<3>();
  omega_dot_body = 2.0 * (quat_mul(quat_conj(path.qd), path.qd) +
                          quat_mul(quat_conj(path.q), path.qdd))
                             .tail<3>();
}

ReferenceWindow setpoint_window(const PoseTarget& target, const RobotParams& params,
                                const AllocationMap& map, int horizon, double dt)
{
  (void)dt;
  Wrench w;
  w.force = quat_to_rot(target.quat).transpose() *
            Eigen::Vector3d(0, 0, params.mass * params.gravity);
  const AllocationResult alloc = allocate(map, w, params);

  const State x = make_ref_state(target.pos, Eigen::Vector3d::Zero(), target.quat,
                                 Eigen::Vector3d::Zero(), alloc.angle);
  Input u;
  u.thrust_cmd = alloc.thrust;
  u.servo_cmd = alloc.angle;

  ReferenceWindow win;
  win.x.assign(horizon + 1, x);
  win.u.assign(horizon, u);
  win.saturated = alloc.saturated;
  return win;
}

ReferenceWindow trajectory_window(const PoseTrajectory& traj, double t_now,
                                  const RobotParams& params, const AllocationMap& map,
                                  int horizon, double dt)
{
  ReferenceWindow win;
  win.x.reserve(horizon + 1);
  win.u.reserve(horizon);
  const Eigen::Vector3d gravity_up(0, 0, params.gravity);

  for (int k = 0; k <= horizon; ++k) {
    const double t = t_now + k * dt;
    const Quat q = rpy_to_quat(traj.rpy(t));
    Eigen::Vector3d omega, omega_dot;
    rpy_path_rates(traj.rpy(t), traj.rpy_rate(t), traj.rpy_acc(t), omega, omega_dot);

    Wrench w;
    w.force = quat_to_rot(q).transpose() * (params.mass * (traj.acc(t) + gravity_up));
    w.torque = params.inertia_diag.cwiseProduct(omega_dot);
    const AllocationResult alloc = allocate(map, w, params);
    win.saturated = win.saturated || alloc.saturated;

    win.x.push_back(make_ref_state(traj.pos(t), traj.vel(t), q, omega, alloc.angle));
    if (k < horizon) {
      Input u;
      u.thrust_cmd = alloc.thrust;
      u.servo_cmd = alloc.angle;
      win.u.push_back(u);
    }
  }
  return win;
}

PoseTrajectory build_figure8(double period)
{
  PoseTrajectory traj;
  traj.period = period;
  const double w = 2.0 * M_PI / period;
  traj.pos = [w](double t) {
    return Eigen::Vector3d(std::cos(w * t), 0.5 * std::sin(2 * w * t),
                           0.3 * std::sin(2 * w * t + M_PI / 2) + 1.0);
  };
  traj.vel = [w](double t) {
    return Eigen::Vector3d(-w * std::sin(w * t), w * std::cos(2 * w * t),
                           0.6 * w * std::cos(2 * w * t + M_PI / 2));
  };
  traj.acc = [w](double t) {
    return Eigen::Vector3d(-w * w * std::cos(w * t), -2 * w * w * std::sin(2 * w * t),
                           -1.2 * w * w * std::sin(2 * w * t + M_PI / 2));
  };
  traj.rpy = [w](double t) {
    return Eigen::Vector3d(-0.5 * std::sin(2 * w * t), 0.5 * std::cos(w * t),
                           M_PI / 2 * std::sin(w * t + M_PI) + M_PI / 2);
  };
  traj.rpy_rate = [w](double t) {
    return Eigen::Vector3d(-w * std::cos(2 * w * t), -0.5 * w * std::sin(w * t),
                           M_PI / 2 * w * std::cos(w * t + M_PI));
  };
  traj.rpy_acc = [w](double t) {
    return Eigen::Vector3d(2 * w * w * std::sin(2 * w * t), -0.5 * w * w * std::cos(w * t),
                           -M_PI / 2 * w * w * std::sin(w * t + M_PI));
  };
  return traj;
}

PoseTrajectory constant_pose_trajectory(const PoseTarget& target)
{
  PoseTrajectory traj;
  const Eigen::Vector3d pos = target.pos;
  const Eigen::Vector3d rpy = quat_to_rpy(target.quat);
  auto zero = [](double) { return Eigen::Vector3d::Zero().eval(); };
  traj.pos = [pos](double) { return pos; };
  traj.vel = zero;
  traj.acc = zero;
  traj.rpy = [rpy](double) { return rpy; };
  traj.rpy_rate = zero;
  traj.rpy_acc = zero;
  return traj;
}

}  // namespace tiltctl
