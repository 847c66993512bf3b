#include "tiltctl/model.hpp"

#include <cmath>
#include <random>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "tiltctl/plant.hpp"

using namespace tiltctl;

namespace {

RobotParams params() { return RobotParams::default_tiltquad(); }

Input hover_input(const RobotParams& p)
{
  Input u;
  u.thrust_cmd = Eigen::VectorXd::Constant(4, p.hover_thrust_per_rotor());
  u.servo_cmd = Eigen::VectorXd::Zero(4);
  return u;
}

Eigen::VectorXd random_state_vec(const ModelLayout& l, const RobotParams& p,
                                 std::mt19937_64& rng)
{
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(l.nx());
  for (int i = 0; i < 3; ++i) x[ModelLayout::kPos + i] = 2.0 * g(rng);
  for (int i = 0; i < 3; ++i) x[ModelLayout::kVel + i] = 0.8 * g(rng);
  Eigen::Vector4d q(g(rng), g(rng), g(rng), g(rng));
  x.segment<4>(ModelLayout::kQuat) = q.normalized();
  for (int i = 0; i < 3; ++i) x[ModelLayout::kRate + i] = 2.0 * g(rng);
  if (l.servo_state)
    for (int i = 0; i < l.rotor_count; ++i)
      x[l.servo_offset() + i] = p.servo_min + (p.servo_max - p.servo_min) * uni(rng);
  if (l.thrust_state)
    for (int i = 0; i < l.rotor_count; ++i)
      x[l.thrust_offset() + i] = p.thrust_min + (p.thrust_max - p.thrust_min) * uni(rng);
  return x;
}

Eigen::VectorXd random_input_vec(const RobotParams& p, std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Eigen::VectorXd u(2 * p.rotor_count);
  for (int i = 0; i < p.rotor_count; ++i)
    u[i] = p.thrust_min + (p.thrust_max - p.thrust_min) * uni(rng);
  for (int i = 0; i < p.rotor_count; ++i)
    u[p.rotor_count + i] = p.servo_min + (p.servo_max - p.servo_min) * uni(rng);
  return u;
}

}  // namespace

TEST(RotorWrench, SymmetricHover)
{
  const RobotParams p = params();
  const Eigen::VectorXd alpha = Eigen::VectorXd::Zero(4);
  const Eigen::VectorXd f = Eigen::VectorXd::Constant(4, p.mass * p.gravity / 4.0);
  const Wrench w = rotor_wrench(alpha, f, p);
  EXPECT_NEAR(w.force.z(), 27.203, 1e-3);  // m g for m = 2.773
  EXPECT_NEAR(w.force.z(), p.mass * p.gravity, 1e-12);
  EXPECT_LT(w.force.head<2>().norm(), 1e-12);
  EXPECT_LT(w.torque.norm(), 1e-12);  // alternating spin directions cancel
}

TEST(RotorWrench, SingleRotorForceAndTorque)
{
  const RobotParams p = params();
  const Eigen::VectorXd alpha = Eigen::VectorXd::Zero(4);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(4);
  f[0] = 1.0;
  const Wrench w = rotor_wrench(alpha, f, p);
  EXPECT_LT((w.force - Eigen::Vector3d(0, 0, 1)).norm(), 1e-12);
  const Eigen::Vector3d expected_torque =
      p.rotor_pos[0].cross(Eigen::Vector3d(0, 0, 1)) +
      Eigen::Vector3d(0, 0, -p.spin_dir[0] * p.torque_ratio);
  EXPECT_LT((w.torque - expected_torque).norm(), 1e-12);
  EXPECT_NEAR(w.torque.z(), 0.0153, 1e-12);  // d_1 = -1
}

TEST(RotorWrench, RightAngleTiltIsPurelyLateral)
{
  RobotParams p = params();
  p.rotor_count = 1;
  p.rotor_pos = {p.rotor_pos[0]};
  p.arm_azimuth = {p.arm_azimuth[0]};
  p.spin_dir = {-1};
  Eigen::VectorXd alpha(1), f(1);
  alpha << M_PI / 2.0;
  f << 2.0;
  const Wrench w = rotor_wrench(alpha, f, p);
  EXPECT_NEAR(w.force.z(), 0.0, 1e-12);
  EXPECT_NEAR(w.force.head<2>().norm(), 2.0, 1e-12);
}

TEST(RotorWrench, LinearInThrust)
{
  const RobotParams p = params();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd alpha(4), f(4);
    for (int k = 0; k < 4; ++k) {
      alpha[k] = (2 * uni(rng) - 1) * M_PI / 2;
      f[k] = 10 * uni(rng);
    }
    const double c = 3.0 * uni(rng);
    const Wrench w1 = rotor_wrench(alpha, f, p);
    const Wrench w2 = rotor_wrench(alpha, (c * f).eval(), p);
    EXPECT_LT((w2.force - c * w1.force).norm(), 1e-10);
    EXPECT_LT((w2.torque - c * w1.torque).norm(), 1e-10);
  }
}

TEST(ControlDeriv, HoverEquilibriumIsZero)
{
  const RobotParams p = params();
  const State x;  // identity pose, zero rates, zero tilt
  const Eigen::VectorXd xdot = control_deriv(x, hover_input(p), Disturbance{}, p);
  EXPECT_LT(xdot.cwiseAbs().maxCoeff(), 1e-13);
}

TEST(ControlDeriv, QuaternionKinematicsIdentityCase)
{
  const RobotParams p = params();
  State x;
  x.rate = Eigen::Vector3d(0, 0, 1);
  const Eigen::VectorXd xdot = control_deriv(x, hover_input(p), Disturbance{}, p);
  const Eigen::Vector4d qdot = xdot.segment<4>(ModelLayout::kQuat);
  EXPECT_LT((qdot - Eigen::Vector4d(0, 0, 0, 0.5)).norm(), 1e-14);
}

TEST(ControlDeriv, ServoFirstOrderRate)
{
  const RobotParams p = params();
  State x;
  Input u = hover_input(p);
  u.servo_cmd = Eigen::VectorXd::Constant(4, 1.0);
  const Eigen::VectorXd xdot = control_deriv(x, u, Disturbance{}, p);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(xdot[13 + i], 1.0 / 0.0859, 1e-12);
    EXPECT_NEAR(xdot[13 + i], 11.641, 1e-3);
  }
}

TEST(ControlDeriv, FreeFall)
{
  const RobotParams p = params();
  State x;
  Input u;
  u.thrust_cmd = Eigen::VectorXd::Zero(4);
  u.servo_cmd = Eigen::VectorXd::Zero(4);
  const Eigen::VectorXd xdot = control_deriv(x, u, Disturbance{}, p);
  EXPECT_DOUBLE_EQ(xdot[ModelLayout::kVel + 2], -p.gravity);
  EXPECT_DOUBLE_EQ(xdot[ModelLayout::kVel + 0], 0.0);
  EXPECT_DOUBLE_EQ(xdot[ModelLayout::kVel + 1], 0.0);
}

TEST(ControlDeriv, RejectsNonUnitQuaternion)
{
  const RobotParams p = params();
  State x;
  x.quat = Quat(1.1, 0, 0, 0);
  EXPECT_THROW(control_deriv(x, hover_input(p), Disturbance{}, p), std::invalid_argument);
}

TEST(Rk4Step, ServoClosedForm)
{
  const double tau = 0.0859;
  auto deriv = [tau](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, (1.0 - x[0]) / tau).eval();
  };
  Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
  x = rk4_step(x, 0.01, deriv);
  EXPECT_NEAR(x[0], 1.0 - std::exp(-0.01 / tau), 1e-6);
  EXPECT_NEAR(x[0], 0.109894, 2e-6);
}

TEST(Rk4Step, ZeroDerivativeIsIdentity)
{
  auto deriv = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()).eval(); };
  Eigen::VectorXd x(3);
  x << 1.5, -2.0, 0.25;
  const Eigen::VectorXd out = rk4_step(x, 0.1, deriv);
  EXPECT_EQ(out, x);
}

TEST(Rk4Step, FourthOrderConvergenceOnServoSubsystem)
{
  const double tau = 0.0859;
  auto deriv = [tau](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, (1.0 - x[0]) / tau).eval();
  };
  const double t_end = 0.2;
  auto global_error = [&](double h) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
    const int steps = static_cast<int>(std::lround(t_end / h));
    for (int i = 0; i < steps; ++i) x = rk4_step(x, h, deriv);
    return std::abs(x[0] - (1.0 - std::exp(-t_end / tau)));
  };
  const double e4 = global_error(0.04), e2 = global_error(0.02), e1 = global_error(0.01);
  EXPECT_GE(e2 / e1, 12.0);
  EXPECT_LE(e2 / e1, 20.0);
  const double order1 = std::log2(e4 / e2), order2 = std::log2(e2 / e1);
  EXPECT_GE(order1, 3.5);
  EXPECT_LE(order1, 4.5);
  EXPECT_GE(order2, 3.5);
  EXPECT_LE(order2, 4.5);
}

TEST(Rk4Step, NonFiniteDerivativeThrows)
{
  auto deriv = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(x.size(), std::numeric_limits<double>::infinity()).eval();
  };
  EXPECT_THROW(rk4_step(Eigen::VectorXd::Zero(2), 0.1, deriv), NumericalError);
}

TEST(Rk4Step, QuaternionRenormalized)
{
  const RobotParams p = params();
  ModelLayout l;
  std::mt19937_64 rng(17);
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd x = random_state_vec(l, p, rng);
    const Eigen::VectorXd u = random_input_vec(p, rng);
    auto deriv = [&](const Eigen::VectorXd& s) {
      Eigen::VectorXd d;
      eval_deriv(l, p, s, u, Disturbance{}, d);
      return d;
    };
    x = rk4_step(x, 0.01, deriv, ModelLayout::kQuat);
    EXPECT_LT(std::abs(x.segment<4>(ModelLayout::kQuat).norm() - 1.0), 1e-12);
  }
}

// Central finite differences on the continuous dynamics, all model variants.
TEST(DerivJacobians, MatchFiniteDifferences)
{
  const RobotParams p = params();
  std::mt19937_64 rng(21);
  const double eps = 1e-6;
  for (const bool servo : {false, true}) {
    for (const bool thrust : {false, true}) {
      if (!servo && thrust) continue;
      ModelLayout l;
      l.servo_state = servo;
      l.thrust_state = thrust;
      for (int trial = 0; trial < 34; ++trial) {
        const Eigen::VectorXd x = random_state_vec(l, p, rng);
        const Eigen::VectorXd u = random_input_vec(p, rng);
        Disturbance d;
        d.force_w = Eigen::Vector3d(0, 0, 1.5);
        Eigen::VectorXd xdot;
        Eigen::MatrixXd jx, ju;
        eval_deriv_jac(l, p, x, u, d, xdot, jx, ju);

        Eigen::MatrixXd jx_fd(l.nx(), l.nx()), ju_fd(l.nx(), l.nu());
        Eigen::VectorXd dp, dm;
        for (int c = 0; c < l.nx(); ++c) {
          Eigen::VectorXd xp = x, xm = x;
          xp[c] += eps;
          xm[c] -= eps;
          eval_deriv(l, p, xp, u, d, dp);
          eval_deriv(l, p, xm, u, d, dm);
          jx_fd.col(c) = (dp - dm) / (2 * eps);
        }
        for (int c = 0; c < l.nu(); ++c) {
          Eigen::VectorXd up = u, um = u;
          up[c] += eps;
          um[c] -= eps;
          eval_deriv(l, p, x, up, d, dp);
          eval_deriv(l, p, x, um, d, dm);
          ju_fd.col(c) = (dp - dm) / (2 * eps);
        }
        const double scale_x = std::max(1.0, jx.cwiseAbs().maxCoeff());
        const double scale_u = std::max(1.0, ju.cwiseAbs().maxCoeff());
        EXPECT_LT((jx - jx_fd).cwiseAbs().maxCoeff() / scale_x, 1e-5);
        EXPECT_LT((ju - ju_fd).cwiseAbs().maxCoeff() / scale_u, 1e-5);
      }
    }
  }
}

TEST(DiscreteStep, ServoSensitivityMatchesExactExponential)
{
  const RobotParams p = params();
  ModelLayout l;
  std::mt19937_64 rng(23);
  const Eigen::VectorXd x = random_state_vec(l, p, rng);
  const Eigen::VectorXd u = random_input_vec(p, rng);
  const double t_integ = 0.1;
  Eigen::VectorXd xn;
  Eigen::MatrixXd a, b;
  discrete_step_sens(l, p, x, u, Disturbance{}, t_integ, 2, xn, a, b);

  const double expect = 1.0 - std::exp(-t_integ / p.t_servo);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double want = i == j ? expect : 0.0;
      EXPECT_NEAR(b(l.servo_offset() + i, 4 + j), want, 2e-3);
      EXPECT_NEAR(b(l.servo_offset() + i, 4 + j), want, 1e-12);
    }
  }
}

TEST(DiscreteStep, StableForVanishingTimeConstants)
{
  RobotParams p = params();
  p.t_servo = 1e-4;
  p.t_thrust = 1e-4;
  ModelLayout l;
  l.thrust_state = true;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(l.nx());
  x[ModelLayout::kQuat] = 1.0;
  std::mt19937_64 rng(5);
  Eigen::VectorXd u = random_input_vec(p, rng);
  const Eigen::VectorXd xn = discrete_step(l, p, x, u, Disturbance{}, 0.1, 2);
  ASSERT_TRUE(xn.allFinite());
  // Actuator states snap to their commands in the stiff limit.
  EXPECT_LT((xn.segment(l.servo_offset(), 4) - u.tail(4)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((xn.segment(l.thrust_offset(), 4) - u.head(4)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DiscreteStep, SensitivitiesMatchFiniteDifferences)
{
  const RobotParams p = params();
  std::mt19937_64 rng(29);
  const double eps = 1e-6;
  for (const auto& [servo, thrust] : {std::pair{false, false}, {true, false}, {true, true}}) {
    ModelLayout l;
    l.servo_state = servo;
    l.thrust_state = thrust;
    for (int trial = 0; trial < 12; ++trial) {
      const Eigen::VectorXd x = random_state_vec(l, p, rng);
      const Eigen::VectorXd u = random_input_vec(p, rng);
      Disturbance d;
      Eigen::VectorXd xn;
      Eigen::MatrixXd a, b;
      discrete_step_sens(l, p, x, u, d, 0.1, 2, xn, a, b);

      // Sensitivities describe the raw map, so the difference oracle skips
      // the final quaternion renormalization too.
      auto raw = [&](const Eigen::VectorXd& x0, const Eigen::VectorXd& u0) {
        return discrete_step(l, p, x0, u0, d, 0.1, 2, false);
      };
      for (int c = 0; c < l.nx(); ++c) {
        Eigen::VectorXd xp = x, xm = x;
        xp[c] += eps;
        xm[c] -= eps;
        const Eigen::VectorXd fd = (raw(xp, u) - raw(xm, u)) / (2 * eps);
        const double scale = std::max(1.0, a.col(c).cwiseAbs().maxCoeff());
        EXPECT_LT((a.col(c) - fd).cwiseAbs().maxCoeff() / scale, 1e-5);
      }
      for (int c = 0; c < l.nu(); ++c) {
        Eigen::VectorXd up = u, um = u;
        up[c] += eps;
        um[c] -= eps;
        const Eigen::VectorXd fd = (raw(x, up) - raw(x, um)) / (2 * eps);
        const double scale = std::max(1.0, b.col(c).cwiseAbs().maxCoeff());
        EXPECT_LT((b.col(c) - fd).cwiseAbs().maxCoeff() / scale, 1e-5);
      }
    }
  }
}

TEST(Plant, MatchesControlDerivWhenThrustModelOff)
{
  const RobotParams p = params();
  std::mt19937_64 rng(31);
  ModelLayout l;
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd xv = random_state_vec(l, p, rng);
    const Eigen::VectorXd uv = random_input_vec(p, rng);
    PlantState ps = PlantState::hover_init(l.unpack(xv), uv.head(4));
    const Input u = Input::from_vec(uv);
    Disturbance d;
    d.force_w = Eigen::Vector3d(0.1, -0.2, 0.3);
    d.torque_b = Eigen::Vector3d(0.01, 0.02, -0.03);
    const Eigen::VectorXd pd = plant_deriv(ps, u, d, p, PlantOptions{}, 0.0);
    const State s = l.unpack(xv);
    const Eigen::VectorXd cd = control_deriv(s, u, d, p);
    ASSERT_EQ(pd.size(), cd.size());
    for (int k = 0; k < 17; ++k) EXPECT_EQ(pd[k], cd[k]);  // bitwise identical
  }
}

TEST(Plant, DeadTimeHoldsThrustAtZero)
{
  RobotParams p = params();
  PlantOptions opts;
  opts.thrust_model = true;
  opts.dead_time = true;
  State s;
  PlantState ps = PlantState::hover_init(s, Eigen::VectorXd::Zero(4));
  Input u;
  u.thrust_cmd = Eigen::VectorXd::Constant(4, 7.0);
  u.servo_cmd = Eigen::VectorXd::Zero(4);

  double t = 0.0;
  const double h = 0.005;
  while (t < 0.34) {
    step_plant(ps, u, Disturbance{}, p, opts, t, h);
    t += h;
    EXPECT_LT(ps.thrust.cwiseAbs().maxCoeff(), 1e-12) << "dead time should hold at t=" << t;
  }
  while (t < 0.6) {
    step_plant(ps, u, Disturbance{}, p, opts, t, h);
    t += h;
  }
  EXPECT_GT(ps.thrust.minCoeff(), 5.0);  // spinning up after release
}

TEST(Plant, ThrustFirstOrderRate)
{
  RobotParams p = params();
  PlantOptions opts;
  opts.thrust_model = true;
  State s;
  PlantState ps = PlantState::hover_init(s, Eigen::VectorXd::Constant(4, 5.0));
  Input u;
  u.thrust_cmd = Eigen::VectorXd::Constant(4, 7.0);
  u.servo_cmd = Eigen::VectorXd::Zero(4);
  const Eigen::VectorXd pd = plant_deriv(ps, u, Disturbance{}, p, opts, 0.0);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(pd[17 + i], (7.0 - 5.0) / 0.0942, 1e-12);
    EXPECT_NEAR(pd[17 + i], 21.231, 1e-3);
  }
}

TEST(Plant, ServoAnglesClampedAtBounds)
{
  RobotParams p = params();
  State s;
  s.servo = Eigen::VectorXd::Constant(4, p.servo_max - 0.01);
  PlantState ps = PlantState::hover_init(s, Eigen::VectorXd::Zero(4));
  Input u;
  u.thrust_cmd = Eigen::VectorXd::Zero(4);
  u.servo_cmd = Eigen::VectorXd::Constant(4, p.servo_max + 0.5);  // beyond the stop
  int clamped = 0;
  for (int i = 0; i < 200; ++i)
    clamped += step_plant(ps, u, Disturbance{}, p, PlantOptions{}, i * 0.005, 0.005);
  EXPECT_GT(clamped, 0);
  EXPECT_LE(ps.state.servo.maxCoeff(), p.servo_max + 1e-12);
}
