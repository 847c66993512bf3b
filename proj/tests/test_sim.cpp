#include "tiltctl/sim.hpp"

#include <gtest/gtest.h>

#include "tiltctl/plant.hpp"

using namespace tiltctl;

TEST(ClosedLoop, HoverHoldsEquilibrium)
{
  const Scenario sc = hover_scenario(10.0);
  const RunLog log = run_closed_loop(sc);
  ASSERT_EQ(log.status, RunStatus::kOk);
  ASSERT_EQ(log.records.size(), 2001u);  // duration / plant_dt + 1

  const LogRecord& last = log.records.back();
  EXPECT_LT((last.x.pos - sc.initial.pos).norm(), 1e-3);
  EXPECT_LT(last.x.servo.cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LT(last.x.vel.norm(), 1e-3);
}

TEST(ClosedLoop, AppliedInputChangesOnlyAtControllerTicks)
{
  Scenario sc = hover_scenario(1.0);
  Scenario::TimedTarget step;
  step.t_switch = 0.3;
  step.target.pos = sc.initial.pos + Eigen::Vector3d(0.2, 0.0, 0.1);
  sc.setpoints.push_back(step);
  const RunLog log = run_closed_loop(sc);
  ASSERT_EQ(log.status, RunStatus::kOk);
  const int ratio = 2;  // 0.01 / 0.005
  for (size_t i = 1; i < log.records.size(); ++i) {
    if (static_cast<int>(i) % ratio != 0) {
      const Eigen::VectorXd a = log.records[i].applied.to_vec();
      const Eigen::VectorXd b = log.records[i - 1].applied.to_vec();
      EXPECT_EQ((a - b).cwiseAbs().maxCoeff(), 0.0) << "i=" << i;
    }
  }
}

TEST(ClosedLoop, DeterministicUnderSeededNoise)
{
  Scenario sc = hover_scenario(2.0);
  sc.noise.enabled = true;
  sc.seed = 1234;
  const RunLog a = run_closed_loop(sc);
  const RunLog b = run_closed_loop(sc);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ((a.records[i].x.pos - b.records[i].x.pos).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((a.records[i].applied.to_vec() - b.records[i].applied.to_vec())
                  .cwiseAbs()
                  .maxCoeff(),
              0.0);
    EXPECT_EQ(a.records[i].f_dz, b.records[i].f_dz);
  }
}

TEST(Plant, FreeFallMatchesBallisticArc)
{
  const RobotParams p = RobotParams::default_tiltquad();
  State s;
  s.pos = Eigen::Vector3d(0, 0, 5);
  PlantState plant = PlantState::hover_init(s, Eigen::VectorXd::Zero(4));
  Input u;
  u.thrust_cmd = Eigen::VectorXd::Zero(4);
  u.servo_cmd = Eigen::VectorXd::Zero(4);
  const double h = 0.005;
  for (int i = 0; i < 100; ++i)
    step_plant(plant, u, Disturbance{}, p, PlantOptions{}, i * h, h);
  const double t = 0.5;
  EXPECT_NEAR(plant.state.pos.z(), 5.0 - 0.5 * p.gravity * t * t, 1e-6);
  EXPECT_NEAR(plant.state.vel.z(), -p.gravity * t, 1e-9);
  EXPECT_LT(plant.state.pos.head<2>().norm(), 1e-12);
}

TEST(Metrics, PerfectTrackingGivesZeroRmse)
{
  RunLog log;
  for (int i = 0; i < 100; ++i) {
    LogRecord r;
    r.t = i * 0.005;
    r.x.pos = Eigen::Vector3d(1, 2, 3);
    r.ref.pos = r.x.pos;
    r.thrust = Eigen::VectorXd::Zero(4);
    r.applied.thrust_cmd = Eigen::VectorXd::Zero(4);
    r.applied.servo_cmd = Eigen::VectorXd::Zero(4);
    log.records.push_back(r);
  }
  const RunSummary s = metrics(log);
  EXPECT_EQ(s.rmse_pos.norm(), 0.0);
  EXPECT_EQ(s.rmse_att_deg.norm(), 0.0);
  EXPECT_EQ(s.tv_total_cmd, 0.0);
}

TEST(Metrics, ConstantOffsetGivesExactRmse)
{
  RunLog log;
  for (int i = 0; i < 100; ++i) {
    LogRecord r;
    r.t = i * 0.005;
    r.x.pos = Eigen::Vector3d(0.1, 0, 0);
    r.ref.pos = Eigen::Vector3d::Zero();
    r.thrust = Eigen::VectorXd::Zero(4);
    r.applied.thrust_cmd = Eigen::VectorXd::Zero(4);
    r.applied.servo_cmd = Eigen::VectorXd::Zero(4);
    log.records.push_back(r);
  }
  const RunSummary s = metrics(log);
  EXPECT_NEAR(s.rmse_pos[0], 0.1, 1e-12);
  EXPECT_EQ(s.rmse_pos[1], 0.0);
}

TEST(Metrics, YawWrapAroundDoesNotBlowUp)
{
  RunLog log;
  for (int i = 0; i < 200; ++i) {
    LogRecord r;
    r.t = i * 0.005;
    const double yaw = (i % 2 == 0 ? 1.0 : -1.0) * (M_PI - 1e-3);
    r.x.quat = rpy_to_quat(0, 0, yaw);
    r.ref.quat = Quat(1, 0, 0, 0);
    r.thrust = Eigen::VectorXd::Zero(4);
    r.applied.thrust_cmd = Eigen::VectorXd::Zero(4);
    r.applied.servo_cmd = Eigen::VectorXd::Zero(4);
    log.records.push_back(r);
  }
  const RunSummary s = metrics(log);
  EXPECT_GT(s.rmse_att_deg[2], 175.0);
  EXPECT_LT(s.rmse_att_deg[2], 180.5);
}

TEST(ClosedLoop, LateralPulseRejectedWithinBound)
{
  const Scenario sc = disturbance_scenario();
  const RunLog log = run_closed_loop(sc);
  ASSERT_EQ(log.status, RunStatus::kOk);

  // The pulse runs 2.0 s .. 2.3 s; find when the error re-enters 5 cm for good.
  const double t_end = 2.3;
  double recovered_at = -1.0;
  for (const auto& rec : log.records) {
    if (rec.t < t_end) continue;
    const double err = (rec.x.pos - rec.ref.pos).norm();
    if (err <= 0.05) {
      if (recovered_at < 0.0) recovered_at = rec.t;
    } else {
      recovered_at = -1.0;
    }
  }
  ASSERT_GT(recovered_at, 0.0);
  EXPECT_LE(recovered_at - t_end, 1.5);
  // The pulse visibly displaced the vehicle in the first place.
  EXPECT_GT(max_pos_error_between(log, 2.0, 2.6), 0.02);
}

// A constant unmodeled upward force must be absorbed by the disturbance
// estimate so the altitude error vanishes; this pins the compensator sign.
TEST(ClosedLoop, CompensatorAbsorbsConstantZBias)
{
  Scenario sc = hover_scenario(20.0);
  sc.z_force_bias = 2.0;
  const RunLog log = run_closed_loop(sc);
  ASSERT_EQ(log.status, RunStatus::kOk);
  const LogRecord& last = log.records.back();
  EXPECT_LT(std::abs(last.x.pos.z() - last.ref.pos.z()), 5e-3);
  EXPECT_NEAR(last.f_dz, 2.0, 0.3);
}

TEST(ClosedLoop, RtiContractionOnSmallStep)
{
  Scenario sc = hover_scenario(2.0);
  sc.setpoints[0].target.pos = sc.initial.pos + Eigen::Vector3d(0.1, 0, 0);
  const RunLog log = run_closed_loop(sc);
  ASSERT_EQ(log.status, RunStatus::kOk);
  ASSERT_GT(log.solves.size(), 20u);
  for (size_t i = 11; i < log.solves.size(); ++i)
    EXPECT_LE(log.solves[i].cost, log.solves[i - 1].cost + 1e-9) << "tick " << i;
}

TEST(ClosedLoop, EnvelopeExitFlagsCrash)
{
  Scenario sc = step_pose_scenario(4.0);
  sc.crash_pos_limit = 0.5;  // the 1.2 m step must leave this sphere
  const RunLog log = run_closed_loop(sc);
  EXPECT_EQ(log.status, RunStatus::kCrashed);
  EXPECT_LT(log.records.size(), 801u);
}

TEST(Ablation, VanishingActuatorLagCollapsesTheVariants)
{
  Scenario sc = step_pose_scenario(4.0);
  sc.robot.t_servo = 1e-4;
  sc.robot.t_thrust = 1e-4;

  Scenario s1 = sc, s2 = sc, s3 = sc;
  s1.variant = ControllerVariant::kNoServoNoThrust;
  s2.variant = ControllerVariant::kServoOnly;
  s3.variant = ControllerVariant::kServoThrust;
  for (Scenario* s : {&s1, &s2, &s3}) s->plant.thrust_model = true;

  const RunLog l1 = run_closed_loop(s1);
  const RunLog l2 = run_closed_loop(s2);
  const RunLog l3 = run_closed_loop(s3);
  ASSERT_EQ(l1.status, RunStatus::kOk);
  ASSERT_EQ(l2.status, RunStatus::kOk);
  ASSERT_EQ(l3.status, RunStatus::kOk);

  const Eigen::Vector3d p1 = l1.records.back().x.pos;
  const Eigen::Vector3d p2 = l2.records.back().x.pos;
  const Eigen::Vector3d p3 = l3.records.back().x.pos;
  EXPECT_LT((p1 - p2).norm(), 1e-3);
  EXPECT_LT((p2 - p3).norm(), 1e-3);
  const Eigen::Vector3d q12 =
      quat_error_vec(l1.records.back().x.quat, l2.records.back().x.quat);
  const Eigen::Vector3d q23 =
      quat_error_vec(l2.records.back().x.quat, l3.records.back().x.quat);
  EXPECT_LT(q12.norm(), 1e-3);
  EXPECT_LT(q23.norm(), 1e-3);
}

TEST(LagSensitivityReport, ReproducesReferenceNumbers)
{
  const LagSensitivity s =
      lag_sensitivity(0.0, deg2rad(-80.0), 7.0, 11.0, 0.2);
  EXPECT_NEAR(s.servo_pct, 152.45, 0.01);
  EXPECT_NEAR(s.thrust_pct, -7.27, 0.01);
}

TEST(Scenario, ValidationCatchesBadPrograms)
{
  Scenario sc = hover_scenario();
  sc.control_dt = 0.0075;  // not a multiple of 0.005
  EXPECT_THROW(sc.validate(), std::invalid_argument);

  Scenario sc2 = hover_scenario();
  sc2.setpoints.clear();
  EXPECT_THROW(sc2.validate(), std::invalid_argument);

  Scenario sc3 = hover_scenario();
  sc3.setpoints[0].t_switch = 1.0;  // nothing active at t = 0
  EXPECT_THROW(sc3.validate(), std::invalid_argument);
}
