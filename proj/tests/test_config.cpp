#include "tiltctl/config.hpp"

#include <gtest/gtest.h>

using namespace tiltctl;

TEST(Config, DefaultSerializationRoundTrips)
{
  const FullConfig def;
  const std::string text = serialize_config(def);
  const FullConfig back = parse_config_text(text, "default.cfg");
  EXPECT_EQ(serialize_config(back), text);

  // Applied scenario values are identical too.
  Scenario a = hover_scenario();
  Scenario b = hover_scenario();
  def.apply(a);
  back.apply(b);
  EXPECT_EQ(a.robot.mass, b.robot.mass);
  EXPECT_EQ(a.robot.servo_min, b.robot.servo_min);
  EXPECT_EQ(a.weights.q_att_z, b.weights.q_att_z);
  EXPECT_EQ(a.ocp.qp_tol, b.ocp.qp_tol);
  EXPECT_EQ(a.noise.sigma_att, b.noise.sigma_att);
}

TEST(Config, TableDefaultsApplied)
{
  const FullConfig def;
  Scenario sc = hover_scenario();
  def.apply(sc);
  EXPECT_DOUBLE_EQ(sc.robot.mass, 2.773);
  EXPECT_DOUBLE_EQ(sc.robot.torque_ratio, 0.0153);
  EXPECT_DOUBLE_EQ(sc.robot.t_servo, 0.0859);
  EXPECT_DOUBLE_EQ(sc.robot.thrust_max, 30.0);
  EXPECT_NEAR(sc.robot.servo_min, -M_PI / 2, 1e-12);
  EXPECT_EQ(sc.ocp.horizon, 20);
  EXPECT_DOUBLE_EQ(sc.ocp.t_integ, 0.1);
  EXPECT_DOUBLE_EQ(sc.weights.q_pos_xy, 300.0);
  EXPECT_DOUBLE_EQ(sc.weights.q_pos_z, 400.0);
  EXPECT_DOUBLE_EQ(sc.weights.r_servo_cmd, 250.0);
  EXPECT_DOUBLE_EQ(sc.k_i_z, 5.0);
  EXPECT_DOUBLE_EQ(sc.f_d_limit, 5.0);
  EXPECT_DOUBLE_EQ(sc.ocp.v_limit, 1.0);
  EXPECT_DOUBLE_EQ(sc.ocp.omega_limit, 6.0);
}

TEST(Config, UnknownKeyReportsLineNumber)
{
  const std::string text = "[robot]\nmass = 2.0\nbogus_key = 1\n";
  try {
    parse_config_text(text, "bad.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bad.cfg:3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("bogus_key"), std::string::npos) << msg;
  }
}

TEST(Config, UnknownSectionRejected)
{
  EXPECT_THROW(parse_config_text("[rocket]\nmass = 1\n", "x.cfg"), ConfigError);
}

TEST(Config, KeyOutsideSectionRejected)
{
  EXPECT_THROW(parse_config_text("mass = 1\n", "x.cfg"), ConfigError);
}

TEST(Config, BadNumberReportsLineNumber)
{
  try {
    parse_config_text("[nmpc]\nhorizon = soon\n", "y.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("y.cfg:2"), std::string::npos);
  }
}

TEST(Config, DimensionMismatchRejected)
{
  FullConfig cfg;
  cfg.arm_azimuth_deg = {45.0, 135.0, 225.0};  // three entries for four rotors
  EXPECT_THROW(cfg.robot_params(), ConfigError);
}

TEST(Config, MissingFileDiagnosticNamesPath)
{
  try {
    parse_config_file("/no/such/file.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/no/such/file.cfg"), std::string::npos);
  }
}

TEST(Config, DegreeKeysConvertToRadians)
{
  FullConfig cfg;
  cfg.servo_min_deg = -45.0;
  cfg.servo_max_deg = 45.0;
  const RobotParams p = cfg.robot_params();
  EXPECT_NEAR(p.servo_min, -M_PI / 4, 1e-12);
  EXPECT_NEAR(p.servo_max, M_PI / 4, 1e-12);
}

TEST(Config, CommentsAndWhitespaceTolerated)
{
  const std::string text =
      "# robot overrides\n[robot]\n  mass = 3.0   # heavier build\n\n[sim]\nnoise = true\n";
  const FullConfig cfg = parse_config_text(text, "c.cfg");
  EXPECT_DOUBLE_EQ(cfg.mass, 3.0);
  EXPECT_TRUE(cfg.noise);
}

TEST(Config, DisturbanceEventApplied)
{
  FullConfig cfg;
  cfg.dist_time = 2.0;
  cfg.dist_duration = 0.3;
  cfg.dist_force_x = 3.0;
  Scenario sc = hover_scenario();
  cfg.apply(sc);
  ASSERT_EQ(sc.disturbances.size(), 1u);
  EXPECT_DOUBLE_EQ(sc.disturbances[0].t_start, 2.0);
  EXPECT_DOUBLE_EQ(sc.disturbances[0].force_w.x(), 3.0);
}
