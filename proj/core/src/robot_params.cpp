#include "tiltctl/robot_params.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tiltctl {

RobotParams RobotParams::default_tiltquad()
{
  RobotParams p;
  const double arm = 0.2;  // half the 0.4 m wheelbase
  const double az[4] = {M_PI / 4.0, 3.0 * M_PI / 4.0, 5.0 * M_PI / 4.0, 7.0 * M_PI / 4.0};
  const int dir[4] = {-1, +1, -1, +1};
  p.rotor_pos.clear();
  p.arm_azimuth.clear();
  p.spin_dir.clear();
  for (int i = 0; i < 4; ++i) {
    p.arm_azimuth.push_back(az[i]);
    p.rotor_pos.emplace_back(arm * std::cos(az[i]), arm * std::sin(az[i]), 0.0);
    p.spin_dir.push_back(dir[i]);
  }
  return p;
}

void RobotParams::validate() const
{
  auto fail = [](const std::string& msg) { throw std::invalid_argument("RobotParams: " + msg); };

  if (!(mass > 0.0)) fail("mass must be > 0");
  if (!(inertia_diag.array() > 0.0).all()) fail("inertia diagonal must be > 0");
  if (!(gravity > 0.0)) fail("gravity must be > 0 (vector points down as [0,0,-g])");
  if (rotor_count < 3) fail("rotor_count must be >= 3");
  const auto n = static_cast<size_t>(rotor_count);
  if (rotor_pos.size() != n || arm_azimuth.size() != n || spin_dir.size() != n)
    fail("per-rotor arrays must have rotor_count entries");
  for (int d : spin_dir)
    if (d != 1 && d != -1) fail("spin directions must be +1 or -1");
  if (rotor_count == 4 && std::accumulate(spin_dir.begin(), spin_dir.end(), 0) != 0)
    fail("spin directions must sum to zero for a quadrotor");
  if (thrust_min < 0.0) fail("thrust_min must be >= 0");
  if (!(thrust_min < thrust_max)) fail("thrust bounds must be ordered");
  if (!(servo_min < servo_max)) fail("servo bounds must be ordered");
  if (!(t_servo > 0.0)) fail("t_servo must be > 0");
  if (!(t_thrust > 0.0)) fail("t_thrust must be > 0");
  if (t_dead < 0.0) fail("t_dead must be >= 0");
  if (!(thrust_coeff > 0.0)) fail("thrust_coeff must be > 0");
}

}  // namespace tiltctl
