#include "tiltctl/alloc.hpp"

#include <cmath>

#include <Eigen/SVD>

namespace tiltctl {

AllocationMap build_allocation(const RobotParams& params)
{
  const int np = params.rotor_count;
  AllocationMap map;
  map.wrench_of_z.resize(6, 2 * np);

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(np);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(np);
  for (int i = 0; i < np; ++i) {
    // Lateral unit virtual input: f sin(a) = 1, f cos(a) = 0.
    alpha.setZero();
    f.setZero();
    alpha[i] = M_PI / 2.0;
    f[i] = 1.0;
    Wrench w = rotor_wrench(alpha, f, params);
    map.wrench_of_z.col(2 * i) << w.force, w.torque;
    // Vertical unit virtual input: f sin(a) = 0, f cos(a) = 1.
    alpha[i] = 0.0;
    w = rotor_wrench(alpha, f, params);
    map.wrench_of_z.col(2 * i + 1) << w.force, w.torque;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(map.wrench_of_z,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double tol = 1e-9 * svd.singularValues()[0];
  if (svd.singularValues().minCoeff() <= tol)
    throw ConfigurationError("build_allocation: wrench map is rank deficient");
  Eigen::VectorXd inv_sv = svd.singularValues().cwiseInverse();
  map.z_of_wrench = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
  return map;
}

AllocationResult allocate(const AllocationMap& map, const Wrench& wrench,
                          const RobotParams& params)
{
  const int np = params.rotor_count;
  Eigen::Matrix<double, 6, 1> w;
  w << wrench.force, wrench.torque;
  const Eigen::VectorXd z = map.z_of_wrench * w;

  AllocationResult out;
  out.thrust.resize(np);
  out.angle.resize(np);
  out.virtual_input = z;
  for (int i = 0; i < np; ++i) {
    const double lateral = z[2 * i];
    const double vertical = z[2 * i + 1];
    double thrust = std::hypot(lateral, vertical);
    double angle;
    if (thrust < 1e-9) {
      angle = 0.0;  // atan2(0, 0) singularity
      out.degenerate = true;
    } else {
      angle = std::atan2(lateral, vertical);
    }
    if (thrust < params.thrust_min || thrust > params.thrust_max) {
      thrust = std::clamp(thrust, params.thrust_min, params.thrust_max);
      out.saturated = true;
    }
    if (angle < params.servo_min || angle > params.servo_max) {
      angle = std::clamp(angle, params.servo_min, params.servo_max);
      out.saturated = true;
    }
    out.thrust[i] = thrust;
    out.angle[i] = angle;
  }
  return out;
}

}  // namespace tiltctl
