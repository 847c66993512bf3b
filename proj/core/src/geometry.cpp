#include "tiltctl/geometry.hpp"

#include <cmath>

#include <Eigen/Geometry>

namespace tiltctl {

Quat quat_identity() { return Quat(1.0, 0.0, 0.0, 0.0); }

Quat quat_conj(const Quat& q) { return Quat(q[0], -q[1], -q[2], -q[3]); }

Quat quat_normalized(const Quat& q) { return q / q.norm(); }

Quat quat_mul(const Quat& a, const Quat& b)
{
  return Quat(a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
              a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
              a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
              a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]);
}

Eigen::Matrix4d quat_lmat(const Quat& q)
{
  Eigen::Matrix4d m;
  // clang-format off
  m <<  q[0], -q[1], -q[2], -q[3],
        q[1],  q[0], -q[3],  q[2],
        q[2],  q[3],  q[0], -q[1],
        q[3], -q[2],  q[1],  q[0];
  // clang-format on
  return m;
}

Eigen::Matrix4d quat_rmat(const Quat& q)
{
  Eigen::Matrix4d m;
  // clang-format off
  m <<  q[0], -q[1], -q[2], -q[3],
        q[1],  q[0],  q[3], -q[2],
        q[2], -q[3],  q[0],  q[1],
        q[3],  q[2], -q[1],  q[0];
  // clang-format on
  return m;
}

Eigen::Matrix3d quat_to_rot(const Quat& q)
{
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  // clang-format off
  r << w * w + x * x - y * y - z * z, 2 * (x * y - w * z),           2 * (x * z + w * y),
       2 * (x * y + w * z),           w * w - x * x + y * y - z * z, 2 * (y * z - w * x),
       2 * (x * z - w * y),           2 * (y * z + w * x),           w * w - x * x - y * y + z * z;
  // clang-format on
  return r;
}

Eigen::Vector3d quat_rotate(const Quat& q, const Eigen::Vector3d& v)
{
  const double w = q[0];
  const Eigen::Vector3d u(q[1], q[2], q[3]);
  return (w * w - u.squaredNorm()) * v + 2.0 * u.dot(v) * u + 2.0 * w * u.cross(v);
}

Quat rpy_to_quat(double roll, double pitch, double yaw)
{
  const double cr = std::cos(0.5 * roll), sr = std::sin(0.5 * roll);
  const double cp = std::cos(0.5 * pitch), sp = std::sin(0.5 * pitch);
  const double cy = std::cos(0.5 * yaw), sy = std::sin(0.5 * yaw);
  return Quat(cy * cp * cr + sy * sp * sr,
              cy * cp * sr - sy * sp * cr,
              cy * sp * cr + sy * cp * sr,
              sy * cp * cr - cy * sp * sr);
}

Quat rpy_to_quat(const Eigen::Vector3d& rpy) { return rpy_to_quat(rpy[0], rpy[1], rpy[2]); }

Eigen::Vector3d quat_to_rpy(const Quat& q)
{
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  const double sinp = 2.0 * (w * y - z * x);
  double pitch;
  if (std::abs(sinp) >= 1.0)
    pitch = std::copysign(M_PI / 2.0, sinp);
  else
    pitch = std::asin(sinp);
  const double roll = std::atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y));
  const double yaw = std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z));
  return Eigen::Vector3d(roll, pitch, yaw);
}

Eigen::Vector3d quat_error_vec(const Quat& q, const Quat& q_ref)
{
  Quat e = quat_mul(q, quat_conj(q_ref));
  const double s = e[0] < 0.0 ? -1.0 : 1.0;
  return s * e.tail<3>();
}

Eigen::Matrix<double, 3, 4> quat_error_vec_jac(const Quat& q, const Quat& q_ref)
{
  const Quat e = quat_mul(q, quat_conj(q_ref));
  const double s = e[0] < 0.0 ? -1.0 : 1.0;
  // e = quat_rmat(conj(q_ref)) * q, take rows 1..3.
  return s * quat_rmat(quat_conj(q_ref)).bottomRows<3>();
}

Quat quat_slerp(const Quat& a, const Quat& b, double t)
{
  Quat bb = b;
  double dot = a.dot(b);
  if (dot < 0.0) {
    bb = -b;
    dot = -dot;
  }
  if (dot > 1.0 - 1e-12) return quat_normalized(a + t * (bb - a));
  const double theta = std::acos(dot);
  const double s = std::sin(theta);
  return (std::sin((1.0 - t) * theta) / s) * a + (std::sin(t * theta) / s) * bb;
}

double wrap_angle(double a)
{
  a = std::fmod(a, 2.0 * M_PI);
  if (a > M_PI) a -= 2.0 * M_PI;
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

}  // namespace tiltctl
