#pragma once

#include <Eigen/Core>

// Quaternion helpers used across the model, reference generation and solver.
// Convention: Hamilton product, scalar-first storage [w, x, y, z]; a state
// quaternion rotates body (FLU) vectors into the world (ENU) frame.
// Euler angles are intrinsic Z-Y-X (yaw, pitch, roll).

namespace tiltctl {

using Quat = Eigen::Vector4d;  // [w, x, y, z]

Quat quat_identity();
Quat quat_conj(const Quat& q);
Quat quat_normalized(const Quat& q);

// Hamilton product a ∘ b.
Quat quat_mul(const Quat& a, const Quat& b);

// Left/right product matrices: quat_mul(a, b) == quat_lmat(a) * b == quat_rmat(b) * a.
Eigen::Matrix4d quat_lmat(const Quat& q);
Eigen::Matrix4d quat_rmat(const Quat& q);

// Rotation matrix of a (unit) quaternion.
Eigen::Matrix3d quat_to_rot(const Quat& q);

// Rotate a vector, equivalent to quat_to_rot(q) * v.
Eigen::Vector3d quat_rotate(const Quat& q, const Eigen::Vector3d& v);

// Intrinsic ZYX composition: q = qz(yaw) ∘ qy(pitch) ∘ qx(roll).
Quat rpy_to_quat(double roll, double pitch, double yaw);
Quat rpy_to_quat(const Eigen::Vector3d& rpy);

// ZYX Euler angles of a unit quaternion, pitch in [-pi/2, pi/2].
Eigen::Vector3d quat_to_rpy(const Quat& q);

// Vector part of the shortest-rotation error q ∘ q_ref⁻¹ (sign chosen so the
// scalar part is non-negative; invariant under q -> -q).
Eigen::Vector3d quat_error_vec(const Quat& q, const Quat& q_ref);

// d/dq of quat_error_vec at fixed q_ref: 3x4 (the sign flip is treated as
// locally constant).
Eigen::Matrix<double, 3, 4> quat_error_vec_jac(const Quat& q, const Quat& q_ref);

// Shortest-arc spherical interpolation between unit quaternions, t in [0, 1].
Quat quat_slerp(const Quat& a, const Quat& b, double t);

// Principal value in (-pi, pi].
double wrap_angle(double a);

inline constexpr double deg2rad(double d) { return d * 0.017453292519943295; }
inline constexpr double rad2deg(double r) { return r * 57.29577951308232; }

}  // namespace tiltctl
