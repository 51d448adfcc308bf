/*
 * Copyright 2026 The pgslam Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PGSLAM_LIE_HPP_
#define PGSLAM_LIE_HPP_

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <optional>

namespace pgslam {

inline constexpr double kPi = 3.14159265358979323846;

using Vector3 = Eigen::Vector3d;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix3 = Eigen::Matrix3d;
using Matrix4 = Eigen::Matrix4d;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

Matrix3 skew(const Vector3& v);
Vector3 unskew(const Matrix3& m);

/// max(|M*M^T - I|_inf, |det(M) - 1|), zero for a perfect rotation matrix.
double orthonormality_error(const Matrix3& m);

/// An element of SO(3). Stored as a 3x3 matrix; when built from a
/// quaternion the original quaternion is kept so that quaternion-based
/// serialization round-trips bit for bit.
class Rotation {
 public:
  Rotation() : m_(Matrix3::Identity()) {}

  static Rotation identity() { return Rotation(); }

  /// Throws std::invalid_argument if orthonormality_error(m) > tol.
  static Rotation from_matrix(const Matrix3& m, double tol = 1e-6);

  /// Accepts a quaternion with |q| within 1e-6 of 1; renormalizes only
  /// when the deviation exceeds 1e-9 so serialized values survive a
  /// load/save cycle unchanged.
  static Rotation from_quaternion(const Eigen::Quaterniond& q);

  const Matrix3& matrix() const { return m_; }

  /// Returns the stored quaternion when the rotation was built from one,
  /// otherwise converts the matrix with a canonical sign (w >= 0; if
  /// w == 0 the first nonzero imaginary component is positive).
  Eigen::Quaterniond quaternion() const;

  Rotation operator*(const Rotation& other) const;
  Rotation transposed() const;
  Vector3 operator*(const Vector3& v) const { return m_ * v; }

  /// Projects back onto SO(3) through the closest unit quaternion.
  Rotation renormalized() const;

 private:
  explicit Rotation(const Matrix3& m) : m_(m) {}
  Rotation(const Matrix3& m, const Eigen::Quaterniond& q)
      : m_(m), quat_cache_(q) {}

  Matrix3 m_;
  std::optional<Eigen::Quaterniond> quat_cache_;
};

/// Minimal se(3) coordinates: translational part rho (meters) and
/// rotational part phi (axis-angle, radians). Flattened order is
/// [rho; phi].
struct Twist {
  Vector3 rho = Vector3::Zero();
  Vector3 phi = Vector3::Zero();

  Vector6 vector() const;
  static Twist from_vector(const Vector6& v);
  double norm() const { return vector().norm(); }
  double squared_norm() const { return vector().squaredNorm(); }
  Twist scaled(double s) const { return Twist{rho * s, phi * s}; }
  bool is_zero() const { return rho.isZero(0.0) && phi.isZero(0.0); }
};

/// A rigid-body transform in SE(3). Compositions longer than
/// kRenormalizeChain re-project the rotation onto SO(3) to keep
/// orthonormality drift bounded.
class Pose {
 public:
  static constexpr int kRenormalizeChain = 64;

  Pose() = default;
  Pose(const Rotation& rotation, const Vector3& translation)
      : rotation_(rotation), translation_(translation) {}

  static Pose identity() { return Pose(); }

  const Rotation& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }

  Matrix4 matrix() const;
  Eigen::Matrix<double, 3, 4> matrix3x4() const;

  Pose operator*(const Pose& other) const;
  Pose inverse() const;
  Vector3 operator*(const Vector3& p) const;

  /// 6x6 adjoint in [rho; phi] ordering: [[R, skew(t)R], [0, R]].
  Matrix6 adjoint() const;

  Pose renormalized() const;

  /// Componentwise equality of rotation matrix and translation.
  static bool bitwise_equal(const Pose& a, const Pose& b);

 private:
  Pose(const Rotation& rotation, const Vector3& translation, int chain)
      : rotation_(rotation), translation_(translation), chain_(chain) {}

  Rotation rotation_;
  Vector3 translation_ = Vector3::Zero();
  int chain_ = 0;
};

inline Pose compose(const Pose& a, const Pose& b) { return a * b; }
inline Pose inverse(const Pose& t) { return t.inverse(); }

Rotation so3_exp(const Vector3& phi);

/// Inverse of so3_exp; |result| <= pi. At angle exactly pi the axis sign
/// is canonical: first component above 1e-9 in magnitude is positive.
Vector3 so3_log(const Rotation& r);

Pose se3_exp(const Twist& xi);
Twist se3_log(const Pose& t);

/// SO(3) left Jacobian and its inverse (the V matrix coupling rho and
/// phi in the SE(3) exponential).
Matrix3 so3_left_jacobian(const Vector3& phi);
Matrix3 so3_left_jacobian_inverse(const Vector3& phi);

/// Closed-form inverse left Jacobian of SE(3) in [rho; phi] ordering.
Matrix6 se3_left_jacobian_inverse(const Twist& xi);

/// Small adjoint ad(xi) = [[skew(phi), skew(rho)], [0, skew(phi)]].
Matrix6 se3_ad(const Twist& xi);

/// Relative motion as emitted per edge by the pose estimation front-end:
/// three Euler angles plus a translation. Angles are stored as
/// (rx, ry, rz) and compose intrinsically Z-Y-X, i.e.
/// R = Rz(rz) * Ry(ry) * Rx(rx). Every edge file declares this
/// convention in its header.
struct EulerEdge {
  Vector3 euler = Vector3::Zero();
  Vector3 translation = Vector3::Zero();
};

Pose pose_from_euler_edge(const EulerEdge& e);

/// Throws std::domain_error when |ry| is within 1e-6 of pi/2 (gimbal
/// lock); all returned angles lie in (-pi, pi].
EulerEdge euler_edge_from_pose(const Pose& t);

struct CameraIntrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
};

struct PixelProjection {
  Eigen::Vector2d pixel;
  double depth = 0;
};

/// Back-projects the homogeneous pixel to 3D at the given depth, moves
/// it by `motion` and projects it again. Returns nullopt when the moved
/// point falls behind the camera (z <= 0).
std::optional<PixelProjection> project_pixel(const Vector3& pixel,
                                             double depth, const Pose& motion,
                                             const CameraIntrinsics& K);

}  // namespace pgslam

#endif  // PGSLAM_LIE_HPP_
