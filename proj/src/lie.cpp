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

#include "pgslam/lie.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace pgslam {

namespace {

// Below this angle the closed-form coefficients of exp/log suffer
// cancellation; Taylor expansions are exact to well under 1e-15 there.
constexpr double kSmallAngle = 1e-4;

Eigen::Quaterniond canonical_sign(Eigen::Quaterniond q) {
  double lead = q.w();
  if (lead == 0.0) lead = q.x();
  if (lead == 0.0) lead = q.y();
  if (lead == 0.0) lead = q.z();
  if (lead < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

}  // namespace

Matrix3 skew(const Vector3& v) {
  Matrix3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

Vector3 unskew(const Matrix3& m) {
  return Vector3(m(2, 1), m(0, 2), m(1, 0));
}

double orthonormality_error(const Matrix3& m) {
  const double gram = (m * m.transpose() - Matrix3::Identity())
                          .cwiseAbs()
                          .maxCoeff();
  return std::max(gram, std::abs(m.determinant() - 1.0));
}

Rotation Rotation::from_matrix(const Matrix3& m, double tol) {
  const double err = orthonormality_error(m);
  if (!(err <= tol)) {
    throw std::invalid_argument(
        "Rotation::from_matrix: matrix is not orthonormal (error " +
        std::to_string(err) + ", tolerance " + std::to_string(tol) + ")");
  }
  return Rotation(m);
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
  const double dev = std::abs(q.norm() - 1.0);
  if (!(dev <= 1e-6)) {
    throw std::invalid_argument(
        "Rotation::from_quaternion: quaternion norm deviates by " +
        std::to_string(dev));
  }
  Eigen::Quaterniond stored = q;
  if (dev > 1e-9) stored.normalize();
  return Rotation(stored.toRotationMatrix(), stored);
}

Eigen::Quaterniond Rotation::quaternion() const {
  if (quat_cache_) return *quat_cache_;
  return canonical_sign(Eigen::Quaterniond(m_));
}

Rotation Rotation::operator*(const Rotation& other) const {
  return Rotation(m_ * other.m_);
}

Rotation Rotation::transposed() const { return Rotation(m_.transpose()); }

Rotation Rotation::renormalized() const {
  Eigen::Quaterniond q = canonical_sign(Eigen::Quaterniond(m_));
  q.normalize();
  return Rotation(q.toRotationMatrix(), q);
}

Vector6 Twist::vector() const {
  Vector6 v;
  v << rho, phi;
  return v;
}

Twist Twist::from_vector(const Vector6& v) {
  return Twist{v.head<3>(), v.tail<3>()};
}

Matrix4 Pose::matrix() const {
  Matrix4 m = Matrix4::Identity();
  m.topLeftCorner<3, 3>() = rotation_.matrix();
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Eigen::Matrix<double, 3, 4> Pose::matrix3x4() const {
  Eigen::Matrix<double, 3, 4> m;
  m.leftCols<3>() = rotation_.matrix();
  m.col(3) = translation_;
  return m;
}

Pose Pose::operator*(const Pose& other) const {
  Pose out(rotation_ * other.rotation_,
           rotation_ * other.translation_ + translation_,
           std::max(chain_, other.chain_) + 1);
  if (out.chain_ > kRenormalizeChain) {
    out.rotation_ = out.rotation_.renormalized();
    out.chain_ = 0;
  }
  return out;
}

Pose Pose::inverse() const {
  const Rotation rt = rotation_.transposed();
  return Pose(rt, -(rt * translation_), chain_);
}

Vector3 Pose::operator*(const Vector3& p) const {
  return rotation_ * p + translation_;
}

Matrix6 Pose::adjoint() const {
  Matrix6 ad = Matrix6::Zero();
  const Matrix3& r = rotation_.matrix();
  ad.topLeftCorner<3, 3>() = r;
  ad.bottomRightCorner<3, 3>() = r;
  ad.topRightCorner<3, 3>() = skew(translation_) * r;
  return ad;
}

Pose Pose::renormalized() const {
  return Pose(rotation_.renormalized(), translation_, 0);
}

bool Pose::bitwise_equal(const Pose& a, const Pose& b) {
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (a.rotation().matrix()(r, c) != b.rotation().matrix()(r, c))
        return false;
    }
    if (a.translation()(r) != b.translation()(r)) return false;
  }
  return true;
}

Rotation so3_exp(const Vector3& phi) {
  const double theta = phi.norm();
  const Matrix3 omega = skew(phi);
  Matrix3 m;
  if (theta < kSmallAngle) {
    m = Matrix3::Identity() + omega + 0.5 * omega * omega +
        (1.0 / 6.0) * omega * omega * omega;
  } else {
    const double half = 0.5 * theta;
    const double s = std::sin(half);
    // (1 - cos t)/t^2 written cancellation-free as 2 sin^2(t/2)/t^2.
    const double c1 = std::sin(theta) / theta;
    const double c2 = 2.0 * s * s / (theta * theta);
    m = Matrix3::Identity() + c1 * omega + c2 * omega * omega;
  }
  return Rotation::from_matrix(m, 1e-9);
}

Vector3 so3_log(const Rotation& r) {
  const Matrix3& m = r.matrix();
  const Vector3 w = unskew(0.5 * (m - m.transpose()));  // sin(theta) * axis
  const double cos_theta =
      std::clamp(0.5 * (m.trace() - 1.0), -1.0, 1.0);
  const double theta = std::acos(cos_theta);

  if (theta < kSmallAngle) {
    // theta/sin(theta) ~= 1 + theta^2/6, with sin(theta) = |w|.
    return w * (1.0 + w.squaredNorm() / 6.0);
  }

  if (theta > kPi - 1e-3) {
    // Near pi the antisymmetric part vanishes; recover the axis from the
    // symmetric part, whose unit eigenvalue belongs to the axis.
    Eigen::SelfAdjointEigenSolver<Matrix3> eig(0.5 * (m + m.transpose()));
    Vector3 axis = eig.eigenvectors().col(2);
    const double sin_theta = std::clamp(w.norm(), 0.0, 1.0);
    const double angle = kPi - std::asin(sin_theta);
    if (sin_theta > 1e-11) {
      if (axis.dot(w) < 0.0) axis = -axis;
    } else {
      for (int i = 0; i < 3; ++i) {
        if (std::abs(axis[i]) > 1e-9) {
          if (axis[i] < 0.0) axis = -axis;
          break;
        }
      }
    }
    return angle * axis;
  }

  return (theta / std::sin(theta)) * w;
}

Matrix3 so3_left_jacobian(const Vector3& phi) {
  const double theta = phi.norm();
  const Matrix3 omega = skew(phi);
  if (theta < kSmallAngle) {
    return Matrix3::Identity() + 0.5 * omega + (1.0 / 6.0) * omega * omega +
           (1.0 / 24.0) * omega * omega * omega;
  }
  const double half = 0.5 * theta;
  const double s = std::sin(half);
  const double c1 = 2.0 * s * s / (theta * theta);
  const double c2 = (theta - std::sin(theta)) / (theta * theta * theta);
  return Matrix3::Identity() + c1 * omega + c2 * omega * omega;
}

Matrix3 so3_left_jacobian_inverse(const Vector3& phi) {
  const double theta = phi.norm();
  const Matrix3 omega = skew(phi);
  double c;
  if (theta < 1e-2) {
    const double t2 = theta * theta;
    c = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    const double half = 0.5 * theta;
    const double s = std::sin(half);
    // 1 - cos(theta) = 2 sin^2(theta/2); stable through theta = pi.
    c = (1.0 -
         theta * std::sin(theta) / (4.0 * s * s)) /
        (theta * theta);
  }
  return Matrix3::Identity() - 0.5 * omega + c * omega * omega;
}

Pose se3_exp(const Twist& xi) {
  const Rotation r = so3_exp(xi.phi);
  const Vector3 t = so3_left_jacobian(xi.phi) * xi.rho;
  return Pose(r, t);
}

Twist se3_log(const Pose& t) {
  Twist xi;
  xi.phi = so3_log(t.rotation());
  xi.rho = so3_left_jacobian_inverse(xi.phi) * t.translation();
  return xi;
}

namespace {

// The Q block of the SE(3) left Jacobian (Barfoot-style closed form).
Matrix3 se3_jacobian_q(const Twist& xi) {
  const Matrix3 rx = skew(xi.rho);
  const Matrix3 px = skew(xi.phi);
  const double theta = xi.phi.norm();

  double c2, c3, c4;
  if (theta < 1e-2) {
    const double t2 = theta * theta;
    c2 = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
    c3 = 1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0;
    c4 = 1.0 / 120.0 - t2 / 2520.0;
  } else {
    const double s = std::sin(theta);
    const double co = std::cos(theta);
    const double t3 = theta * theta * theta;
    c2 = (theta - s) / t3;
    c3 = (theta * theta + 2.0 * co - 2.0) / (2.0 * t3 * theta);
    c4 = (2.0 * theta - 3.0 * s + theta * co) / (2.0 * t3 * theta * theta);
  }

  const Matrix3 pxrx = px * rx;
  const Matrix3 rxpx = rx * px;
  const Matrix3 pxrxpx = pxrx * px;
  return 0.5 * rx + c2 * (pxrx + rxpx + pxrxpx) +
         c3 * (px * pxrx + rxpx * px - 3.0 * pxrxpx) +
         c4 * (pxrxpx * px + px * pxrxpx);
}

}  // namespace

Matrix6 se3_left_jacobian_inverse(const Twist& xi) {
  const Matrix3 ji = so3_left_jacobian_inverse(xi.phi);
  const Matrix3 q = se3_jacobian_q(xi);
  Matrix6 out = Matrix6::Zero();
  out.topLeftCorner<3, 3>() = ji;
  out.bottomRightCorner<3, 3>() = ji;
  out.topRightCorner<3, 3>() = -ji * q * ji;
  return out;
}

Matrix6 se3_ad(const Twist& xi) {
  Matrix6 out = Matrix6::Zero();
  const Matrix3 px = skew(xi.phi);
  out.topLeftCorner<3, 3>() = px;
  out.bottomRightCorner<3, 3>() = px;
  out.topRightCorner<3, 3>() = skew(xi.rho);
  return out;
}

Pose pose_from_euler_edge(const EulerEdge& e) {
  const double ca = std::cos(e.euler.x()), sa = std::sin(e.euler.x());
  const double cb = std::cos(e.euler.y()), sb = std::sin(e.euler.y());
  const double cc = std::cos(e.euler.z()), sc = std::sin(e.euler.z());
  Matrix3 rx, ry, rz;
  rx << 1, 0, 0, 0, ca, -sa, 0, sa, ca;
  ry << cb, 0, sb, 0, 1, 0, -sb, 0, cb;
  rz << cc, -sc, 0, sc, cc, 0, 0, 0, 1;
  return Pose(Rotation::from_matrix(rz * ry * rx, 1e-9), e.translation);
}

EulerEdge euler_edge_from_pose(const Pose& t) {
  const Matrix3& m = t.rotation().matrix();
  const double ry = std::asin(std::clamp(-m(2, 0), -1.0, 1.0));
  if (kPi / 2.0 - std::abs(ry) < 1e-6) {
    throw std::domain_error(
        "euler_edge_from_pose: pitch within 1e-6 of +-pi/2 (gimbal lock)");
  }
  double rx = std::atan2(m(2, 1), m(2, 2));
  double rz = std::atan2(m(1, 0), m(0, 0));
  if (rx == -kPi) rx = kPi;
  if (rz == -kPi) rz = kPi;
  return EulerEdge{Vector3(rx, ry, rz), t.translation()};
}

std::optional<PixelProjection> project_pixel(const Vector3& pixel,
                                             double depth, const Pose& motion,
                                             const CameraIntrinsics& K) {
  if (!(K.fx > 0.0) || !(K.fy > 0.0)) {
    throw std::invalid_argument("project_pixel: focal lengths must be > 0");
  }
  if (!(depth > 0.0)) {
    throw std::invalid_argument("project_pixel: depth must be > 0");
  }
  if (pixel.z() == 0.0) {
    throw std::invalid_argument(
        "project_pixel: homogeneous pixel has zero scale");
  }
  const double u = pixel.x() / pixel.z();
  const double v = pixel.y() / pixel.z();
  const Vector3 point((u - K.cx) / K.fx * depth, (v - K.cy) / K.fy * depth,
                      depth);
  const Vector3 moved = motion * point;
  if (!(moved.z() > 0.0)) return std::nullopt;
  PixelProjection out;
  out.pixel = Eigen::Vector2d(K.fx * moved.x() / moved.z() + K.cx,
                              K.fy * moved.y() / moved.z() + K.cy);
  out.depth = moved.z();
  return out;
}

}  // namespace pgslam
