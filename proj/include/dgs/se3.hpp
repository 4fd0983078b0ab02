#ifndef DGS_SE3_HPP
#define DGS_SE3_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dgs {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Vec9 = Eigen::Matrix<double, 9, 1>;

/// Rigid transform: rotation matrix plus translation (meters).
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  Pose operator*(const Pose& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  Pose inverse() const {
    Mat3 rt = rotation.transpose();
    return {rt, -rt * translation};
  }
};

/// Skew-symmetric matrix S(v) with S(v) * w = v x w.
inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

/// First-order approximation I + S(theta) of the exponential map.
inline Mat3 first_order_exp(const Vec3& theta) { return Mat3::Identity() + skew(theta); }

/// Rodrigues formula. Small angles use the Taylor expansion of the coefficients.
inline Mat3 exp_map(const Vec3& theta) {
  const double angle_sq = theta.squaredNorm();
  const Mat3 s = skew(theta);
  double a;
  double b;
  if (angle_sq < 1e-10) {
    a = 1.0 - angle_sq / 6.0;
    b = 0.5 - angle_sq / 24.0;
  } else {
    const double angle = std::sqrt(angle_sq);
    a = std::sin(angle) / angle;
    b = (1.0 - std::cos(angle)) / angle_sq;
  }
  return Mat3::Identity() + a * s + b * s * s;
}

struct LogResult {
  Vec3 theta = Vec3::Zero();
  // Set when the input angle is within numerical reach of pi and the axis
  // was recovered from the symmetric part.
  bool near_pi = false;
};

namespace detail {

inline Vec3 axis_sign_canonical(Vec3 axis) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(axis[i]) > 1e-12) {
      if (axis[i] < 0.0) axis = -axis;
      break;
    }
  }
  return axis;
}

}  // namespace detail

/// Logarithm map with diagnostics about the angle-pi branch.
inline LogResult log_map_checked(const Mat3& r) {
  const Vec3 vee(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  // |vee| = 2 sin(angle); atan2 keeps the angle accurate near 0 and pi.
  const double sin_angle = 0.5 * vee.norm();
  const double angle = std::atan2(sin_angle, 0.5 * (r.trace() - 1.0));

  if (angle < 1e-7) {
    // sin(a)/a ~ 1 - a^2/6
    return {0.5 * (1.0 + angle * angle / 6.0) * vee, false};
  }
  if (std::numbers::pi - angle > 1e-6) {
    return {angle / (2.0 * sin_angle) * vee, false};
  }

  // Near pi: the antisymmetric part vanishes. (R + I) / 2 = a a^T.
  const Mat3 sym = 0.5 * (0.5 * (r + r.transpose()) + Mat3::Identity());
  int k = 0;
  sym.diagonal().maxCoeff(&k);
  Vec3 axis = sym.col(k) / std::sqrt(std::max(sym(k, k), 1e-300));
  axis.normalize();
  axis = detail::axis_sign_canonical(axis);
  // Keep the sign consistent with the residual antisymmetric part when it is
  // still informative.
  if (vee.norm() > 1e-12 && axis.dot(vee) < 0.0) axis = -axis;
  return {angle * axis, true};
}

inline Vec3 log_map(const Mat3& r) { return log_map_checked(r).theta; }

/// Rotation angle in [0, pi].
inline double rotation_angle(const Mat3& r) { return log_map(r).norm(); }

struct Projection {
  Mat3 rotation = Mat3::Identity();
  // True when the smallest singular value is zero (to working precision),
  // in which case the nearest rotation is not unique.
  bool rank_deficient = false;
};

/// Nearest rotation in Frobenius norm, via SVD with the determinant fix on
/// the column paired with the smallest singular value.
inline Projection project_to_so3_checked(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  const Vec3 sv = svd.singularValues();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
  Projection out;
  out.rotation = u * v.transpose();
  const double scale = std::max(sv[0], 1e-300);
  out.rank_deficient = !(sv[2] > 1e-12 * scale) || !(sv[0] > 0.0);
  if (!(sv[0] > 0.0)) out.rotation = Mat3::Identity();
  return out;
}

inline Mat3 project_to_so3(const Mat3& m) { return project_to_so3_checked(m).rotation; }

/// ||R_b - R_a * R_ab||_F^2, always in [0, 8] for valid rotations.
inline double chordal_residual(const Mat3& r_a, const Mat3& r_b, const Mat3& r_ab) {
  return (r_b - r_a * r_ab).squaredNorm();
}

inline bool is_rotation(const Mat3& r, double tol = 1e-9) {
  return (r.transpose() * r - Mat3::Identity()).norm() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

/// vec(R^T): the rows of R stacked into one 9-vector.
inline Vec9 rows_to_vec(const Mat3& r) {
  Vec9 v;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) v[3 * i + j] = r(i, j);
  return v;
}

inline Mat3 vec_to_rows(const Eigen::Ref<const Vec9>& v) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = v[3 * i + j];
  return r;
}

inline Mat3 rot_x(double a) { return exp_map(Vec3(a, 0, 0)); }
inline Mat3 rot_y(double a) { return exp_map(Vec3(0, a, 0)); }
inline Mat3 rot_z(double a) { return exp_map(Vec3(0, 0, a)); }

// Quaternions only appear at the file boundary.
inline Eigen::Quaterniond to_quaternion(const Mat3& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

inline Mat3 from_quaternion(const Eigen::Quaterniond& q) { return q.normalized().toRotationMatrix(); }

}  // namespace dgs

#endif  // DGS_SE3_HPP
