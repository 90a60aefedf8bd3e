#pragma once

#include <string_view>

#include <Eigen/Core>

#include "octrasl/error.hpp"
#include "octrasl/image.hpp"

namespace octrasl {

enum class TransformKind { translation, rigid, similarity, affine };

/// Parameter count: 2, 3, 4 and 6 for translation, rigid, similarity, affine.
int dof(TransformKind kind);
std::string_view to_string(TransformKind kind);
TransformKind parse_transform_kind(std::string_view name);

/// Parameters of one planar warp. Layouts:
///   translation (tx, ty)
///   rigid       (tx, ty, theta)          theta in radians
///   similarity  (tx, ty, theta, scale)   scale > 0
///   affine      (a11, a12, a21, a22, tx, ty)
///
/// The transform maps source coordinates to warped (aligned) coordinates.
/// Coordinates are measured from the center of the image or frame, so a
/// rotation turns the content about the middle of the picture.
struct TransformParams {
  TransformKind kind = TransformKind::translation;
  Vector p = Vector::Zero(2);

  static TransformParams identity(TransformKind kind);
  static TransformParams translation(double tx, double ty);
  static TransformParams rigid(double tx, double ty, double theta);
  static TransformParams similarity(double tx, double ty, double theta, double scale);
  static TransformParams affine(double a11, double a12, double a21, double a22, double tx, double ty);

  /// Recovers parameters of `kind` from a homogeneous matrix of that family.
  static TransformParams from_matrix(TransformKind kind, const Eigen::Matrix3d& m);

  /// Throws invalid-transform when the parameters break the model invariants.
  void validate() const;
};

Eigen::Matrix3d to_matrix(const TransformParams& t);
Eigen::Vector2d apply(const TransformParams& t, const Eigen::Vector2d& point);
TransformParams inverse(const TransformParams& t);
/// outer o inner, i.e. apply `inner` first.
TransformParams compose(const TransformParams& outer, const TransformParams& inner);

/// Additive parameter update p <- p + dt. A similarity scale is clamped to at
/// least 1e-3 before validation.
TransformParams compose_update(const TransformParams& t, const Vector& dt);

struct WarpResult {
  Image image;
  Mask valid;
};

/// Inverse warp onto `frame`: output pixel q samples `img` at t^-1(q) with
/// Catmull-Rom bicubic interpolation. Near the border the stencil continues the
/// image linearly past its edge. Samples whose source falls outside the pixel
/// footprint of `img` are marked invalid and set to zero.
WarpResult warp(const Image& img, const TransformParams& t, Frame frame);

/// Same sampling as `warp`, but out-of-footprint pixels take the value at the
/// nearest point of the footprint instead of zero.
WarpResult warp_extended(const Image& img, const TransformParams& t, Frame frame);

struct Gradients {
  Image gx;
  Image gy;
};

/// Central differences inside, one-sided differences on the border.
Gradients image_gradients(const Image& img);

/// d(vectorized warped image)/d(parameters), pixels x dof.
struct JacobianBlock {
  Matrix entries;

  Index pixels() const { return entries.rows(); }
  Index dof() const { return entries.cols(); }
};

/// Jacobian of the raw warped vector (no normalization). Rows of invalid
/// pixels are zero.
JacobianBlock warp_jacobian(const Image& img, const TransformParams& t, Frame frame);

/// A warped image restricted to a pixel set, scaled to unit norm, together with
/// the derivative of that unit vector with respect to the parameters.
struct Linearization {
  Vector values;
  double norm = 0.0;
  JacobianBlock jacobian;
};

/// Rows outside `mask` are zero in both the values and the Jacobian.
/// Throws degenerate-image when the masked warp is all zero.
Linearization linearize(const Image& img, const TransformParams& t, Frame frame, const Mask& mask);

/// Jacobian of the unit-normalized warped image over its own validity mask.
/// Requires at least half of the frame to be valid.
JacobianBlock transform_jacobian(const Image& img, const TransformParams& t, Frame frame);
JacobianBlock transform_jacobian(const Image& img, const TransformParams& t, Frame frame, const Mask& mask);

}  // namespace octrasl
