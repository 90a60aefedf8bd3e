#include "octrasl/transform.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/LU>

namespace octrasl {

namespace {

constexpr double kMinScale = 1e-3;
constexpr double kMinDeterminant = 1e-9;

struct Sample {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

// Catmull-Rom (Keys, a = -0.5) weights and their derivatives for taps at
// offsets -1, 0, 1, 2 from floor(u), with f = u - floor(u).
void cubic_weights(double f, std::array<double, 4>& w, std::array<double, 4>& dw) {
  const double f2 = f * f;
  const double f3 = f2 * f;
  w = {-0.5 * f3 + f2 - 0.5 * f, 1.5 * f3 - 2.5 * f2 + 1.0, -1.5 * f3 + 2.0 * f2 + 0.5 * f, 0.5 * f3 - 0.5 * f2};
  dw = {-1.5 * f2 + 2.0 * f - 0.5, 4.5 * f2 - 5.0 * f, -4.5 * f2 + 4.0 * f + 0.5, 1.5 * f2 - f};
}

// Two-tap representation of a possibly out-of-range index: beyond an edge the
// image continues linearly through its two outermost pixels.
struct Tap {
  int a;
  int b;
  double wa;
  double wb;
};

Tap tap(int i, int n) {
  if (i < 0) return {0, 1, 1.0 - i, static_cast<double>(i)};
  if (i > n - 1) {
    const double d = i - (n - 1);
    return {n - 1, n - 2, 1.0 + d, -d};
  }
  return {i, i, 1.0, 0.0};
}

// Interpolates at pixel coordinates (ux, uy), clamped to the pixel footprint.
// Linear continuation past the edges keeps ramps exact up to the footprint.
Sample sample_bicubic(const Image& img, double ux, double uy) {
  const int w = img.width();
  const int h = img.height();
  ux = std::clamp(ux, -0.5, w - 0.5);
  uy = std::clamp(uy, -0.5, h - 0.5);
  const double fx0 = std::floor(ux);
  const double fy0 = std::floor(uy);
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);

  std::array<double, 4> wx, dwx, wy, dwy;
  cubic_weights(ux - fx0, wx, dwx);
  cubic_weights(uy - fy0, wy, dwy);

  Sample s;
  if (x0 >= 1 && x0 + 2 <= w - 1 && y0 >= 1 && y0 + 2 <= h - 1) {
    for (int j = 0; j < 4; ++j) {
      const int yy = y0 - 1 + j;
      double row = 0.0;
      double drow = 0.0;
      for (int k = 0; k < 4; ++k) {
        const double v = img(x0 - 1 + k, yy);
        row += wx[k] * v;
        drow += dwx[k] * v;
      }
      s.value += wy[j] * row;
      s.dx += wy[j] * drow;
      s.dy += dwy[j] * row;
    }
    return s;
  }

  std::array<Tap, 4> tx, ty;
  for (int k = 0; k < 4; ++k) {
    tx[k] = tap(x0 - 1 + k, w);
    ty[k] = tap(y0 - 1 + k, h);
  }
  auto at = [&](int k, int yy) { return tx[k].wa * img(tx[k].a, yy) + tx[k].wb * img(tx[k].b, yy); };
  for (int j = 0; j < 4; ++j) {
    double row = 0.0;
    double drow = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double v = ty[j].wa * at(k, ty[j].a) + ty[j].wb * at(k, ty[j].b);
      row += wx[k] * v;
      drow += dwx[k] * v;
    }
    s.value += wy[j] * row;
    s.dx += wy[j] * drow;
    s.dy += dwy[j] * row;
  }
  return s;
}

Eigen::Vector2d center_of(Frame f) { return {0.5 * (f.width - 1), 0.5 * (f.height - 1)}; }

Eigen::Matrix2d rotation(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

// Columns are (dT/dp_k) applied to the homogeneous point (s, 1).
Eigen::Matrix<double, 2, Eigen::Dynamic> parameter_action(const TransformParams& t, const Eigen::Vector2d& s) {
  Eigen::Matrix<double, 2, Eigen::Dynamic> a(2, dof(t.kind));
  const Eigen::Vector2d ex(1.0, 0.0);
  const Eigen::Vector2d ey(0.0, 1.0);
  switch (t.kind) {
    case TransformKind::translation:
      a << ex, ey;
      break;
    case TransformKind::rigid: {
      const double th = t.p(2);
      const Eigen::Vector2d d_theta(-std::sin(th) * s.x() - std::cos(th) * s.y(),
                                    std::cos(th) * s.x() - std::sin(th) * s.y());
      a << ex, ey, d_theta;
      break;
    }
    case TransformKind::similarity: {
      const double th = t.p(2);
      const double scale = t.p(3);
      const Eigen::Vector2d rs = rotation(th) * s;
      const Eigen::Vector2d d_theta(-scale * rs.y(), scale * rs.x());
      a << ex, ey, d_theta, rs;
      break;
    }
    case TransformKind::affine:
      a << Eigen::Vector2d(s.x(), 0.0), Eigen::Vector2d(s.y(), 0.0), Eigen::Vector2d(0.0, s.x()),
          Eigen::Vector2d(0.0, s.y()), ex, ey;
      break;
  }
  return a;
}

struct Sampled {
  Vector values;
  Mask valid;
  Matrix jacobian;  // empty unless requested
};

Sampled sample_warp(const Image& img, const TransformParams& t, Frame frame, bool with_jacobian) {
  if (frame.width < 2 || frame.height < 2) {
    throw Error(ErrorKind::invalid_input, "warp frame must be at least 2x2");
  }
  t.validate();
  const Eigen::Matrix3d m = to_matrix(t);
  const Eigen::Matrix2d a = m.topLeftCorner<2, 2>();
  if (std::abs(a.determinant()) <= kMinDeterminant) {
    throw Error(ErrorKind::invalid_transform, "transform is not invertible");
  }
  const Eigen::Matrix2d a_inv = a.inverse();
  const Eigen::Vector2d shift = m.topRightCorner<2, 1>();
  const Eigen::Vector2d frame_c = center_of(frame);
  const Eigen::Vector2d src_c = center_of(img.frame());
  const double lo = -0.5;
  const double hi_x = img.width() - 0.5;
  const double hi_y = img.height() - 0.5;
  const int k = dof(t.kind);

  Sampled out;
  out.values.resize(frame.pixels());
  out.valid.assign(static_cast<std::size_t>(frame.pixels()), 0);
  if (with_jacobian) out.jacobian.resize(frame.pixels(), k);

  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      const Index j = static_cast<Index>(y) * frame.width + x;
      const Eigen::Vector2d q(x - frame_c.x(), y - frame_c.y());
      const Eigen::Vector2d s = a_inv * (q - shift);
      const Eigen::Vector2d u = s + src_c;
      const Sample smp = sample_bicubic(img, u.x(), u.y());
      out.values(j) = smp.value;
      out.valid[static_cast<std::size_t>(j)] = (u.x() >= lo && u.x() <= hi_x && u.y() >= lo && u.y() <= hi_y) ? 1 : 0;
      if (with_jacobian) {
        // d(source point)/dp_k = -A^-1 (dT/dp_k)(s, 1)
        const Eigen::Matrix<double, 2, Eigen::Dynamic> du = -a_inv * parameter_action(t, s);
        out.jacobian.row(j) = smp.dx * du.row(0) + smp.dy * du.row(1);
      }
    }
  }
  return out;
}

}  // namespace

int dof(TransformKind kind) {
  switch (kind) {
    case TransformKind::translation: return 2;
    case TransformKind::rigid: return 3;
    case TransformKind::similarity: return 4;
    case TransformKind::affine: return 6;
  }
  return 0;
}

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::translation: return "translation";
    case TransformKind::rigid: return "rigid";
    case TransformKind::similarity: return "similarity";
    case TransformKind::affine: return "affine";
  }
  return "unknown";
}

TransformKind parse_transform_kind(std::string_view name) {
  for (auto kind : {TransformKind::translation, TransformKind::rigid, TransformKind::similarity,
                    TransformKind::affine}) {
    if (name == to_string(kind)) return kind;
  }
  throw Error(ErrorKind::invalid_input, "unknown transform model '" + std::string(name) + "'");
}

TransformParams TransformParams::identity(TransformKind kind) {
  TransformParams t;
  t.kind = kind;
  t.p = Vector::Zero(dof(kind));
  if (kind == TransformKind::similarity) t.p(3) = 1.0;
  if (kind == TransformKind::affine) {
    t.p(0) = 1.0;
    t.p(3) = 1.0;
  }
  return t;
}

TransformParams TransformParams::translation(double tx, double ty) {
  TransformParams t{TransformKind::translation, Vector(2)};
  t.p << tx, ty;
  return t;
}

TransformParams TransformParams::rigid(double tx, double ty, double theta) {
  TransformParams t{TransformKind::rigid, Vector(3)};
  t.p << tx, ty, theta;
  return t;
}

TransformParams TransformParams::similarity(double tx, double ty, double theta, double scale) {
  TransformParams t{TransformKind::similarity, Vector(4)};
  t.p << tx, ty, theta, scale;
  return t;
}

TransformParams TransformParams::affine(double a11, double a12, double a21, double a22, double tx, double ty) {
  TransformParams t{TransformKind::affine, Vector(6)};
  t.p << a11, a12, a21, a22, tx, ty;
  return t;
}

TransformParams TransformParams::from_matrix(TransformKind kind, const Eigen::Matrix3d& m) {
  const double tx = m(0, 2);
  const double ty = m(1, 2);
  switch (kind) {
    case TransformKind::translation:
      return translation(tx, ty);
    case TransformKind::rigid:
      return rigid(tx, ty, std::atan2(m(1, 0), m(0, 0)));
    case TransformKind::similarity:
      return similarity(tx, ty, std::atan2(m(1, 0), m(0, 0)), std::hypot(m(0, 0), m(1, 0)));
    case TransformKind::affine:
      return affine(m(0, 0), m(0, 1), m(1, 0), m(1, 1), tx, ty);
  }
  throw Error(ErrorKind::invalid_transform, "unknown transform kind");
}

void TransformParams::validate() const {
  if (p.size() != dof(kind)) {
    throw Error(ErrorKind::invalid_transform, std::string(to_string(kind)) + " transform needs " +
                                                  std::to_string(dof(kind)) + " parameters, got " +
                                                  std::to_string(p.size()));
  }
  if (!p.allFinite()) throw Error(ErrorKind::invalid_transform, "transform parameters are not finite");
  if (kind == TransformKind::similarity && !(p(3) > 0.0)) {
    throw Error(ErrorKind::invalid_transform, "similarity scale must be positive");
  }
  if (kind == TransformKind::affine && std::abs(p(0) * p(3) - p(1) * p(2)) <= kMinDeterminant) {
    throw Error(ErrorKind::invalid_transform, "affine linear part is singular");
  }
}

Eigen::Matrix3d to_matrix(const TransformParams& t) {
  t.validate();
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  switch (t.kind) {
    case TransformKind::translation:
      m(0, 2) = t.p(0);
      m(1, 2) = t.p(1);
      break;
    case TransformKind::rigid:
      m.topLeftCorner<2, 2>() = rotation(t.p(2));
      m(0, 2) = t.p(0);
      m(1, 2) = t.p(1);
      break;
    case TransformKind::similarity:
      m.topLeftCorner<2, 2>() = t.p(3) * rotation(t.p(2));
      m(0, 2) = t.p(0);
      m(1, 2) = t.p(1);
      break;
    case TransformKind::affine:
      m(0, 0) = t.p(0);
      m(0, 1) = t.p(1);
      m(1, 0) = t.p(2);
      m(1, 1) = t.p(3);
      m(0, 2) = t.p(4);
      m(1, 2) = t.p(5);
      break;
  }
  return m;
}

Eigen::Vector2d apply(const TransformParams& t, const Eigen::Vector2d& point) {
  const Eigen::Matrix3d m = to_matrix(t);
  return m.topLeftCorner<2, 2>() * point + m.topRightCorner<2, 1>();
}

TransformParams inverse(const TransformParams& t) {
  return TransformParams::from_matrix(t.kind, to_matrix(t).inverse());
}

TransformParams compose(const TransformParams& outer, const TransformParams& inner) {
  if (outer.kind != inner.kind) throw Error(ErrorKind::invalid_transform, "cannot compose transforms of different models");
  return TransformParams::from_matrix(outer.kind, to_matrix(outer) * to_matrix(inner));
}

TransformParams compose_update(const TransformParams& t, const Vector& dt) {
  if (dt.size() != dof(t.kind)) {
    throw Error(ErrorKind::invalid_transform, "update has " + std::to_string(dt.size()) + " entries, model has " +
                                                  std::to_string(dof(t.kind)) + " parameters");
  }
  TransformParams out = t;
  out.p += dt;
  if (out.kind == TransformKind::similarity) out.p(3) = std::max(out.p(3), kMinScale);
  out.validate();
  return out;
}

WarpResult warp(const Image& img, const TransformParams& t, Frame frame) {
  Sampled s = sample_warp(img, t, frame, false);
  for (Index j = 0; j < s.values.size(); ++j) {
    if (!s.valid[static_cast<std::size_t>(j)]) s.values(j) = 0.0;
  }
  return {Image(frame, s.values), std::move(s.valid)};
}

WarpResult warp_extended(const Image& img, const TransformParams& t, Frame frame) {
  Sampled s = sample_warp(img, t, frame, false);
  return {Image(frame, s.values), std::move(s.valid)};
}

Gradients image_gradients(const Image& img) {
  const int w = img.width();
  const int h = img.height();
  Image gx(w, h);
  Image gy(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x == 0) gx(x, y) = img(1, y) - img(0, y);
      else if (x == w - 1) gx(x, y) = img(w - 1, y) - img(w - 2, y);
      else gx(x, y) = 0.5 * (img(x + 1, y) - img(x - 1, y));

      if (y == 0) gy(x, y) = img(x, 1) - img(x, 0);
      else if (y == h - 1) gy(x, y) = img(x, h - 1) - img(x, h - 2);
      else gy(x, y) = 0.5 * (img(x, y + 1) - img(x, y - 1));
    }
  }
  return {std::move(gx), std::move(gy)};
}

JacobianBlock warp_jacobian(const Image& img, const TransformParams& t, Frame frame) {
  Sampled s = sample_warp(img, t, frame, true);
  for (Index j = 0; j < s.jacobian.rows(); ++j) {
    if (!s.valid[static_cast<std::size_t>(j)]) s.jacobian.row(j).setZero();
  }
  return {std::move(s.jacobian)};
}

Linearization linearize(const Image& img, const TransformParams& t, Frame frame, const Mask& mask) {
  if (mask.size() != static_cast<std::size_t>(frame.pixels())) {
    throw Error(ErrorKind::invalid_input, "mask size does not match the frame");
  }
  Sampled s = sample_warp(img, t, frame, true);
  for (Index j = 0; j < s.values.size(); ++j) {
    if (!mask[static_cast<std::size_t>(j)]) {
      s.values(j) = 0.0;
      s.jacobian.row(j).setZero();
    }
  }
  const double norm = s.values.norm();
  if (!(norm > 1e-12)) throw Error(ErrorKind::degenerate_image, "warped image is zero on the valid pixels");

  Linearization out;
  out.norm = norm;
  out.values = s.values / norm;
  // d(w/|w|) = (I - v v^T) dw / |w|
  const Eigen::RowVectorXd proj = out.values.transpose() * s.jacobian;
  out.jacobian.entries = (s.jacobian - out.values * proj) / norm;
  return out;
}

JacobianBlock transform_jacobian(const Image& img, const TransformParams& t, Frame frame) {
  const WarpResult w = warp(img, t, frame);
  const auto valid = static_cast<double>(std::count(w.valid.begin(), w.valid.end(), std::uint8_t{1}));
  if (valid < 0.5 * static_cast<double>(frame.pixels())) {
    throw Error(ErrorKind::excessive_motion, "fewer than half of the warped pixels are valid");
  }
  return linearize(img, t, frame, w.valid).jacobian;
}

JacobianBlock transform_jacobian(const Image& img, const TransformParams& t, Frame frame, const Mask& mask) {
  return linearize(img, t, frame, mask).jacobian;
}

}  // namespace octrasl
