#include <festoon/scaling.hpp>

#include <festoon/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace festoon {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Argument of the outer sqrt in the critical radius.
double radius_sq_argument(double lambda, int dim) {
  const double log_lambda = std::log(lambda);
  return 2.0 * log_lambda -
         std::log(2.0 * std::pow(2.0 * kPi, dim) * log_lambda);
}

// sin(t)/t, stable near 0.
double sinc(double t) {
  if (std::abs(t) < 1e-8) return 1.0 - t * t / 6.0;
  return std::sin(t) / t;
}

}  // namespace

double min_lambda(int dim) {
  // Smallest lambda with radius_sq_argument >= 1. The argument is increasing
  // for log lambda > 1/2, so bisection on log lambda is safe.
  double lo = 1.0, hi = 60.0;  // log-lambda bounds; argument(60) >> 1
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (radius_sq_argument(std::exp(mid), dim) < 1.0)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp(hi);
}

double critical_radius(double lambda, int dim) {
  if (!(lambda > 1.0)) throw LambdaTooSmall("intensity must exceed 1");
  const double arg = radius_sq_argument(lambda, dim);
  if (arg < 1.0)
    throw LambdaTooSmall("intensity below the critical-radius threshold");
  return std::sqrt(arg);
}

Vecd exp_map(const Vecd& v) {
  const Index dm1 = v.size();
  Vecd u = Vecd::Zero(dm1 + 1);
  const double t = v.norm();
  u(dm1) = std::cos(t);
  if (t > 0.0) u.head(dm1) = (std::sin(t) / t) * v;
  return u;
}

Vecd inv_exp_map(const Vecd& u) {
  const Index dm1 = u.size() - 1;
  const double tn = u.head(dm1).norm();
  Vecd v = Vecd::Zero(dm1);
  if (tn < 1e-300) {
    if (u(dm1) < 0.0) v(dm1 - 1) = kPi;  // antipode convention
    return v;
  }
  const double theta = std::atan2(tn, u(dm1));  // in (0, pi)
  v = (theta / tn) * u.head(dm1);
  return v;
}

ScalingContext ScalingContext::create(int dim, double lambda) {
  Vecd pole = Vecd::Zero(dim);
  pole(dim - 1) = 1.0;
  return create(dim, lambda, pole);
}

ScalingContext ScalingContext::create(int dim, double lambda,
                                      const Vecd& pole) {
  if (dim < 2) throw ConfigError("scaling context requires dim >= 2");
  if (pole.size() != dim || std::abs(pole.norm() - 1.0) > 1e-9)
    throw ConfigError("pole must be a unit d-vector");
  ScalingContext ctx;
  ctx.dim = dim;
  ctx.lambda = lambda;
  ctx.r_lambda = critical_radius(lambda, dim);
  ctx.pole = pole;
  Vecd ed = Vecd::Zero(dim);
  ed(dim - 1) = 1.0;
  if ((pole - ed).norm() < 1e-14) {
    ctx.frame = Matd::Identity(dim, dim);
  } else {
    // Rows: an orthonormal basis of pole's complement, then pole itself,
    // so frame * pole = e_d exactly and frame is orthogonal.
    Matd frame(dim, dim);
    frame.topRows(dim - 1) = orthonormal_complement<double>(pole).transpose();
    frame.row(dim - 1) = pole.transpose();
    ctx.frame = frame;
  }
  return ctx;
}

double ScalingContext::spatial_cap() const { return kPi * r_lambda; }

ScaledPoint scale_transform(const Vecd& x, const ScalingContext& ctx) {
  const double r = x.norm();
  ScaledPoint w;
  if (r < 1e-300) {
    w.v = Vecd::Zero(ctx.dim - 1);
    w.h = ctx.r_lambda * ctx.r_lambda;
    return w;
  }
  const Vecd u = (ctx.frame * x) / r;
  w.v = ctx.r_lambda * inv_exp_map(u);
  w.h = ctx.r_lambda * (ctx.r_lambda - r);
  return w;
}

Vecd inverse_scale_transform(const ScaledPoint& w, const ScalingContext& ctx) {
  const double r = ctx.r_lambda - w.h / ctx.r_lambda;
  const Vecd u = exp_map(w.v / ctx.r_lambda);
  return ctx.frame.transpose() * (r * u);
}

double geodesic_gap(const Vecd& v, const Vecd& v0, const ScalingContext& ctx) {
  const Vecd u = exp_map(v / ctx.r_lambda);
  const Vecd u0 = exp_map(v0 / ctx.r_lambda);
  const double c = std::clamp(u.dot(u0), -1.0, 1.0);
  return std::acos(c);
}

Vecd quasi_paraboloid_boundary(const ScaledPoint& w, const ScalingContext& ctx,
                               ParaboloidSide side, const Matd& v_grid) {
  const double r2 = ctx.r_lambda * ctx.r_lambda;
  Vecd out(v_grid.cols());
  for (Index j = 0; j < v_grid.cols(); ++j) {
    const double e = geodesic_gap(v_grid.col(j), w.v, ctx);
    const double ce = std::cos(e);
    if (side == ParaboloidSide::Up) {
      out(j) = r2 * (1.0 - ce) + w.h * ce;
    } else {
      out(j) = ce > 1e-12 ? r2 - (r2 - w.h) / ce
                          : -std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

double rescaled_intensity_shape(const Vecd& v, double h,
                                const ScalingContext& ctx) {
  const double r2 = ctx.r_lambda * ctx.r_lambda;
  const double vn = v.norm();
  if (h >= r2 || vn >= ctx.spatial_cap()) return 0.0;
  const double radial = std::pow(1.0 - h / r2, ctx.dim - 1) *
                        std::exp(h - h * h / (2.0 * r2));
  const double angular = std::pow(sinc(vn / ctx.r_lambda), ctx.dim - 2);
  return radial * angular;
}

double rescaled_intensity(const Vecd& v, double h, const ScalingContext& ctx) {
  return std::sqrt(2.0 * std::log(ctx.lambda)) / ctx.r_lambda *
         rescaled_intensity_shape(v, h, ctx);
}

double rescaled_volume_density(const Vecd& v, double h,
                               const ScalingContext& ctx) {
  const double r2 = ctx.r_lambda * ctx.r_lambda;
  const double vn = v.norm();
  if (h >= r2 || vn >= ctx.spatial_cap()) return 0.0;
  return std::pow(1.0 - h / r2, ctx.dim - 1) *
         std::pow(sinc(vn / ctx.r_lambda), ctx.dim - 2);
}

PointCloud sample_binomial(Index n, int dim, RngStream& rng) {
  PointCloud cloud(dim, n);
  for (Index j = 0; j < n; ++j)
    for (int i = 0; i < dim; ++i) cloud(i, j) = rng.next_normal();
  return cloud;
}

PointCloud sample_poisson_gaussian(double lambda, int dim, RngStream& rng) {
  const Index n = static_cast<Index>(rng.next_poisson(lambda));
  return sample_binomial(n, dim, rng);
}

double prune_radius(double lambda, int dim, double prune_height) {
  double r = 0.0;
  try {
    r = critical_radius(lambda, dim);
  } catch (const LambdaTooSmall&) {
    return 0.0;
  }
  return std::max(0.0, r - prune_height / r);
}

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline void append_planar_tail_point(PointCloud& cloud, Index j, double r2,
                                     RngStream& rng) {
  const double r = std::sqrt(r2);
  const double theta = kTwoPi * rng.next_uniform();
  cloud(0, j) = r * std::cos(theta);
  cloud(1, j) = r * std::sin(theta);
}

}  // namespace

PointCloud sample_binomial_shell(Index n, double r_min, RngStream& rng) {
  if (r_min <= 0.0) return sample_binomial(n, 2, rng);
  const double a = r_min * r_min;
  PointCloud cloud(2, n);
  Index kept = 0;
  for (Index j = 0; j < n; ++j) {
    const double r2 = -2.0 * std::log(rng.next_uniform());
    if (r2 < a) continue;
    append_planar_tail_point(cloud, kept++, r2, rng);
  }
  cloud.conservativeResize(2, kept);
  return cloud;
}

PointCloud sample_poisson_gaussian_shell(double lambda, double r_min,
                                         RngStream& rng) {
  if (r_min <= 0.0) return sample_poisson_gaussian(lambda, 2, rng);
  const double a = r_min * r_min;
  const double tail_mass = lambda * std::exp(-0.5 * a);
  const Index n = static_cast<Index>(rng.next_poisson(tail_mass));
  PointCloud cloud(2, n);
  for (Index j = 0; j < n; ++j) {
    const double r2 = a - 2.0 * std::log(rng.next_uniform());
    append_planar_tail_point(cloud, j, r2, rng);
  }
  return cloud;
}

}  // namespace festoon
