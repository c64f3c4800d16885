#pragma once

// Critical-radius geometry for Gaussian samples: the rescaling that maps a
// neighbourhood of the critical sphere to tangent-space (v, h) coordinates,
// the exact image densities under that map, quasi-paraboloid boundaries, and
// the Gaussian/Poisson samplers feeding every simulation.

#include <festoon/rng.hpp>
#include <festoon/types.hpp>

#include <Eigen/Dense>

namespace festoon {

using Vecd = Vec<double>;
using Matd = Mat<double>;
using PointCloud = PointCloudT<double>;

// Smallest intensity for which the critical radius is defined and >= 1.
double min_lambda(int dim);

// R(lambda) = sqrt(2 log lambda - log(2 (2 pi)^d log lambda)).
// Throws LambdaTooSmall when the argument of the outer sqrt is below 1.
double critical_radius(double lambda, int dim);

// Tangent-space coordinates of a rescaled point: spatial v in R^{d-1},
// height h (distance below the critical sphere, rescaled).
struct ScaledPoint {
  Vecd v;
  double h = 0.0;
};

// Exponential chart on the unit sphere, based at the pole e_d:
//   exp_map(v) = cos(|v|) e_d + sin(|v|) (v/|v|, 0).
Vecd exp_map(const Vecd& v);

// Inverse chart; |result| <= pi. The antipode -e_d has no preimage, so it is
// assigned the fixed representative (0, ..., 0, pi) by convention.
Vecd inv_exp_map(const Vecd& u);

struct ScalingContext {
  int dim = 2;
  double lambda = 0.0;
  double r_lambda = 0.0;
  Vecd pole;   // unit vector; statistics are rotation invariant, default e_d
  Matd frame;  // orthogonal, frame * pole = e_d; identity for the default pole

  static ScalingContext create(int dim, double lambda);
  static ScalingContext create(int dim, double lambda, const Vecd& pole);

  double height_cap() const { return r_lambda * r_lambda; }
  double spatial_cap() const;  // pi * R, the chart radius
};

// x in R^d -> (v, h): v = R * inv_exp_map(x/|x|) in the pole frame,
// h = R^2 (1 - |x|/R).  The origin maps to (0, R^2) by convention.
ScaledPoint scale_transform(const Vecd& x, const ScalingContext& ctx);

// Inverse map; exact on the chart minus the antipodal fiber.
Vecd inverse_scale_transform(const ScaledPoint& w, const ScalingContext& ctx);

// Geodesic gap e(v, v0): sphere distance between the chart images of v/R and
// v0/R. This is the argument of the quasi-paraboloid boundary formulas.
double geodesic_gap(const Vecd& v, const Vecd& v0, const ScalingContext& ctx);

enum class ParaboloidSide { Up, Down };

// Boundary height of the rescaled image of an up/down paraboloid grain with
// apex w, evaluated at each column of v_grid:
//   up:   R^2 (1 - cos e) + h0 cos e
//   down: R^2 - (R^2 - h0) / cos e          (-inf once cos e <= 0)
Vecd quasi_paraboloid_boundary(const ScaledPoint& w, const ScalingContext& ctx,
                               ParaboloidSide side, const Matd& v_grid);

// Exact density of the mapped Gaussian sample in (v, h) coordinates with
// respect to dv dh:
//   sqrt(2 log lambda)/R * (1 - h/R^2)^{d-1} * exp(h - h^2/(2R^2))
//                        * (sin(|v|/R) / (|v|/R))^{d-2}
// Zero outside the chart (h >= R^2 or |v| >= pi R).
double rescaled_intensity(const Vecd& v, double h, const ScalingContext& ctx);

// Same without the sqrt(2 log lambda)/R mass constant: the (v, h)-dependent
// shape factor, which converges to e^h pointwise.
double rescaled_intensity_shape(const Vecd& v, double h,
                                const ScalingContext& ctx);

// Density of the mapped volume measure relative to dv dh, normalized so the
// value at (0, 0) is exactly 1: (1 - h/R^2)^{d-1} (sin(|v|/R)/(|v|/R))^{d-2}.
double rescaled_volume_density(const Vecd& v, double h,
                               const ScalingContext& ctx);

// n i.i.d. standard normal d-vectors, one per column.
PointCloud sample_binomial(Index n, int dim, RngStream& rng);

// Poisson(lambda) many i.i.d. standard normal d-vectors.
PointCloud sample_poisson_gaussian(double lambda, int dim, RngStream& rng);

// Radius below which a sample point cannot be a hull vertex except with
// probability vanishing at double precision: the rescaled hull boundary
// concentrates at heights of order 1, so points whose rescaled height
// exceeds `prune_height` (default 8 in the trace drivers) lie strictly
// inside the hull. Returns max(0, R - prune_height/R); 0 when the critical
// radius is undefined (no pruning possible).
double prune_radius(double lambda, int dim, double prune_height);

// Exact samplers of the planar Gaussian radial tail |x| >= r_min (d = 2
// only: |x|^2 is exponential with mean 2, so the conditional tail radius is
// r_min^2 - 2 log U exactly). Equal in law to full sampling followed by
// discarding points with |x| < r_min; with r_min from prune_radius the hull
// of the shell equals the hull of the full sample.
PointCloud sample_binomial_shell(Index n, double r_min, RngStream& rng);

// Shell points of a Poisson(lambda) Gaussian sample: count drawn as
// Poisson(lambda exp(-r_min^2/2)), radii from the exact conditional tail.
// Cost is proportional to the shell count, not lambda.
PointCloud sample_poisson_gaussian_shell(double lambda, double r_min,
                                         RngStream& rng);

}  // namespace festoon
