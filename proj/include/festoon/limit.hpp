#pragma once

// The limiting point-process model: Poisson points with intensity e^h dh dv,
// their extreme points via the paraboloid lifting, the festoon (boundary of
// the maximal union of empty down-paraboloids), per-point limit scores,
// shock lists, and the localization diagnostics.

#include <festoon/scaling.hpp>
#include <festoon/scores.hpp>
#include <festoon/types.hpp>

#include <utility>
#include <vector>

namespace festoon {

struct LimitWindow {
  int dim_minus_1 = 1;
  double half_width = 1.0;  // per spatial axis
  double h_max = 6.0;       // upper height truncation

  double spatial_volume() const;   // (2 half_width)^{dim_minus_1}
  double expected_count() const;   // spatial_volume * e^{h_max}
};

struct LimitPointSet {
  LimitWindow window;
  Matd v;  // dim_minus_1 x n spatial coordinates
  Vecd h;  // heights
  std::vector<Index> inserted;  // ids of deterministically inserted points

  Index size() const { return v.cols(); }
  ScaledPoint point(Index i) const { return {v.col(i), h(i)}; }
};

// Poisson sample: count ~ Poisson(expected_count), v uniform on the box,
// h = h_max + log(U) (exact inverse CDF for density proportional to e^h).
LimitPointSet sample_limit_process(const LimitWindow& window, RngStream& rng);

// Copy of `base` with `extra` points appended and flagged as inserted.
LimitPointSet with_inserted(const LimitPointSet& base,
                            const std::vector<ScaledPoint>& extra);

// Lifting map (v, h) -> (v, h + |v|^2/2). Down-paraboloid membership becomes
// a half-space test under this map, so extreme points become lower-hull
// vertices of the lifted set.
Vecd lift(const ScaledPoint& w);
Matd lifted_cloud(const LimitPointSet& pts);

// Ids of points on the lower hull of the lifted set (tolerance ties resolved
// toward non-extreme). Small sets (fewer than dim+1 points) are all extreme.
std::vector<Index> extreme_points(const LimitPointSet& pts);

// Independent brute-force reference: a point is extreme iff some empty
// down-paraboloid passes through it, i.e. the linear feasibility problem
// over candidate apices has a solution. Exact interval arithmetic for one
// spatial dimension, exact vertex enumeration of the half-plane intersection
// for two. Throws InstanceTooLarge above 50 points.
std::vector<Index> extreme_points_oracle(const LimitPointSet& pts);

struct FestoonFace {
  std::vector<Index> apex_ids;  // dim_minus_1 + 1 extreme-point ids
  Vecd grad;                    // lifted affine graph y = grad . v + intercept
  double intercept = 0.0;
};

struct Festoon {
  int dim_minus_1 = 1;
  std::vector<FestoonFace> faces;
  std::vector<Index> extreme_ids;
};

// Parabolic-face decomposition of the festoon: each lower-hull facet of the
// lifted set, unlifted back to the graph v -> grad.v + intercept - |v|^2/2.
Festoon festoon(const LimitPointSet& pts);

// Festoon height at v: minimum over faces whose projected simplex covers v
// of grad.v + intercept - |v|^2/2. Throws OutsideDomain when no face covers.
double festoon_height(const Festoon& fest, const LimitPointSet& pts,
                      const Vecd& v);

// Boundary of the union of up-paraboloids: min over points of
// h_w + |v - v_w|^2/2.
double up_envelope_height(const LimitPointSet& pts, const Vecd& v);

// Limit k-face scores: distinct (k+1)-subsets of festoon face apex tuples,
// each contributing 1/(k+1) to its members. Non-extreme points score 0.
std::vector<ScoreRecord> limit_kface_scores(const LimitPointSet& pts, int k);
std::vector<ScoreRecord> limit_kface_scores(const Festoon& fest, int k);

// Erosion margin keeping down-paraboloid reach inside the window:
// 2 sqrt(2 (h_max + pad)).
double erosion_delta(double h_max, double pad = 10.0);

struct LimitDefectOptions {
  bool positive_part = false;  // integrate max(height, 0) instead of height
  double erosion_pad = 10.0;
  Index angle_mc_budget = 0;  // unused; kept for interface symmetry
};

// Limit defect-volume scores: for each extreme point, 1/d times the integral
// of the festoon height over the union of faces containing it (closed-form
// simplex integration; d = dim_minus_1 + 1). Faces reaching within the
// erosion margin of the window boundary mark the score censored.
std::vector<ScoreRecord> limit_defect_volume_scores(
    const LimitPointSet& pts, const LimitDefectOptions& options = {});

struct ShockLists {
  Matd kinks;   // 2 x m: festoon kink points (the extreme points), sorted
  Matd apices;  // 2 x f: per-face arc apices (grad, intercept + grad^2/2)
  Vecd kink_spacings;
  Vecd apex_spacings;
};

// Both shock readings for one spatial dimension: arc junctions (kinks) and
// per-arc apices, sorted by v with spacing statistics.
ShockLists shocks_2d(const LimitPointSet& pts);

// Maximal apex height over the down-paraboloids of faces containing the
// point: max over faces of intercept + |grad|^2/2. Zero for non-extreme.
double height_functional(const LimitPointSet& pts, Index id);
double height_functional(const Festoon& fest, Index id);

struct LocalizationResult {
  double radius = 0.0;
  bool stabilized = false;
};

// Smallest grid radius r such that the score computed from the points within
// the cylinder C(v_id, r') matches the full-window score for every grid
// r' >= r. score_k >= 0 selects the k-face score; score_k = -1 selects the
// defect-volume score (uncensored value).
LocalizationResult localization_radius(const LimitPointSet& pts, Index id,
                                       int score_k, const Vecd& r_grid);

// (card(Ext(P intersect Q)), card(Ext(P) intersect Q)) for the centered
// sub-window with the given half width.
std::pair<Index, Index> ext_window_counts(const LimitPointSet& pts,
                                          double sub_half_width);

}  // namespace festoon
