#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "festoon/limit.hpp"
#include "festoon/palm.hpp"
#include "festoon/scaling.hpp"
#include "festoon/stats.hpp"

namespace festoon {

// Point estimate with a normal-approximation 95% interval. Standard errors
// of variance-type statistics come from a delete-one jackknife.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  Index replicate_count = 0;
  Index censored_count = 0;

  double ci_lo() const { return value - 1.96 * std_error; }
  double ci_hi() const { return value + 1.96 * std_error; }
  bool overlaps(const Estimate& other) const {
    return ci_lo() <= other.ci_hi() && other.ci_lo() <= ci_hi();
  }
};

// ---------------------------------------------------------------------------
// Replication engine
// ---------------------------------------------------------------------------

struct ReplicationPlan {
  std::uint64_t master_seed = 0;
  Index replicate_count = 0;
  std::vector<double> parameter_grid;  // sample sizes, intensities, or windows
  std::uint64_t purpose_tag = 0;       // folded into every stream id
  int dim = 2;
  int workers = 1;
};

// One replicate: (replicate index, grid index, grid value, its own RNG
// stream) -> fixed-length row of statistics.
using ReplicateFn =
    std::function<std::vector<double>(Index, Index, double, RngStream&)>;

struct ReplicationTable {
  // Row layout: grid_index, replicate, grid_value, then value_columns.
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<Index, Index>> failures;  // (grid index, replicate)

  Index column(const std::string& name) const;
  // Values of one column restricted to a grid point, in replicate order;
  // failed replicates are absent.
  std::vector<double> values_at(Index grid_index,
                                const std::string& name) const;
};

// Runs replicate_count x grid evaluations of fn. Each replicate draws from
// the stream keyed by (master_seed, purpose_tag, grid index, replicate
// index), and rows are stored by index, so the table is identical for any
// worker count or scheduling order. Domain errors thrown by fn mark the
// replicate failed; other exceptions propagate.
ReplicationTable run_replications(const ReplicationPlan& plan,
                                  const std::vector<std::string>& value_columns,
                                  const ReplicateFn& fn);

// ---------------------------------------------------------------------------
// Scaled-variance traces and expectation checks on the Gaussian model
// ---------------------------------------------------------------------------

enum class StatKind { FaceCount, HullVolume, IntrinsicVolume };

struct TraceOptions {
  int dim = 2;
  int k = 0;                  // face dimension (FaceCount, IntrinsicVolume)
  bool poisson = true;        // Poisson(grid value) input, else binomial n
  Index kubota_subspaces = 256;
  double prune_height = 8.0;  // rescaled-height cutoff for shell sampling
  int workers = 1;
};

struct TracePoint {
  double grid_value = 0.0;
  double scaled_variance = 0.0;
  double scaled_variance_se = 0.0;
  double scaled_mean = 0.0;
  double scaled_mean_se = 0.0;
  // IntrinsicVolume only: mean per-replicate Monte-Carlo variance already
  // subtracted from the variance (0 otherwise).
  double within_mc_variance = 0.0;
  Index replicates = 0;
  Index failed = 0;
};

// Var(statistic) times (2 log g)^q with q = -(d-1)/2 for face counts,
// -(d-3)/2 for hull volume, and (d+3)/2 - k for intrinsic volumes; the
// scaled mean uses the same exponent convention for face counts and the
// intrinsic-volume trace, and (d/2) for volumes.
std::vector<TracePoint> scaled_variance_trace(StatKind kind,
                                              const std::vector<double>& grid,
                                              Index reps, std::uint64_t seed,
                                              const TraceOptions& opt = {});

struct GpRegression {
  std::vector<double> grid;
  std::vector<double> mean_stat;   // mean f_k per grid point
  std::vector<double> regressor;   // (pi log n)^{(d-1)/2}
  LinearFit fit;
  double target_slope = 0.0;       // (2^d/sqrt(d))·C(d,k+1)·beta_{k,d-1}
  double relative_gap = 0.0;       // |slope - target| / target
};

// Regression of mean face counts against the predicted growth regressor.
// Throws MissingBeta when the internal angle for (k, d-1) is unavailable.
GpRegression expectation_gp_check(int d, int k,
                                  const std::vector<double>& n_grid,
                                  Index reps, std::uint64_t seed,
                                  const TraceOptions& opt = {});

struct MainExpectPoint {
  double lambda = 0.0;
  double measured_ratio = 0.0;  // E Vol / (kappa_d (2 log lambda)^{d/2})
  double ratio_se = 0.0;
  double predicted_ratio = 0.0;  // 1 - d log log lambda / (4 log lambda)
  double gap = 0.0;
};

std::vector<MainExpectPoint> mainexpect_check(
    int d, const std::vector<double>& lambda_grid, Index reps,
    std::uint64_t seed, const TraceOptions& opt = {});

// ---------------------------------------------------------------------------
// Limit-model estimators (one spatial dimension)
// ---------------------------------------------------------------------------

struct PairCorrelationOptions {
  int score_k = 0;        // k-face score; -1 selects the defect-volume score
  double h_max = 6.0;
  double half_width = 0.0;  // 0: derived from the inputs + erosion margin
  Index reps = 2000;
  std::uint64_t seed = 1;
};

// Palm two-point correlation of the scores of two inserted points:
// E[xi(w1)xi(w2) | both inserted] - E[xi(w1)]E[xi(w2)], standard error by
// the delta method on the joint replicate moments.
Estimate two_point_correlation(const ScaledPoint& w1, const ScaledPoint& w2,
                               const PairCorrelationOptions& opt = {});

struct Sigma2Options {
  double v_max = 10.0;   // spatial truncation of the pair integral
  double h_cap = 6.0;    // height cap (matches the sampling window's h_max)
  double h_floor = -12.0;
  Index reps = 10000;
  std::uint64_t seed = 1;
  double shell_fraction_limit = 0.05;
  Index block_width = 25;  // block-mean width for the standard error
};

struct Sigma2Result {
  Estimate total;     // sigma^2 estimate (term1 + term2)
  double term1 = 0.0;
  double term1_se = 0.0;
  double term2 = 0.0;
  double term2_se = 0.0;
  double shell_fraction = 0.0;  // |outer-shell part of term2| / |term2|
  Index reps = 0;
};

// Variance constant of the extreme-point score on the limit process:
//   term 1 = int e^h P(point at (0,h) extreme) dh, closed form per replicate
//            as exp(min(chain height at 0, h_cap));
//   term 2 = int dv1 int int e^{h0+h1} [P(both inserted points extreme)
//            - product of singleton probabilities] dh0 dh1, evaluated by
//            composite Gauss-Legendre panels in (h0, h1, v1) with the
//            product term taken from independent replicate pairs.
// Throws TruncationDominates when |v1| >= 0.75 v_max contributes more than
// shell_fraction_limit of |term 2|.
Sigma2Result sigma2_estimator(const Sigma2Options& opt = {});

struct WindowCountPoint {
  double window_len = 0.0;
  double mean_per_len = 0.0;
  double mean_se = 0.0;
  double var_per_len = 0.0;
  double var_se = 0.0;
  Index reps = 0;
};

struct EdNdResult {
  std::vector<WindowCountPoint> trace;  // raw per-length readings
  // Interior densities by differencing the two largest windows, which
  // cancels the O(1) boundary contribution of the window endpoints:
  // e_d = mean extreme-point count per unit length,
  // n_d = count variance per unit length.
  Estimate e_d;
  Estimate n_d;
};

EdNdResult ed_nd_estimator(const std::vector<double>& window_lengths,
                           Index reps, double h_max, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Boundary empirical measures
// ---------------------------------------------------------------------------

enum class SphereFn { One, HemisphereSmooth, LastCoordSquared };

double sphere_fn_value(SphereFn g, const Vecd& u);
// Integral of g over the unit sphere S^{d-1} (trapezoid for d=2, fixed-seed
// Monte Carlo otherwise).
double sphere_integral(SphereFn g, int d);

struct MeasureTracePoint {
  double lambda = 0.0;
  double mean_scaled = 0.0;
  double mean_se = 0.0;
  double var_scaled = 0.0;
  double var_se = 0.0;
  Index reps = 0;
};

// Mean/variance trace of sum_x g(x/R_lambda) xi_k(x) over hull vertices,
// scaled by (2 log lambda)^{-(d-1)/2} for the mean and by the matching
// variance exponent.
std::vector<MeasureTracePoint> th5_measure_check(
    SphereFn g, int score_k, const std::vector<double>& lambda_grid,
    Index reps, std::uint64_t seed, const TraceOptions& opt = {});

// ---------------------------------------------------------------------------
// Internal angles of the regular simplex
// ---------------------------------------------------------------------------

struct InternalAngleEntry {
  double value = 0.0;
  bool closed_form = false;
};

// Normalized internal angle of a regular (d-1)-simplex at a k-face:
// closed forms for (0,1), (1,2), (0,2); Monte-Carlo direction counting
// elsewhere in the desk range d-1 <= 4. Throws std::out_of_range outside.
InternalAngleEntry internal_angle_entry(int k, int d_minus_1);
double internal_angle(int k, int d_minus_1);

class InternalAngleTable {
 public:
  const InternalAngleEntry& at(int k, int d_minus_1);

 private:
  std::map<std::pair<int, int>, InternalAngleEntry> cache_;
};

// ---------------------------------------------------------------------------
// Route consistency for the vertex-count variance constant
// ---------------------------------------------------------------------------

struct RouteOptions {
  double lambda = 2e6;       // intensity for the direct route
  Index direct_reps = 6000;
  Sigma2Options sigma2;
  std::vector<double> window_lengths{4, 8, 16, 32};
  Index window_reps = 4000;
  double h_max = 6.0;
  std::uint64_t seed = 20240817;
  int workers = 1;
};

struct RouteEstimates {
  // (a) Var f_0(K_lambda) normalized by R_lambda (primary; the same limit
  // as the literal 1/sqrt(2 log lambda) normalization but with the window
  // Jacobian compensated exactly), plus the literal value for reference.
  Estimate direct;
  double direct_literal = 0.0;
  double lambda = 0.0;
  // (b) 2 pi sigma^2 from the limit-process pair integral.
  Estimate via_limit;
  Sigma2Result sigma2;
  // (c) window-count variance per unit length, raw and times 2 pi.
  Estimate via_window;
  Estimate via_window_scaled;
  EdNdResult window_detail;
  bool ab_overlap = false;
  bool ac_overlap = false;
  bool bc_overlap = false;
  bool ac_scaled_overlap = false;
  bool bc_scaled_overlap = false;
};

RouteEstimates route_consistency_check(const RouteOptions& opt = {});

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct NormalityReport {
  double skew = 0.0;
  double excess_kurtosis = 0.0;
  Index n = 0;
  std::vector<double> bin_edges;   // of the standardized sample
  std::vector<double> bin_counts;
};

NormalityReport normality_diagnostics(const std::vector<double>& samples,
                                      int bins = 21);

struct TailFit {
  std::vector<double> t;            // thresholds
  std::vector<double> transformed;  // fitted transform of log-survival
  LinearFit fit;
  Index samples = 0;
};

// Survival of the festoon height over the origin, fitted as
// log(-log P[H > t]) vs t (doubly exponential upper tail).
TailFit height_tail_fit(Index reps, double half_width, double h_max,
                        std::uint64_t seed);

// Survival of the localization radius, fitted as -log P[R > t] vs t^2
// (Gaussian-type tail).
TailFit radius_tail_fit(Index reps, const Vecd& r_grid, double half_width,
                        double h_max, int score_k, std::uint64_t seed);

struct IntensityFitPoint {
  double lambda = 0.0;
  double chi2 = 0.0;
  Index dof = 0;
  double pvalue = 0.0;
  Index total_points = 0;
};

// Chi-square of mapped sample heights in |v| <= 3, h in [-6, 2] (equal-mass
// height bins) against the limit density e^h dh dv.
std::vector<IntensityFitPoint> intensity_chi_square(
    const std::vector<double>& lambda_grid, Index reps, int dim,
    std::uint64_t seed);

struct ParalemPoint {
  double lambda = 0.0;
  double h1 = 0.0;
  double sup_gap_times_r = 0.0;
};

// Sup over a spatial grid of |quasi-paraboloid boundary - ideal paraboloid|
// times R_lambda, per (lambda, apex height).
std::vector<ParalemPoint> paralem_scan(const std::vector<double>& lambda_grid,
                                       const std::vector<double>& h1_values,
                                       double half_width, Index grid_points,
                                       int dim);

}  // namespace festoon
