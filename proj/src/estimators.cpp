#include <festoon/estimators.hpp>

#include <festoon/geometry.hpp>
#include <festoon/hull.hpp>
#include <festoon/kubota.hpp>
#include <festoon/scores.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace festoon {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Stream-id tags separating the estimator families.
enum : std::uint64_t {
  kTagFaceCount = 0x11,
  kTagHullVolume = 0x12,
  kTagIntrinsic = 0x13,
  kTagPairCorr = 0x21,
  kTagSigma2 = 0x22,
  kTagWindowCounts = 0x23,
  kTagMeasure = 0x31,
  kTagDirectRoute = 0x41,
  kTagHeightTail = 0x51,
  kTagRadiusTail = 0x52,
  kTagIntensityFit = 0x53,
};

double binomial_coefficient(int n, int r) {
  double v = 1.0;
  for (int i = 0; i < r; ++i) v = v * (n - i) / (i + 1);
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Replication engine
// ---------------------------------------------------------------------------

Index ReplicationTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<Index>(i);
  throw ConfigError("unknown replication column: " + name);
}

std::vector<double> ReplicationTable::values_at(Index grid_index,
                                                const std::string& name) const {
  const Index c = column(name);
  std::vector<double> out;
  for (const auto& row : rows)
    if (static_cast<Index>(row[0]) == grid_index) out.push_back(row[c]);
  return out;
}

ReplicationTable run_replications(const ReplicationPlan& plan,
                                  const std::vector<std::string>& value_columns,
                                  const ReplicateFn& fn) {
  if (plan.parameter_grid.empty())
    throw ConfigError("replication plan needs a non-empty parameter grid");
  if (plan.replicate_count < 0)
    throw ConfigError("replicate count must be non-negative");

  ReplicationTable table;
  table.columns = {"grid_index", "replicate", "grid_value"};
  table.columns.insert(table.columns.end(), value_columns.begin(),
                       value_columns.end());

  const Index g_count = static_cast<Index>(plan.parameter_grid.size());
  const Index r_count = plan.replicate_count;
  const Index total = g_count * r_count;

  struct Slot {
    std::vector<double> values;
    bool failed = false;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(total));
  std::atomic<Index> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto work = [&]() {
    for (;;) {
      const Index t = next.fetch_add(1);
      if (t >= total) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error) return;
      }
      const Index g = t / std::max<Index>(r_count, 1);
      const Index r = t % std::max<Index>(r_count, 1);
      RngStream rng(plan.master_seed,
                    mix_stream_id({plan.purpose_tag,
                                   static_cast<std::uint64_t>(g),
                                   static_cast<std::uint64_t>(r)}));
      try {
        slots[t].values = fn(r, g, plan.parameter_grid[g], rng);
      } catch (const std::runtime_error&) {
        // Degeneracy of one replicate (singular hull, origin on a facet,
        // truncated domain): recorded, not fatal. Configuration-level
        // errors derive from invalid_argument and propagate.
        slots[t].failed = true;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int workers = std::max(1, plan.workers);
  if (workers == 1 || total <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  // Fixed-order fold over (grid, replicate) indices: output is independent
  // of worker count and scheduling.
  for (Index t = 0; t < total; ++t) {
    const Index g = t / r_count;
    const Index r = t % r_count;
    if (slots[t].failed) {
      table.failures.emplace_back(g, r);
      continue;
    }
    std::vector<double> row = {static_cast<double>(g), static_cast<double>(r),
                               plan.parameter_grid[g]};
    row.insert(row.end(), slots[t].values.begin(), slots[t].values.end());
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Gaussian-model traces
// ---------------------------------------------------------------------------

namespace {

PointCloud draw_cloud(double grid_value, bool poisson, int dim,
                      double prune_height, RngStream& rng) {
  if (dim == 2 && prune_height > 0.0) {
    const double r_min = prune_radius(grid_value, 2, prune_height);
    if (r_min > 0.0)
      return poisson
                 ? sample_poisson_gaussian_shell(grid_value, r_min, rng)
                 : sample_binomial_shell(
                       static_cast<Index>(std::llround(grid_value)), r_min,
                       rng);
  }
  return poisson ? sample_poisson_gaussian(grid_value, dim, rng)
                 : sample_binomial(static_cast<Index>(std::llround(grid_value)),
                                   dim, rng);
}

double face_count(const Polytope& poly, int k) {
  if (k == 0) return static_cast<double>(poly.vertices.size());
  if (poly.dim == 2 && k == 1) return static_cast<double>(poly.facets.size());
  const FaceLattice lattice = face_lattice<double>(poly);
  return static_cast<double>(lattice.faces[k].size());
}

double variance_exponent(StatKind kind, int d, int k) {
  switch (kind) {
    case StatKind::FaceCount:
      return -(d - 1) / 2.0;
    case StatKind::HullVolume:
      return (3 - d) / 2.0;
    case StatKind::IntrinsicVolume:
      return (d + 3) / 2.0 - k;
  }
  return 0.0;
}

std::uint64_t purpose_tag_for(StatKind kind, int k) {
  switch (kind) {
    case StatKind::FaceCount:
      return mix_stream_id({kTagFaceCount, static_cast<std::uint64_t>(k)});
    case StatKind::HullVolume:
      return kTagHullVolume;
    case StatKind::IntrinsicVolume:
      return mix_stream_id({kTagIntrinsic, static_cast<std::uint64_t>(k)});
  }
  return 0;
}

}  // namespace

std::vector<TracePoint> scaled_variance_trace(StatKind kind,
                                              const std::vector<double>& grid,
                                              Index reps, std::uint64_t seed,
                                              const TraceOptions& opt) {
  if (grid.empty()) throw ConfigError("empty parameter grid");
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (!(grid[i] < grid[i + 1]))
      throw ConfigError("parameter grid must increase strictly");
  if (reps < 3) throw ConfigError("need at least 3 replicates");
  if (opt.dim < 2) throw ConfigError("dimension must be >= 2");
  if (kind != StatKind::HullVolume && (opt.k < 0 || opt.k >= opt.dim))
    throw ConfigError("face dimension outside [0, dim)");

  ReplicationPlan plan;
  plan.master_seed = seed;
  plan.replicate_count = reps;
  plan.parameter_grid = grid;
  plan.purpose_tag = purpose_tag_for(kind, opt.k);
  plan.dim = opt.dim;
  plan.workers = opt.workers;

  const int d = opt.dim;
  const int k = opt.k;
  const Index subspaces = opt.kubota_subspaces;
  const double prune = opt.prune_height;
  const bool poisson = opt.poisson;

  const ReplicateFn fn = [kind, d, k, subspaces, prune, poisson](
                             Index, Index, double value, RngStream& rng) {
    const PointCloud cloud = draw_cloud(value, poisson, d, prune, rng);
    const Polytope poly = convex_hull<double>(cloud);
    switch (kind) {
      case StatKind::FaceCount:
        return std::vector<double>{face_count(poly, k), 0.0};
      case StatKind::HullVolume:
        return std::vector<double>{polytope_volume<double>(poly, cloud), 0.0};
      case StatKind::IntrinsicVolume: {
        // Projection extrema are attained at hull vertices, so the vertex
        // subcloud gives the same projected volumes at a fraction of the
        // cost.
        const IntrinsicVolumeEstimate iv =
            intrinsic_volume(poly.vertex_coords, k, subspaces, rng);
        return std::vector<double>{iv.value, iv.within_variance};
      }
    }
    return std::vector<double>{0.0, 0.0};
  };

  const ReplicationTable table =
      run_replications(plan, {"stat", "within_var"}, fn);

  std::vector<TracePoint> out;
  const double q = variance_exponent(kind, d, k);
  for (Index g = 0; g < static_cast<Index>(grid.size()); ++g) {
    const std::vector<double> vals = table.values_at(g, "stat");
    const std::vector<double> within = table.values_at(g, "within_var");
    if (vals.size() < 3)
      throw DegenerateInput("too many failed replicates at one grid point");
    const double big_l = 2.0 * std::log(grid[g]);
    TracePoint tp;
    tp.grid_value = grid[g];
    tp.replicates = static_cast<Index>(vals.size());
    tp.failed = reps - tp.replicates;
    tp.within_mc_variance =
        kind == StatKind::IntrinsicVolume ? mean_of(within) : 0.0;
    const double scale = std::pow(big_l, q);
    tp.scaled_variance =
        (sample_variance(vals) - tp.within_mc_variance) * scale;
    tp.scaled_variance_se = variance_jackknife_se(vals) * scale;
    double mean_scale = 1.0;
    switch (kind) {
      case StatKind::FaceCount:
        mean_scale = std::pow(big_l, -(d - 1) / 2.0);
        break;
      case StatKind::HullVolume:
        mean_scale = 1.0 / (unit_ball_volume(d) * std::pow(big_l, d / 2.0));
        break;
      case StatKind::IntrinsicVolume:
        mean_scale = std::pow(big_l, -k / 2.0);
        break;
    }
    tp.scaled_mean = mean_of(vals) * mean_scale;
    tp.scaled_mean_se = mean_se(vals) * mean_scale;
    out.push_back(tp);
  }
  return out;
}

GpRegression expectation_gp_check(int d, int k,
                                  const std::vector<double>& n_grid,
                                  Index reps, std::uint64_t seed,
                                  const TraceOptions& opt) {
  double beta = 0.0;
  try {
    beta = internal_angle(k, d - 1);
  } catch (const std::out_of_range& e) {
    throw MissingBeta(e.what());
  }
  TraceOptions local = opt;
  local.dim = d;
  local.k = k;
  local.poisson = false;
  const std::vector<TracePoint> trace =
      scaled_variance_trace(StatKind::FaceCount, n_grid, reps, seed, local);

  GpRegression report;
  report.grid = n_grid;
  for (const TracePoint& tp : trace) {
    const double big_l = 2.0 * std::log(tp.grid_value);
    report.mean_stat.push_back(tp.scaled_mean * std::pow(big_l, (d - 1) / 2.0));
    report.regressor.push_back(
        std::pow(M_PI * std::log(tp.grid_value), (d - 1) / 2.0));
  }
  report.fit = linear_fit(report.regressor, report.mean_stat);
  report.target_slope = std::pow(2.0, d) / std::sqrt(static_cast<double>(d)) *
                        binomial_coefficient(d, k + 1) * beta;
  report.relative_gap =
      std::abs(report.fit.slope - report.target_slope) / report.target_slope;
  return report;
}

std::vector<MainExpectPoint> mainexpect_check(
    int d, const std::vector<double>& lambda_grid, Index reps,
    std::uint64_t seed, const TraceOptions& opt) {
  TraceOptions local = opt;
  local.dim = d;
  local.poisson = true;
  const std::vector<TracePoint> trace = scaled_variance_trace(
      StatKind::HullVolume, lambda_grid, reps, seed, local);
  std::vector<MainExpectPoint> out;
  for (const TracePoint& tp : trace) {
    MainExpectPoint p;
    p.lambda = tp.grid_value;
    p.measured_ratio = tp.scaled_mean;
    p.ratio_se = tp.scaled_mean_se;
    const double lg = std::log(p.lambda);
    p.predicted_ratio = 1.0 - d * std::log(lg) / (4.0 * lg);
    p.gap = p.measured_ratio - p.predicted_ratio;
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Limit-model estimators
// ---------------------------------------------------------------------------

namespace {

std::vector<ScoreRecord> limit_scores(const LimitPointSet& pts, int score_k) {
  if (score_k >= 0) return limit_kface_scores(pts, score_k);
  return limit_defect_volume_scores(pts, LimitDefectOptions{});
}

// Score of the point with the given id: (value, censored); non-extreme
// points carry score zero.
std::pair<double, bool> find_score(const std::vector<ScoreRecord>& records,
                                   Index id) {
  for (const auto& rec : records)
    if (rec.vertex_id == id) return {rec.value, rec.censored};
  return {0.0, false};
}

}  // namespace

Estimate two_point_correlation(const ScaledPoint& w1, const ScaledPoint& w2,
                               const PairCorrelationOptions& opt) {
  if (w1.v.size() != 1 || w2.v.size() != 1)
    throw ConfigError("pair correlation needs one spatial dimension");
  if (w1.v(0) == w2.v(0) && w1.h == w2.h)
    throw ConfigError("insertion points must differ");
  if (opt.reps < 3) throw ConfigError("need at least 3 replicates");

  const double reach = std::max(std::abs(w1.v(0)), std::abs(w2.v(0)));
  const double hw = opt.half_width > 0.0
                        ? opt.half_width
                        : reach + erosion_delta(opt.h_max) + 1.0;
  LimitWindow window;
  window.dim_minus_1 = 1;
  window.half_width = hw;
  window.h_max = opt.h_max;

  std::vector<double> xs, ys, zs;
  Index censored = 0;
  for (Index r = 0; r < opt.reps; ++r) {
    RngStream rng(opt.seed,
                  mix_stream_id({kTagPairCorr, static_cast<std::uint64_t>(r)}));
    try {
      const LimitPointSet pts = sample_limit_process(window, rng);
      if (opt.score_k == 0) {
        // Extremity-indicator fast path via the lifted chain.
        const LowerChain chain = LowerChain::from_points(pts);
        const auto [b1, b2] = both_extreme_after_insert(chain, w1, w2);
        const double y1 = w1.h + 0.5 * w1.v.squaredNorm();
        const double y2 = w2.h + 0.5 * w2.v.squaredNorm();
        xs.push_back(b1 && b2 ? 1.0 : 0.0);
        ys.push_back(y1 < chain.value(w1.v(0)) ? 1.0 : 0.0);
        zs.push_back(y2 < chain.value(w2.v(0)) ? 1.0 : 0.0);
      } else {
        const Index base = pts.size();
        const auto both_recs =
            limit_scores(with_inserted(pts, {w1, w2}), opt.score_k);
        const auto s1 = find_score(both_recs, base);
        const auto s2 = find_score(both_recs, base + 1);
        const auto only1 = find_score(
            limit_scores(with_inserted(pts, {w1}), opt.score_k), base);
        const auto only2 = find_score(
            limit_scores(with_inserted(pts, {w2}), opt.score_k), base);
        if (s1.second || s2.second || only1.second || only2.second) {
          ++censored;
          continue;
        }
        xs.push_back(s1.first * s2.first);
        ys.push_back(only1.first);
        zs.push_back(only2.first);
      }
    } catch (const std::runtime_error&) {
      ++censored;
    }
  }
  const Index n = static_cast<Index>(xs.size());
  if (n < 3) throw DegenerateInput("pair correlation: too few usable replicates");

  const double mx = mean_of(xs), my = mean_of(ys), mz = mean_of(zs);
  // Delta method for g(X,Y,Z) = X - Y Z on the replicate means.
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (Index i = 0; i < n; ++i) {
    const Eigen::Vector3d dv(xs[i] - mx, ys[i] - my, zs[i] - mz);
    cov += dv * dv.transpose();
  }
  cov /= static_cast<double>(n - 1);
  const Eigen::Vector3d grad(1.0, -mz, -my);
  const double var_mean = grad.dot(cov * grad) / static_cast<double>(n);

  Estimate est;
  est.value = mx - my * mz;
  est.std_error = std::sqrt(std::max(0.0, var_mean));
  est.replicate_count = n;
  est.censored_count = censored;
  return est;
}

namespace {

struct PanelRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

PanelRule composite_panels(const std::vector<double>& breaks,
                           const std::vector<int>& counts) {
  PanelRule rule;
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const Quadrature q =
        gauss_legendre(counts[p], breaks[p], breaks[p + 1]);
    rule.nodes.insert(rule.nodes.end(), q.nodes.begin(), q.nodes.end());
    rule.weights.insert(rule.weights.end(), q.weights.begin(),
                        q.weights.end());
  }
  return rule;
}

}  // namespace

Sigma2Result sigma2_estimator(const Sigma2Options& opt) {
  if (opt.v_max <= 0.0 || opt.h_floor >= opt.h_cap)
    throw ConfigError("need v_max > 0 and h_floor < h_cap");
  if (opt.reps < 2 * opt.block_width || opt.block_width < 2)
    throw ConfigError("too few replicates for blocked standard errors");

  // Height panels concentrate nodes where the festoon height lives
  // (roughly [-5, 1]); the pattern below maps {-12,-6,-2,2,6} onto the
  // configured range.
  const double span = opt.h_cap - opt.h_floor;
  const std::vector<double> h_breaks = {
      opt.h_floor, opt.h_floor + span / 3.0, opt.h_floor + span * 5.0 / 9.0,
      opt.h_floor + span * 7.0 / 9.0, opt.h_cap};
  const PanelRule h_rule = composite_panels(h_breaks, {8, 10, 12, 10});
  const std::vector<double> v_breaks = {
      -opt.v_max, -0.5 * opt.v_max, -0.125 * opt.v_max,
      0.125 * opt.v_max, 0.5 * opt.v_max, opt.v_max};
  const PanelRule v_rule = composite_panels(v_breaks, {10, 12, 12, 12, 10});

  const Index m = static_cast<Index>(h_rule.nodes.size());
  std::vector<double> weighted(m);  // w_j e^{h_j}
  std::vector<double> prefix(m + 1, 0.0);
  for (Index j = 0; j < m; ++j) {
    weighted[j] = h_rule.weights[j] * std::exp(h_rule.nodes[j]);
    prefix[j + 1] = prefix[j] + weighted[j];
  }

  LimitWindow window;
  window.dim_minus_1 = 1;
  window.half_width = opt.v_max + erosion_delta(opt.h_cap);
  window.h_max = opt.h_cap;

  const Index reps = opt.reps;
  std::vector<double> t1(reps), pair_integral(reps), shell(reps);
  std::vector<double> e0(m), e1(m);
  for (Index r = 0; r < reps; ++r) {
    RngStream rng(opt.seed,
                  mix_stream_id({kTagSigma2, static_cast<std::uint64_t>(r)}));
    const LimitPointSet pts = sample_limit_process(window, rng);
    const LowerChain chain = LowerChain::from_points(pts);
    t1[r] = std::exp(std::min(chain.value(0.0), opt.h_cap));

    double acc_total = 0.0, acc_shell = 0.0;
    for (std::size_t vi = 0; vi < v_rule.nodes.size(); ++vi) {
      const double vx = v_rule.nodes[vi];
      const double lift_off = 0.5 * vx * vx;
      for (Index j = 0; j < m; ++j)
        e0[j] = chain.value_with_point(vx, h_rule.nodes[j] + lift_off, 0.0);
      // Envelope-at-0 is nondecreasing in the inserted height; enforce
      // against floating-point jitter so binary search stays valid.
      for (Index j = 1; j < m; ++j) e0[j] = std::max(e0[j], e0[j - 1]);
      for (Index i = 0; i < m; ++i)
        e1[i] = chain.value_with_point(0.0, h_rule.nodes[i], vx);

      double acc = 0.0;
      for (Index i = 0; i < m; ++i) {
        // Joint extremity of (0, h_i) and (vx, h_j): j must keep the
        // second point under the envelope seen from the first (a prefix
        // in j) while pushing the envelope at 0 above h_i (a suffix).
        const double y_cut = e1[i] - lift_off;
        const Index j_hi = static_cast<Index>(
            std::lower_bound(h_rule.nodes.begin(), h_rule.nodes.end(), y_cut) -
            h_rule.nodes.begin());
        const Index j_lo = static_cast<Index>(
            std::upper_bound(e0.begin(), e0.end(), h_rule.nodes[i]) -
            e0.begin());
        if (j_hi > j_lo)
          acc += weighted[i] * (prefix[j_hi] - prefix[j_lo]);
      }
      const double contribution = v_rule.weights[vi] * acc;
      acc_total += contribution;
      if (std::abs(vx) >= 0.75 * opt.v_max) acc_shell += contribution;
    }
    pair_integral[r] = acc_total;
    shell[r] = acc_shell;
  }

  // Product term from independent replicate pairs (unbiased for the
  // squared singleton integral; same-replicate squares would add the
  // spatial covariance back in).
  const Index n_pairs = reps - 1;
  std::vector<double> sigma_r(n_pairs), term2_r(n_pairs), prods(n_pairs);
  for (Index r = 0; r < n_pairs; ++r) {
    prods[r] = t1[r] * t1[r + 1];
    term2_r[r] = pair_integral[r] - 2.0 * opt.v_max * prods[r];
    sigma_r[r] = t1[r] + term2_r[r];
  }

  const auto blocked_se = [&](const std::vector<double>& xs) {
    std::vector<double> blocks;
    for (Index start = 0; start < static_cast<Index>(xs.size());
         start += opt.block_width) {
      const Index stop =
          std::min<Index>(start + opt.block_width, xs.size());
      if (stop - start < opt.block_width / 2 && !blocks.empty()) {
        // Fold a short tail into the last block.
        double s = blocks.back() * opt.block_width;
        for (Index i = start; i < stop; ++i) s += xs[i];
        blocks.back() = s / (opt.block_width + (stop - start));
        break;
      }
      double s = 0.0;
      for (Index i = start; i < stop; ++i) s += xs[i];
      blocks.push_back(s / (stop - start));
    }
    return mean_se(blocks);
  };

  Sigma2Result res;
  res.reps = reps;
  res.term1 = mean_of(t1);
  res.term1_se = mean_se(t1);
  res.term2 = mean_of(term2_r);
  res.term2_se = blocked_se(term2_r);
  res.total.value = mean_of(sigma_r);
  res.total.std_error = blocked_se(sigma_r);
  res.total.replicate_count = reps;

  // Truncation audit: the outer quarter of the spatial range should hold a
  // negligible share of the pair term. The shell reading is itself a noisy
  // difference of two means, so the audit fails only when the share stays
  // above the limit after subtracting twice its standard error.
  const double shell_len = 2.0 * 0.25 * opt.v_max;
  std::vector<double> shell_term2_r(n_pairs);
  for (Index r = 0; r < n_pairs; ++r)
    shell_term2_r[r] = shell[r] - shell_len * prods[r];
  const double shell_term2 = mean_of(shell_term2_r);
  const double shell_se = blocked_se(shell_term2_r);
  const double denom = std::max(std::abs(res.term2), 1e-300);
  res.shell_fraction = std::abs(shell_term2) / denom;
  const double significant_fraction =
      std::max(0.0, std::abs(shell_term2) - 2.0 * shell_se) / denom;
  if (significant_fraction > opt.shell_fraction_limit)
    throw TruncationDominates(
        "outer spatial shell contributes " +
        std::to_string(res.shell_fraction) +
        " of the pair term (beyond noise); widen v_max");
  return res;
}

EdNdResult ed_nd_estimator(const std::vector<double>& window_lengths,
                           Index reps, double h_max, std::uint64_t seed) {
  if (window_lengths.empty()) throw ConfigError("empty window grid");
  for (std::size_t i = 0; i + 1 < window_lengths.size(); ++i)
    if (!(window_lengths[i] < window_lengths[i + 1]))
      throw ConfigError("window grid must increase strictly");
  if (reps < 3) throw ConfigError("need at least 3 replicates");

  EdNdResult result;
  for (std::size_t g = 0; g < window_lengths.size(); ++g) {
    const double len = window_lengths[g];
    LimitWindow window;
    window.dim_minus_1 = 1;
    window.half_width = 0.5 * len;
    window.h_max = h_max;
    std::vector<double> counts(reps);
    for (Index r = 0; r < reps; ++r) {
      RngStream rng(seed, mix_stream_id({kTagWindowCounts,
                                         static_cast<std::uint64_t>(g),
                                         static_cast<std::uint64_t>(r)}));
      const LimitPointSet pts = sample_limit_process(window, rng);
      counts[r] = static_cast<double>(extreme_points(pts).size());
    }
    WindowCountPoint point;
    point.window_len = len;
    point.reps = reps;
    point.mean_per_len = mean_of(counts) / len;
    point.mean_se = mean_se(counts) / len;
    point.var_per_len = sample_variance(counts) / len;
    point.var_se = variance_jackknife_se(counts) / len;
    result.trace.push_back(point);
  }
  // Counts carry an O(1) boundary contribution from the window endpoints
  // (raw mean/variance ~ density * L + const), so the interior densities
  // come from differencing the two largest windows; the per-length trace
  // keeps the raw readings. Windows use independent streams, so the
  // difference variances add.
  if (result.trace.size() >= 2) {
    const WindowCountPoint& a = result.trace[result.trace.size() - 2];
    const WindowCountPoint& b = result.trace.back();
    const double dl = b.window_len - a.window_len;
    const auto diff = [dl](double hi, double hi_len, double lo, double lo_len,
                           double hi_se, double lo_se) {
      return Estimate{(hi * hi_len - lo * lo_len) / dl,
                      std::sqrt(hi_se * hi_se * hi_len * hi_len +
                                lo_se * lo_se * lo_len * lo_len) /
                          dl,
                      0, 0};
    };
    result.e_d = diff(b.mean_per_len, b.window_len, a.mean_per_len,
                      a.window_len, b.mean_se, a.mean_se);
    result.n_d = diff(b.var_per_len, b.window_len, a.var_per_len,
                      a.window_len, b.var_se, a.var_se);
    result.e_d.replicate_count = reps;
    result.n_d.replicate_count = reps;
  } else {
    const WindowCountPoint& top = result.trace.back();
    result.e_d = {top.mean_per_len, top.mean_se, top.reps, 0};
    result.n_d = {top.var_per_len, top.var_se, top.reps, 0};
  }
  return result;
}

// ---------------------------------------------------------------------------
// Boundary empirical measures
// ---------------------------------------------------------------------------

double sphere_fn_value(SphereFn g, const Vecd& u) {
  const Index d = u.size();
  switch (g) {
    case SphereFn::One:
      return 1.0;
    case SphereFn::HemisphereSmooth:
      return 1.0 / (1.0 + std::exp(-u(d - 1) / 0.1));
    case SphereFn::LastCoordSquared:
      return u(d - 1) * u(d - 1);
  }
  return 0.0;
}

double sphere_integral(SphereFn g, int d) {
  if (d < 2) throw ConfigError("sphere dimension must be >= 2");
  if (d == 2) {
    const int n = 4096;
    double sum = 0.0;
    Vecd u(2);
    for (int i = 0; i < n; ++i) {
      const double theta = kTwoPi * (i + 0.5) / n;
      u << std::cos(theta), std::sin(theta);
      sum += sphere_fn_value(g, u);
    }
    return sum * kTwoPi / n;
  }
  RngStream rng(0x5EEDu, 0x5CA1Eu);
  const Index budget = 2'000'000;
  double sum = 0.0;
  Vecd u(d);
  for (Index i = 0; i < budget; ++i) {
    for (int c = 0; c < d; ++c) u(c) = rng.next_normal();
    u.normalize();
    sum += sphere_fn_value(g, u);
  }
  return sum / static_cast<double>(budget) * unit_sphere_area(d);
}

std::vector<MeasureTracePoint> th5_measure_check(
    SphereFn g, int score_k, const std::vector<double>& lambda_grid,
    Index reps, std::uint64_t seed, const TraceOptions& opt) {
  if (score_k < 0 || score_k >= opt.dim)
    throw ConfigError("face dimension outside [0, dim)");
  ReplicationPlan plan;
  plan.master_seed = seed;
  plan.replicate_count = reps;
  plan.parameter_grid = lambda_grid;
  plan.purpose_tag = mix_stream_id({kTagMeasure, static_cast<std::uint64_t>(
                                                     score_k)});
  plan.dim = opt.dim;
  plan.workers = opt.workers;

  const int d = opt.dim;
  const double prune = opt.prune_height;
  const ReplicateFn fn = [g, score_k, d, prune](Index, Index, double lambda,
                                                RngStream& rng) {
    const double r_lambda = critical_radius(lambda, d);
    const PointCloud cloud = draw_cloud(lambda, true, d, prune, rng);
    const Polytope poly = convex_hull<double>(cloud);
    const FaceLattice lattice = face_lattice<double>(poly);
    double sum = 0.0;
    for (const auto& rec : kface_scores(lattice, score_k))
      sum += sphere_fn_value(g, cloud.col(rec.vertex_id) / r_lambda) *
             rec.value;
    return std::vector<double>{sum};
  };
  const ReplicationTable table = run_replications(plan, {"weighted_sum"}, fn);

  std::vector<MeasureTracePoint> out;
  for (Index gi = 0; gi < static_cast<Index>(lambda_grid.size()); ++gi) {
    const std::vector<double> vals = table.values_at(gi, "weighted_sum");
    if (vals.size() < 3)
      throw DegenerateInput("too many failed replicates at one grid point");
    const double scale =
        std::pow(2.0 * std::log(lambda_grid[gi]), -(d - 1) / 2.0);
    MeasureTracePoint p;
    p.lambda = lambda_grid[gi];
    p.reps = static_cast<Index>(vals.size());
    p.mean_scaled = mean_of(vals) * scale;
    p.mean_se = mean_se(vals) * scale;
    p.var_scaled = sample_variance(vals) * scale;
    p.var_se = variance_jackknife_se(vals) * scale;
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Internal angles
// ---------------------------------------------------------------------------

InternalAngleEntry internal_angle_entry(int k, int d_minus_1) {
  if (d_minus_1 < 1 || d_minus_1 > 4 || k < 0 || k > d_minus_1)
    throw std::out_of_range("internal angle outside the desk range");
  if (k == d_minus_1) return {1.0, true};
  if (d_minus_1 == 1 && k == 0) return {0.5, true};
  if (d_minus_1 == 2 && k == 1) return {0.5, true};
  if (d_minus_1 == 2 && k == 0) return {1.0 / 6.0, true};

  // Monte Carlo on the regular simplex with vertices e_i projected to the
  // hyperplane of equal coordinates: a direction points into the simplex at
  // a k-face iff it has non-negative inner product with every vertex
  // direction not on the face.
  const int d = d_minus_1 + 1;
  Vecd ones = Vecd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  const Matd basis = orthonormal_complement<double>(ones);  // d x (d-1)
  Matd verts(d_minus_1, d);
  const Vecd centroid = Vecd::Constant(d, 1.0 / d);
  for (int i = 0; i < d; ++i) {
    Vecd e = Vecd::Zero(d);
    e(i) = 1.0;
    verts.col(i) = basis.transpose() * (e - centroid);
  }
  RngStream rng(0x5EEDu, mix_stream_id({0xBE7Au, static_cast<std::uint64_t>(k),
                                        static_cast<std::uint64_t>(d_minus_1)}));
  const Index budget = 4'000'000;
  Index hits = 0;
  Vecd u(d_minus_1);
  for (Index t = 0; t < budget; ++t) {
    for (int c = 0; c < d_minus_1; ++c) u(c) = rng.next_normal();
    bool ok = true;
    for (int v = k + 1; v < d && ok; ++v) ok = verts.col(v).dot(u) >= 0.0;
    if (ok) ++hits;
  }
  return {static_cast<double>(hits) / static_cast<double>(budget), false};
}

double internal_angle(int k, int d_minus_1) {
  return internal_angle_entry(k, d_minus_1).value;
}

const InternalAngleEntry& InternalAngleTable::at(int k, int d_minus_1) {
  const auto key = std::make_pair(k, d_minus_1);
  auto it = cache_.find(key);
  if (it == cache_.end())
    it = cache_.emplace(key, internal_angle_entry(k, d_minus_1)).first;
  return it->second;
}

// ---------------------------------------------------------------------------
// Route consistency
// ---------------------------------------------------------------------------

RouteEstimates route_consistency_check(const RouteOptions& opt) {
  RouteEstimates out;
  out.lambda = opt.lambda;

  // (a) Direct vertex-count variance at one large intensity.
  ReplicationPlan plan;
  plan.master_seed = opt.seed;
  plan.replicate_count = opt.direct_reps;
  plan.parameter_grid = {opt.lambda};
  plan.purpose_tag = kTagDirectRoute;
  plan.dim = 2;
  plan.workers = opt.workers;
  const ReplicateFn fn = [](Index, Index, double lambda, RngStream& rng) {
    const PointCloud cloud = draw_cloud(lambda, true, 2, 8.0, rng);
    const Polytope poly = convex_hull<double>(cloud);
    return std::vector<double>{static_cast<double>(poly.vertices.size())};
  };
  const ReplicationTable table = run_replications(plan, {"f0"}, fn);
  const std::vector<double> f0 = table.values_at(0, "f0");
  const double var_f0 = sample_variance(f0);
  const double var_se = variance_jackknife_se(f0);
  const double r_lambda = critical_radius(opt.lambda, 2);
  out.direct = {var_f0 / r_lambda, var_se / r_lambda,
                static_cast<Index>(f0.size()),
                opt.direct_reps - static_cast<Index>(f0.size())};
  out.direct_literal = var_f0 / std::sqrt(2.0 * std::log(opt.lambda));

  // (b) Limit pair-integral route.
  Sigma2Options s2 = opt.sigma2;
  s2.seed = mix_stream_id({opt.seed, 0xB});
  out.sigma2 = sigma2_estimator(s2);
  out.via_limit = {kTwoPi * out.sigma2.total.value,
                   kTwoPi * out.sigma2.total.std_error,
                   out.sigma2.total.replicate_count, 0};

  // (c) Window-count variance route.
  out.window_detail = ed_nd_estimator(opt.window_lengths, opt.window_reps,
                                      opt.h_max, mix_stream_id({opt.seed, 0xC}));
  out.via_window = out.window_detail.n_d;
  out.via_window_scaled = {kTwoPi * out.via_window.value,
                           kTwoPi * out.via_window.std_error,
                           out.via_window.replicate_count, 0};

  out.ab_overlap = out.direct.overlaps(out.via_limit);
  out.ac_overlap = out.direct.overlaps(out.via_window);
  out.bc_overlap = out.via_limit.overlaps(out.via_window);
  out.ac_scaled_overlap = out.direct.overlaps(out.via_window_scaled);
  out.bc_scaled_overlap = out.via_limit.overlaps(out.via_window_scaled);
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

NormalityReport normality_diagnostics(const std::vector<double>& samples,
                                      int bins) {
  if (samples.size() < 100)
    throw ConfigError("normality diagnostics need at least 100 samples");
  if (bins < 3) throw ConfigError("need at least 3 bins");
  NormalityReport report;
  report.n = static_cast<Index>(samples.size());
  report.skew = skewness(samples);
  report.excess_kurtosis = excess_kurtosis(samples);
  const double m = mean_of(samples);
  const double sd = std::sqrt(sample_variance(samples));
  const double lo = -4.0, hi = 4.0;
  const double width = (hi - lo) / bins;
  report.bin_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) report.bin_edges[b] = lo + b * width;
  report.bin_counts.assign(bins, 0.0);
  for (double x : samples) {
    const double z = (x - m) / sd;
    int b = static_cast<int>(std::floor((z - lo) / width));
    b = std::clamp(b, 0, bins - 1);  // clip outliers into the edge bins
    report.bin_counts[b] += 1.0;
  }
  return report;
}

TailFit height_tail_fit(Index reps, double half_width, double h_max,
                        std::uint64_t seed) {
  if (reps < 200) throw ConfigError("height tail fit needs >= 200 replicates");
  LimitWindow window;
  window.dim_minus_1 = 1;
  window.half_width = half_width;
  window.h_max = h_max;
  std::vector<double> heights;
  heights.reserve(reps);
  for (Index r = 0; r < reps; ++r) {
    RngStream rng(seed, mix_stream_id({kTagHeightTail,
                                       static_cast<std::uint64_t>(r)}));
    try {
      const LimitPointSet pts = sample_limit_process(window, rng);
      heights.push_back(LowerChain::from_points(pts).value(0.0));
    } catch (const std::runtime_error&) {
      // nearly-empty window replicate: skip
    }
  }
  std::sort(heights.begin(), heights.end());
  const Index n = static_cast<Index>(heights.size());
  const std::array<double, 11> levels = {0.50, 0.58, 0.66, 0.74, 0.82, 0.88,
                                         0.92, 0.95, 0.97, 0.98, 0.99};
  TailFit fit;
  fit.samples = n;
  for (double level : levels) {
    const Index pos = static_cast<Index>(level * n);
    if (pos >= n) continue;
    const double survival = 1.0 - level;
    fit.t.push_back(heights[pos]);
    fit.transformed.push_back(std::log(-std::log(survival)));
  }
  fit.fit = linear_fit(fit.t, fit.transformed);
  return fit;
}

TailFit radius_tail_fit(Index reps, const Vecd& r_grid, double half_width,
                        double h_max, int score_k, std::uint64_t seed) {
  if (reps < 50) throw ConfigError("radius tail fit needs >= 50 replicates");
  if (r_grid.size() < 3) throw ConfigError("radius grid too short");
  LimitWindow window;
  window.dim_minus_1 = 1;
  window.half_width = half_width;
  window.h_max = h_max;
  std::vector<double> radii;
  radii.reserve(reps);
  for (Index r = 0; r < reps; ++r) {
    RngStream rng(seed, mix_stream_id({kTagRadiusTail,
                                       static_cast<std::uint64_t>(r)}));
    try {
      const LimitPointSet pts = sample_limit_process(window, rng);
      const std::vector<Index> ext = extreme_points(pts);
      if (ext.empty()) continue;
      Index target = ext.front();
      for (Index id : ext)
        if (std::abs(pts.v(0, id)) < std::abs(pts.v(0, target))) target = id;
      const LocalizationResult loc =
          localization_radius(pts, target, score_k, r_grid);
      radii.push_back(loc.stabilized ? loc.radius
                                     : r_grid(r_grid.size() - 1) + 1.0);
    } catch (const std::runtime_error&) {
    }
  }
  const Index n = static_cast<Index>(radii.size());
  TailFit fit;
  fit.samples = n;
  for (Index g = 0; g < r_grid.size(); ++g) {
    const double t = r_grid(g);
    Index exceed = 0;
    for (double rad : radii)
      if (rad > t) ++exceed;
    const double survival = static_cast<double>(exceed) / n;
    if (exceed < 5 || exceed == n) continue;  // keep informative levels only
    fit.t.push_back(t * t);
    fit.transformed.push_back(-std::log(survival));
  }
  if (fit.t.size() < 3)
    throw DegenerateInput("radius tail: too few informative grid levels");
  fit.fit = linear_fit(fit.t, fit.transformed);
  return fit;
}

std::vector<IntensityFitPoint> intensity_chi_square(
    const std::vector<double>& lambda_grid, Index reps, int dim,
    std::uint64_t seed) {
  if (dim < 2) throw ConfigError("dimension must be >= 2");
  if (reps < 10) throw ConfigError("need at least 10 replicates");
  constexpr int kBins = 12;
  constexpr double kHLo = -6.0, kHHi = 2.0, kVCap = 3.0;
  const double mass_lo = std::exp(kHLo), mass_hi = std::exp(kHHi);
  std::array<double, kBins + 1> edges{};
  for (int b = 0; b <= kBins; ++b)
    edges[b] = std::log(mass_lo + (mass_hi - mass_lo) * b / kBins);
  const double v_volume =
      unit_ball_volume(dim - 1) * std::pow(kVCap, dim - 1);

  std::vector<IntensityFitPoint> out;
  for (std::size_t gi = 0; gi < lambda_grid.size(); ++gi) {
    const double lambda = lambda_grid[gi];
    const ScalingContext ctx = ScalingContext::create(dim, lambda);
    std::array<double, kBins> counts{};
    Index total = 0;
    for (Index r = 0; r < reps; ++r) {
      RngStream rng(seed, mix_stream_id({kTagIntensityFit,
                                         static_cast<std::uint64_t>(gi),
                                         static_cast<std::uint64_t>(r)}));
      const PointCloud cloud = draw_cloud(lambda, true, dim, 8.0, rng);
      for (Index j = 0; j < cloud.cols(); ++j) {
        const ScaledPoint w = scale_transform(cloud.col(j), ctx);
        if (w.v.norm() > kVCap || w.h < kHLo || w.h >= kHHi) continue;
        const int b = std::clamp(
            static_cast<int>(
                std::upper_bound(edges.begin(), edges.end(), w.h) -
                edges.begin()) -
                1,
            0, kBins - 1);
        counts[b] += 1.0;
        ++total;
      }
    }
    // Expected counts under the limit intensity e^h dh dv (equal by
    // construction of the equal-mass bins).
    const double expected =
        static_cast<double>(reps) * v_volume * (mass_hi - mass_lo) / kBins;
    IntensityFitPoint point;
    point.lambda = lambda;
    point.dof = kBins;
    point.total_points = total;
    for (int b = 0; b < kBins; ++b)
      point.chi2 += (counts[b] - expected) * (counts[b] - expected) / expected;
    point.pvalue = chi2_sf(point.chi2, kBins);
    out.push_back(point);
  }
  return out;
}

std::vector<ParalemPoint> paralem_scan(const std::vector<double>& lambda_grid,
                                       const std::vector<double>& h1_values,
                                       double half_width, Index grid_points,
                                       int dim) {
  if (dim != 2 && dim != 3)
    throw ConfigError("paraboloid gap scan covers dimensions 2 and 3");
  if (grid_points < 2) throw ConfigError("need at least 2 grid points");
  std::vector<ParalemPoint> out;
  for (double lambda : lambda_grid) {
    const ScalingContext ctx = ScalingContext::create(dim, lambda);
    Matd v_grid;
    if (dim == 2) {
      v_grid.resize(1, grid_points);
      for (Index i = 0; i < grid_points; ++i)
        v_grid(0, i) =
            -half_width + 2.0 * half_width * i / (grid_points - 1.0);
    } else {
      const Index side = std::max<Index>(
          2, static_cast<Index>(std::sqrt(static_cast<double>(grid_points))));
      v_grid.resize(2, side * side);
      for (Index a = 0; a < side; ++a)
        for (Index b = 0; b < side; ++b) {
          v_grid(0, a * side + b) =
              -half_width + 2.0 * half_width * a / (side - 1.0);
          v_grid(1, a * side + b) =
              -half_width + 2.0 * half_width * b / (side - 1.0);
        }
    }
    for (double h1 : h1_values) {
      ScaledPoint apex;
      apex.v = Vecd::Zero(dim - 1);
      apex.h = h1;
      const Vecd quasi =
          quasi_paraboloid_boundary(apex, ctx, ParaboloidSide::Up, v_grid);
      double sup = 0.0;
      for (Index i = 0; i < v_grid.cols(); ++i) {
        const double ideal = h1 + 0.5 * v_grid.col(i).squaredNorm();
        sup = std::max(sup, std::abs(quasi(i) - ideal));
      }
      out.push_back({lambda, h1, sup * ctx.r_lambda});
    }
  }
  return out;
}

}  // namespace festoon
