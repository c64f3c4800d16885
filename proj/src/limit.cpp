#include <festoon/limit.hpp>

#include <festoon/geometry.hpp>
#include <festoon/hull.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace festoon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Ids of lower-chain vertices for one spatial dimension, sorted by v.
std::vector<Index> lower_chain_ids_1d(const LimitPointSet& pts) {
  const Index n = pts.size();
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  PointCloudT<double> lifted(2, n);
  for (Index i = 0; i < n; ++i) {
    lifted(0, i) = pts.v(0, i);
    lifted(1, i) = pts.h(i) + 0.5 * pts.v(0, i) * pts.v(0, i);
  }
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (lifted(0, a) != lifted(0, b)) return lifted(0, a) < lifted(0, b);
    return lifted(1, a) < lifted(1, b);
  });
  if (n <= 2) return order;
  return detail::chain_half<double>(lifted, order);
}

// Affine graph (grad, intercept) of a lifted lower-hull facet.
void facet_graph(const PolytopeT<double>& lower, Index f, Vecd& grad,
                 double& intercept) {
  const Index d = lower.dim;
  const Vecd n = lower.normals.col(f);
  const double nd = n(d - 1);
  grad = -n.head(d - 1) / nd;
  intercept = lower.offsets(f) / nd;
}

// Barycentric membership of v in the simplex spanned by the columns of s.
bool simplex_covers(const Matd& s, const Vecd& v, double tol) {
  const Index dm1 = s.rows();
  if (dm1 == 1) {
    const double lo = std::min(s(0, 0), s(0, 1));
    const double hi = std::max(s(0, 0), s(0, 1));
    return v(0) >= lo - tol && v(0) <= hi + tol;
  }
  Matd edges(dm1, dm1);
  for (Index j = 0; j < dm1; ++j) edges.col(j) = s.col(j + 1) - s.col(0);
  const Vecd mu = edges.fullPivLu().solve(v - s.col(0));
  if (mu.minCoeff() < -tol) return false;
  return mu.sum() <= 1.0 + tol;
}

double face_height_at(const FestoonFace& face, const Vecd& v) {
  return face.grad.dot(v) + face.intercept - 0.5 * v.squaredNorm();
}

// Signed integral of the face height over the projected apex simplex.
double face_height_integral(const Matd& proj, const FestoonFace& face) {
  return simplex_affine_integral<double>(proj, face.grad, face.intercept) -
         0.5 * simplex_quadratic_moment<double>(proj);
}

// Positive-part integral by midpoint quadrature on a subdivision.
double face_positive_integral(const Matd& proj, const FestoonFace& face) {
  const Index dm1 = proj.rows();
  if (dm1 == 1) {
    const double a = proj(0, 0), b = proj(0, 1);
    const int cells = 512;
    const double step = (b - a) / cells;
    double sum = 0.0;
    for (int i = 0; i < cells; ++i) {
      Vecd mid(1);
      mid(0) = a + (i + 0.5) * step;
      sum += std::max(0.0, face_height_at(face, mid));
    }
    return sum * std::abs(step);
  }
  // Barycentric grid; midpoint evaluation on each up/down triangle cell.
  const int m = 64;
  const double area = simplex_affine_integral<double>(
      proj, Vecd::Zero(dm1), 1.0);  // volume of the simplex
  double sum = 0.0;
  Index cells = 0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m - i; ++j) {
      // Upward cell centroid.
      const double l1 = (i + 1.0 / 3.0) / m, l2 = (j + 1.0 / 3.0) / m;
      Vecd p = proj.col(0) * (1 - l1 - l2) + proj.col(1) * l1 +
               proj.col(2) * l2;
      sum += std::max(0.0, face_height_at(face, p));
      ++cells;
      if (j < m - i - 1) {  // downward cell
        const double u1 = (i + 2.0 / 3.0) / m, u2 = (j + 2.0 / 3.0) / m;
        Vecd q = proj.col(0) * (1 - u1 - u2) + proj.col(1) * u1 +
                 proj.col(2) * u2;
        sum += std::max(0.0, face_height_at(face, q));
        ++cells;
      }
    }
  }
  return sum * (area / cells);
}

}  // namespace

double LimitWindow::spatial_volume() const {
  return std::pow(2.0 * half_width, dim_minus_1);
}

double LimitWindow::expected_count() const {
  return spatial_volume() * std::exp(h_max);
}

LimitPointSet sample_limit_process(const LimitWindow& window, RngStream& rng) {
  if (window.dim_minus_1 < 1 || window.half_width <= 0.0)
    throw ConfigError("window needs dim_minus_1 >= 1 and half_width > 0");
  const Index n = static_cast<Index>(rng.next_poisson(window.expected_count()));
  LimitPointSet pts;
  pts.window = window;
  pts.v.resize(window.dim_minus_1, n);
  pts.h.resize(n);
  const double l = window.half_width;
  for (Index j = 0; j < n; ++j) {
    for (int i = 0; i < window.dim_minus_1; ++i)
      pts.v(i, j) = -l + 2.0 * l * rng.next_uniform();
    pts.h(j) = window.h_max + std::log(rng.next_uniform());
  }
  return pts;
}

LimitPointSet with_inserted(const LimitPointSet& base,
                            const std::vector<ScaledPoint>& extra) {
  LimitPointSet out;
  out.window = base.window;
  const Index n = base.size();
  const Index m = static_cast<Index>(extra.size());
  out.v.resize(base.window.dim_minus_1, n + m);
  out.h.resize(n + m);
  out.v.leftCols(n) = base.v;
  out.h.head(n) = base.h;
  out.inserted = base.inserted;
  for (Index j = 0; j < m; ++j) {
    out.v.col(n + j) = extra[j].v;
    out.h(n + j) = extra[j].h;
    out.inserted.push_back(n + j);
  }
  return out;
}

Vecd lift(const ScaledPoint& w) {
  Vecd out(w.v.size() + 1);
  out.head(w.v.size()) = w.v;
  out(w.v.size()) = w.h + 0.5 * w.v.squaredNorm();
  return out;
}

Matd lifted_cloud(const LimitPointSet& pts) {
  const Index dm1 = pts.window.dim_minus_1;
  Matd out(dm1 + 1, pts.size());
  for (Index j = 0; j < pts.size(); ++j) {
    out.col(j).head(dm1) = pts.v.col(j);
    out(dm1, j) = pts.h(j) + 0.5 * pts.v.col(j).squaredNorm();
  }
  return out;
}

std::vector<Index> extreme_points(const LimitPointSet& pts) {
  const Index n = pts.size();
  if (n == 0) return {};
  if (pts.window.dim_minus_1 == 1) return lower_chain_ids_1d(pts);
  const Index d = pts.window.dim_minus_1 + 1;
  if (n <= d) {
    std::vector<Index> all(n);
    std::iota(all.begin(), all.end(), Index{0});
    return all;
  }
  const PolytopeT<double> lower = lower_hull<double>(lifted_cloud(pts));
  return lower.vertices;
}

std::vector<Index> extreme_points_oracle(const LimitPointSet& pts) {
  const Index n = pts.size();
  if (n > 50) throw InstanceTooLarge("oracle accepts at most 50 points");
  const int dm1 = pts.window.dim_minus_1;
  if (dm1 != 1 && dm1 != 2)
    throw ConfigError("oracle covers one and two spatial dimensions");
  std::vector<Index> out;
  const double tol = 1e-9;

  if (dm1 == 1) {
    for (Index i = 0; i < n; ++i) {
      const double x0 = pts.v(0, i), h0 = pts.h(i);
      double lo = -kInf, hi = kInf;
      bool feasible = true;
      for (Index p = 0; p < n && feasible; ++p) {
        if (p == i) continue;
        const double xp = pts.v(0, p), hp = pts.h(p);
        const double c = x0 - xp;
        const double rhs = h0 - hp + 0.5 * (x0 * x0 - xp * xp);
        if (std::abs(c) < 1e-14) {
          if (rhs > 0.0) feasible = false;  // other point strictly below
        } else if (c > 0.0) {
          lo = std::max(lo, rhs / c);
        } else {
          hi = std::min(hi, rhs / c);
        }
      }
      if (feasible && hi - lo > tol) out.push_back(i);
    }
    return out;
  }

  // Two spatial dimensions: feasibility of the half-plane system
  // a . g_p >= r_p over apex candidates (pairwise intersections plus a large
  // bounding box for unbounded regions).
  const double box = 1e6;
  for (Index i = 0; i < n; ++i) {
    const Vecd v0 = pts.v.col(i);
    const double h0 = pts.h(i);
    std::vector<Eigen::Vector2d> g;
    std::vector<double> r;
    bool feasible = true;
    for (Index p = 0; p < n; ++p) {
      if (p == i) continue;
      const Eigen::Vector2d gp = v0 - pts.v.col(p);
      const double rp = h0 - pts.h(p) +
                        0.5 * (v0.squaredNorm() - pts.v.col(p).squaredNorm());
      if (gp.norm() < 1e-14) {
        if (rp > 0.0) feasible = false;
        continue;
      }
      g.push_back(gp);
      r.push_back(rp);
    }
    if (!feasible) continue;
    std::vector<Eigen::Vector2d> candidates;
    candidates.push_back({box, box});
    candidates.push_back({box, -box});
    candidates.push_back({-box, box});
    candidates.push_back({-box, -box});
    const Index m = static_cast<Index>(g.size());
    for (Index a = 0; a < m; ++a) {
      // Intersections of boundary line a with the box edges.
      for (int axis = 0; axis < 2; ++axis) {
        for (double side : {-box, box}) {
          const int other = 1 - axis;
          if (std::abs(g[a](other)) < 1e-14) continue;
          Eigen::Vector2d cand;
          cand(axis) = side;
          cand(other) = (r[a] - g[a](axis) * side) / g[a](other);
          if (std::abs(cand(other)) <= box * 1.000001)
            candidates.push_back(cand);
        }
      }
      for (Index b = a + 1; b < m; ++b) {
        const double det = g[a](0) * g[b](1) - g[a](1) * g[b](0);
        if (std::abs(det) < 1e-12 * g[a].norm() * g[b].norm()) continue;
        candidates.push_back(
            {(r[a] * g[b](1) - r[b] * g[a](1)) / det,
             (g[a](0) * r[b] - g[b](0) * r[a]) / det});
      }
    }
    double best = -kInf;
    for (const auto& cand : candidates) {
      double slack = kInf;
      for (Index p = 0; p < m; ++p)
        slack = std::min(slack, cand.dot(g[p]) - r[p]);
      best = std::max(best, slack);
    }
    if (m == 0 || best > tol) out.push_back(i);
  }
  return out;
}

Festoon festoon(const LimitPointSet& pts) {
  const int dm1 = pts.window.dim_minus_1;
  Festoon fest;
  fest.dim_minus_1 = dm1;
  fest.extreme_ids = extreme_points(pts);
  const Index n = pts.size();
  if (dm1 == 1) {
    const auto& chain = fest.extreme_ids;  // sorted by v
    for (std::size_t j = 0; j + 1 < chain.size(); ++j) {
      const Index a = chain[j], b = chain[j + 1];
      const double xa = pts.v(0, a), xb = pts.v(0, b);
      const double ya = pts.h(a) + 0.5 * xa * xa;
      const double yb = pts.h(b) + 0.5 * xb * xb;
      FestoonFace face;
      face.apex_ids = {a, b};
      face.grad = Vecd::Constant(1, (yb - ya) / (xb - xa));
      face.intercept = ya - face.grad(0) * xa;
      fest.faces.push_back(std::move(face));
    }
    return fest;
  }
  if (n <= dm1 + 1) return fest;  // too few points for a full facet
  const PolytopeT<double> lower = lower_hull<double>(lifted_cloud(pts));
  for (Index f = 0; f < static_cast<Index>(lower.facets.size()); ++f) {
    FestoonFace face;
    face.apex_ids = lower.facets[f];
    facet_graph(lower, f, face.grad, face.intercept);
    fest.faces.push_back(std::move(face));
  }
  return fest;
}

double festoon_height(const Festoon& fest, const LimitPointSet& pts,
                      const Vecd& v) {
  double best = kInf;
  const Index dm1 = fest.dim_minus_1;
  for (const auto& face : fest.faces) {
    Matd proj(dm1, static_cast<Index>(face.apex_ids.size()));
    for (Index j = 0; j < proj.cols(); ++j)
      proj.col(j) = pts.v.col(face.apex_ids[j]);
    if (simplex_covers(proj, v, 1e-9)) best = std::min(best, face_height_at(face, v));
  }
  if (best == kInf) throw OutsideDomain("no festoon face covers this point");
  return best;
}

double up_envelope_height(const LimitPointSet& pts, const Vecd& v) {
  if (pts.size() == 0) throw OutsideDomain("empty point set");
  double best = kInf;
  for (Index j = 0; j < pts.size(); ++j)
    best = std::min(best, pts.h(j) + 0.5 * (v - pts.v.col(j)).squaredNorm());
  return best;
}

std::vector<ScoreRecord> limit_kface_scores(const Festoon& fest, int k) {
  if (k < 0 || k > fest.dim_minus_1)
    throw ConfigError("face dimension outside [0, dim_minus_1]");
  std::set<std::vector<Index>> faces;
  for (const auto& face : fest.faces) {
    std::vector<Index> sorted = face.apex_ids;
    std::sort(sorted.begin(), sorted.end());
    detail::insert_subsets(sorted, k + 1, faces);
  }
  std::map<Index, long long> counts;
  // Isolated extreme points (no incident facet) still carry their 0-face.
  if (k == 0)
    for (Index id : fest.extreme_ids) counts[id] = 0;
  for (const auto& face : faces)
    for (Index v : face) ++counts[v];
  if (k == 0)
    for (Index id : fest.extreme_ids)
      counts[id] = std::max(counts[id], 1LL);
  std::vector<ScoreRecord> out;
  for (const auto& [id, numer] : counts) {
    ScoreRecord rec;
    rec.vertex_id = id;
    rec.kind = ScoreKind::KFace;
    rec.k = k;
    rec.numer = numer;
    rec.value = static_cast<double>(numer) / (k + 1);
    out.push_back(rec);
  }
  return out;
}

std::vector<ScoreRecord> limit_kface_scores(const LimitPointSet& pts, int k) {
  return limit_kface_scores(festoon(pts), k);
}

double erosion_delta(double h_max, double pad) {
  return 2.0 * std::sqrt(2.0 * (h_max + pad));
}

std::vector<ScoreRecord> limit_defect_volume_scores(
    const LimitPointSet& pts, const LimitDefectOptions& options) {
  const Festoon fest = festoon(pts);
  const int dm1 = fest.dim_minus_1;
  const int d = dm1 + 1;
  const double safe =
      pts.window.half_width - erosion_delta(pts.window.h_max, options.erosion_pad);

  std::map<Index, std::vector<Index>> faces_of;
  for (Index f = 0; f < static_cast<Index>(fest.faces.size()); ++f)
    for (Index id : fest.faces[f].apex_ids) faces_of[id].push_back(f);

  std::vector<ScoreRecord> out;
  for (Index id : fest.extreme_ids) {
    ScoreRecord rec;
    rec.vertex_id = id;
    rec.kind = ScoreKind::DefectVolume;
    const auto it = faces_of.find(id);
    if (it == faces_of.end()) {
      rec.censored = true;  // isolated extreme point: no covered cylinder
      out.push_back(rec);
      continue;
    }
    double total = 0.0;
    bool censored = false;
    for (Index f : it->second) {
      const auto& face = fest.faces[f];
      Matd proj(dm1, static_cast<Index>(face.apex_ids.size()));
      for (Index j = 0; j < proj.cols(); ++j) {
        proj.col(j) = pts.v.col(face.apex_ids[j]);
        if (proj.col(j).lpNorm<Eigen::Infinity>() > safe) censored = true;
      }
      total += options.positive_part ? face_positive_integral(proj, face)
                                     : face_height_integral(proj, face);
    }
    rec.value = total / d;
    rec.censored = censored;
    out.push_back(rec);
  }
  return out;
}

ShockLists shocks_2d(const LimitPointSet& pts) {
  if (pts.window.dim_minus_1 != 1)
    throw ConfigError("shock extraction needs one spatial dimension");
  const Festoon fest = festoon(pts);
  ShockLists out;
  if (fest.extreme_ids.size() < 2) {
    out.kinks.resize(2, 0);
    out.apices.resize(2, 0);
    return out;
  }
  out.kinks.resize(2, static_cast<Index>(fest.extreme_ids.size()));
  for (Index j = 0; j < out.kinks.cols(); ++j) {
    const Index id = fest.extreme_ids[j];
    out.kinks(0, j) = pts.v(0, id);
    out.kinks(1, j) = pts.h(id);
  }
  out.apices.resize(2, static_cast<Index>(fest.faces.size()));
  for (Index f = 0; f < out.apices.cols(); ++f) {
    const auto& face = fest.faces[f];
    out.apices(0, f) = face.grad(0);
    out.apices(1, f) = face.intercept + 0.5 * face.grad(0) * face.grad(0);
  }
  const auto spacings = [](const Matd& m) {
    Vecd s(std::max<Index>(m.cols() - 1, 0));
    for (Index j = 0; j + 1 < m.cols(); ++j) s(j) = m(0, j + 1) - m(0, j);
    return s;
  };
  out.kink_spacings = spacings(out.kinks);
  out.apex_spacings = spacings(out.apices);
  return out;
}

double height_functional(const Festoon& fest, Index id) {
  double best = 0.0;
  bool found = false;
  for (const auto& face : fest.faces) {
    if (std::find(face.apex_ids.begin(), face.apex_ids.end(), id) ==
        face.apex_ids.end())
      continue;
    found = true;
    best = std::max(best, face.intercept + 0.5 * face.grad.squaredNorm());
  }
  return found ? best : 0.0;
}

double height_functional(const LimitPointSet& pts, Index id) {
  return height_functional(festoon(pts), id);
}

namespace {

// Score of one point, by kind: k >= 0 selects the k-face score, -1 the
// (uncensored) defect-volume score. Returns the value and, for face scores,
// the integer numerator for exact comparison.
std::pair<double, long long> score_of(const LimitPointSet& pts, Index id,
                                      int score_k) {
  if (score_k >= 0) {
    for (const auto& rec : limit_kface_scores(pts, score_k))
      if (rec.vertex_id == id) return {rec.value, rec.numer};
    return {0.0, 0};
  }
  LimitDefectOptions opt;
  for (const auto& rec : limit_defect_volume_scores(pts, opt))
    if (rec.vertex_id == id) return {rec.value, 0};
  return {0.0, 0};
}

}  // namespace

LocalizationResult localization_radius(const LimitPointSet& pts, Index id,
                                       int score_k, const Vecd& r_grid) {
  const auto full = score_of(pts, id, score_k);
  const Index m = r_grid.size();
  std::vector<bool> matches(m, false);
  for (Index g = 0; g < m; ++g) {
    const double r = r_grid(g);
    LimitPointSet sub;
    sub.window = pts.window;
    std::vector<Index> keep;
    Index new_id = -1;
    for (Index j = 0; j < pts.size(); ++j)
      if ((pts.v.col(j) - pts.v.col(id)).norm() <= r) {
        if (j == id) new_id = static_cast<Index>(keep.size());
        keep.push_back(j);
      }
    sub.v.resize(pts.window.dim_minus_1, static_cast<Index>(keep.size()));
    sub.h.resize(static_cast<Index>(keep.size()));
    for (Index j = 0; j < static_cast<Index>(keep.size()); ++j) {
      sub.v.col(j) = pts.v.col(keep[j]);
      sub.h(j) = pts.h(keep[j]);
    }
    const auto local = score_of(sub, new_id, score_k);
    matches[g] = score_k >= 0
                     ? local.second == full.second
                     : std::abs(local.first - full.first) <=
                           1e-9 * (1.0 + std::abs(full.first));
  }
  LocalizationResult res;
  Index first_stable = m;
  for (Index g = m; g-- > 0;) {
    if (!matches[g]) break;
    first_stable = g;
  }
  if (first_stable == m) {
    res.radius = r_grid(m - 1);
    res.stabilized = false;
  } else {
    res.radius = r_grid(first_stable);
    res.stabilized = true;
  }
  return res;
}

std::pair<Index, Index> ext_window_counts(const LimitPointSet& pts,
                                          double sub_half_width) {
  if (sub_half_width > pts.window.half_width + 1e-12)
    throw ConfigError("sub-window exceeds the sampled window");
  LimitPointSet sub;
  sub.window = pts.window;
  sub.window.half_width = sub_half_width;
  std::vector<Index> keep;
  for (Index j = 0; j < pts.size(); ++j)
    if (pts.v.col(j).lpNorm<Eigen::Infinity>() <= sub_half_width)
      keep.push_back(j);
  sub.v.resize(pts.window.dim_minus_1, static_cast<Index>(keep.size()));
  sub.h.resize(static_cast<Index>(keep.size()));
  for (Index j = 0; j < static_cast<Index>(keep.size()); ++j) {
    sub.v.col(j) = pts.v.col(keep[j]);
    sub.h(j) = pts.h(keep[j]);
  }
  const Index restricted = static_cast<Index>(extreme_points(sub).size());
  Index overlap = 0;
  for (Index id : extreme_points(pts))
    if (pts.v.col(id).lpNorm<Eigen::Infinity>() <= sub_half_width) ++overlap;
  return {restricted, overlap};
}

}  // namespace festoon
