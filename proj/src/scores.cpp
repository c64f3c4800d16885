#include <festoon/scores.hpp>

#include <festoon/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace festoon {

std::vector<ScoreRecord> kface_scores(const FaceLattice& lattice, int k) {
  if (k < 0 || k >= lattice.dim)
    throw ConfigError("face dimension outside [0, dim)");
  std::map<Index, long long> counts;
  for (const auto& face : lattice.faces[k])
    for (Index v : face) ++counts[v];
  std::vector<ScoreRecord> out;
  out.reserve(counts.size());
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

std::vector<ScoreRecord> kface_scores(const PointCloud& cloud, int k) {
  const Polytope poly = convex_hull<double>(cloud);
  return kface_scores(face_lattice<double>(poly), k);
}

std::vector<ScoreRecord> defect_volume_scores(const Polytope& poly,
                                              const ScalingContext& ctx,
                                              Index angle_mc_budget,
                                              std::uint64_t angle_seed) {
  const int d = static_cast<int>(poly.dim);
  const double r = ctx.r_lambda;
  const double ball_volume = unit_ball_volume(d) * std::pow(r, d);

  // Strict interiority of the origin: every facet offset must be positive.
  double scale = 0.0;
  for (Index f = 0; f < static_cast<Index>(poly.facets.size()); ++f)
    scale = std::max(scale, std::abs(poly.offsets(f)));
  for (Index f = 0; f < static_cast<Index>(poly.facets.size()); ++f)
    if (poly.offsets(f) <= kOrientationTol * (1.0 + scale))
      throw OriginNotInterior("hull does not strictly contain the origin");

  std::map<Index, Index> coord_of;
  for (Index i = 0; i < static_cast<Index>(poly.vertices.size()); ++i)
    coord_of[poly.vertices[i]] = i;

  std::map<Index, double> per_vertex;
  for (Index f = 0; f < static_cast<Index>(poly.facets.size()); ++f) {
    const auto& facet = poly.facets[f];
    Mat<double> corners(d, d);
    for (int j = 0; j < d; ++j)
      corners.col(j) = poly.vertex_coords.col(coord_of.at(facet[j]));
    const SolidAngle angle = facet_cone_solid_angle<double>(
        corners, angle_mc_budget, angle_seed + static_cast<std::uint64_t>(f));
    const double cap = angle.fraction * ball_volume;
    const double wedge = origin_simplex_volume<double>(corners);
    const double contribution = (r / d) * (cap - wedge);
    for (Index v : facet) per_vertex[v] += contribution;
  }

  std::vector<ScoreRecord> out;
  out.reserve(per_vertex.size());
  for (const auto& [id, value] : per_vertex) {
    ScoreRecord rec;
    rec.vertex_id = id;
    rec.kind = ScoreKind::DefectVolume;
    rec.value = value;
    out.push_back(rec);
  }
  return out;
}

std::vector<ScoreRecord> defect_volume_scores(const PointCloud& cloud,
                                              const ScalingContext& ctx,
                                              Index angle_mc_budget,
                                              std::uint64_t angle_seed) {
  const Polytope poly = convex_hull<double>(cloud);
  return defect_volume_scores(poly, ctx, angle_mc_budget, angle_seed);
}

}  // namespace festoon
