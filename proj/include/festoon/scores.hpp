#pragma once

// Per-vertex score functionals of a finite sample's hull: the k-face count
// scores (each k-face splits one unit of mass evenly over its k+1 vertices)
// and the defect-volume scores (per-vertex share of the gap between the
// critical ball and the hull).

#include <festoon/hull.hpp>
#include <festoon/scaling.hpp>
#include <festoon/types.hpp>

#include <vector>

namespace festoon {

enum class ScoreKind { KFace, DefectVolume };

struct ScoreRecord {
  Index vertex_id = 0;
  ScoreKind kind = ScoreKind::KFace;
  int k = 0;               // face dimension for KFace scores
  double value = 0.0;      // the score; 0 for non-extreme points
  long long numer = 0;     // KFace only: integer count, value = numer/(k+1)
  bool censored = false;   // set by boundary-erosion rules downstream
};

using Polytope = PolytopeT<double>;

// Scores of every hull vertex for face dimension k: value = (number of
// k-faces containing the vertex) / (k + 1). Summing values over vertices
// gives f_k; summing numerators gives (k+1) f_k exactly in integers.
// Non-vertex sample points carry score 0 and are omitted from the output.
std::vector<ScoreRecord> kface_scores(const PointCloud& cloud, int k);
std::vector<ScoreRecord> kface_scores(const FaceLattice& lattice, int k);

// Defect-volume score of every hull vertex: (R/d) times the volume between
// the critical ball and the hull inside the cone spanned by the facets
// containing the vertex. Cone-cap volumes use exact solid angles for d <= 3
// and Monte-Carlo angles above (budget/seed configurable).
// Throws OriginNotInterior when the hull does not strictly contain 0.
std::vector<ScoreRecord> defect_volume_scores(const PointCloud& cloud,
                                              const ScalingContext& ctx,
                                              Index angle_mc_budget = 100000,
                                              std::uint64_t angle_seed = 1);
std::vector<ScoreRecord> defect_volume_scores(const Polytope& poly,
                                              const ScalingContext& ctx,
                                              Index angle_mc_budget = 100000,
                                              std::uint64_t angle_seed = 1);

}  // namespace festoon
