#pragma once

// Intrinsic volumes by Grassmannian Monte Carlo: average the k-volume of the
// hull's projection onto Haar-random k-subspaces and rescale by the flag
// coefficient d! kappa_d / (k! kappa_k (d-k)! kappa_{d-k}).

#include <festoon/rng.hpp>
#include <festoon/scaling.hpp>
#include <festoon/types.hpp>

namespace festoon {

struct IntrinsicVolumeEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int k = 0;
  Index subspaces = 0;       // accepted subspaces averaged over
  Index rejections = 0;      // degenerate projections resampled
  double within_variance = 0.0;  // MC variance of the estimate itself
};

// Flag coefficient in front of the Grassmannian average.
double kubota_coefficient(int d, int k);

// Monte-Carlo intrinsic volume V_k of the hull of `cloud` using
// `num_subspaces` Haar-random subspaces (orthonormalized Gaussian frames).
// Degenerate projections are rejected and resampled, with a cap.
IntrinsicVolumeEstimate intrinsic_volume(const PointCloud& cloud, int k,
                                         Index num_subspaces, RngStream& rng);

}  // namespace festoon
