#include <festoon/kubota.hpp>

#include <festoon/geometry.hpp>
#include <festoon/hull.hpp>
#include <festoon/stats.hpp>

#include <cmath>
#include <vector>

namespace festoon {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// k-volume of the hull of a k-dimensional projected cloud.
double projected_volume(const Mat<double>& proj) {
  const int k = static_cast<int>(proj.rows());
  if (k == 1) {
    return proj.row(0).maxCoeff() - proj.row(0).minCoeff();
  }
  const PolytopeT<double> hull = convex_hull<double>(proj);
  return polytope_volume<double>(hull, proj);
}

}  // namespace

double kubota_coefficient(int d, int k) {
  return factorial(d) * unit_ball_volume(d) /
         (factorial(k) * unit_ball_volume(k) * factorial(d - k) *
          unit_ball_volume(d - k));
}

IntrinsicVolumeEstimate intrinsic_volume(const PointCloud& cloud, int k,
                                         Index num_subspaces, RngStream& rng) {
  const int d = static_cast<int>(cloud.rows());
  if (k < 1 || k > d) throw ConfigError("projection dimension outside [1, d]");
  if (num_subspaces < 1) throw ConfigError("need at least one subspace");

  IntrinsicVolumeEstimate est;
  est.k = k;

  if (k == d) {
    // The Grassmannian is a point and the coefficient is 1.
    const PolytopeT<double> hull = convex_hull<double>(cloud);
    est.value = polytope_volume<double>(hull, cloud);
    est.subspaces = 1;
    return est;
  }

  std::vector<double> volumes;
  volumes.reserve(num_subspaces);
  const Index max_rejections = 100 + 10 * num_subspaces;
  while (static_cast<Index>(volumes.size()) < num_subspaces) {
    // Haar subspace: orthonormalize a Gaussian d x k frame.
    Mat<double> frame(d, k);
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < d; ++i) frame(i, j) = rng.next_normal();
    Eigen::HouseholderQR<Mat<double>> qr(frame);
    Mat<double> q = qr.householderQ() * Mat<double>::Identity(d, k);
    try {
      volumes.push_back(projected_volume(q.transpose() * cloud));
    } catch (const DegenerateInput&) {
      ++est.rejections;
      if (est.rejections > max_rejections)
        throw DegenerateInput("projected cloud persistently degenerate");
    }
  }

  const double c = kubota_coefficient(d, k);
  est.value = c * mean_of(volumes);
  est.within_variance =
      c * c * sample_variance(volumes) / static_cast<double>(volumes.size());
  est.std_error = std::sqrt(est.within_variance);
  est.subspaces = num_subspaces;
  return est;
}

}  // namespace festoon
