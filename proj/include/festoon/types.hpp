#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace festoon {

using Index = Eigen::Index;

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// A point cloud stores one point per column; the ambient dimension is rows().
template <class Scalar>
using PointCloudT = Mat<Scalar>;
using PointCloud = PointCloudT<double>;

using VecXd = Vec<double>;
using MatXd = Mat<double>;

// Relative tolerance applied to orientation determinants and hyperplane
// distance tests; ties are resolved toward "not a vertex".
inline constexpr double kOrientationTol = 1e-10;

struct DegenerateInput : std::runtime_error {
  explicit DegenerateInput(const std::string& what) : std::runtime_error(what) {}
};

struct OriginOnFacetHull : std::runtime_error {
  explicit OriginOnFacetHull(const std::string& what) : std::runtime_error(what) {}
};

struct OriginNotInterior : std::runtime_error {
  explicit OriginNotInterior(const std::string& what) : std::runtime_error(what) {}
};

struct LambdaTooSmall : std::invalid_argument {
  explicit LambdaTooSmall(const std::string& what) : std::invalid_argument(what) {}
};

struct InstanceTooLarge : std::invalid_argument {
  explicit InstanceTooLarge(const std::string& what) : std::invalid_argument(what) {}
};

struct OutsideDomain : std::domain_error {
  explicit OutsideDomain(const std::string& what) : std::domain_error(what) {}
};

struct BoundaryFace : std::runtime_error {
  explicit BoundaryFace(const std::string& what) : std::runtime_error(what) {}
};

struct MissingBeta : std::invalid_argument {
  explicit MissingBeta(const std::string& what) : std::invalid_argument(what) {}
};

struct TruncationDominates : std::runtime_error {
  explicit TruncationDominates(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace festoon
