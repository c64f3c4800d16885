#pragma once

#include <utility>
#include <vector>

#include "festoon/limit.hpp"

namespace festoon {

// Convex piecewise-linear lower chain in lifted coordinates
// (x = v, y = h + v^2/2) for one spatial dimension. Supports O(log n)
// envelope evaluation and evaluation after inserting one extra point,
// without rebuilding the chain. Both queries require the abscissa to lie
// inside the chain domain [domain_lo(), domain_hi()].
class LowerChain {
 public:
  // Chain of the extreme points of a sampled set (dim_minus_1 == 1).
  static LowerChain from_points(const LimitPointSet& pts);
  // Chain from explicit lifted vertices; xs must be strictly increasing and
  // the induced edge slopes nondecreasing.
  static LowerChain from_sorted(std::vector<double> xs, std::vector<double> ys);

  Index size() const { return static_cast<Index>(xs_.size()); }
  double domain_lo() const { return xs_.front(); }
  double domain_hi() const { return xs_.back(); }
  double vertex_x(Index j) const { return xs_[j]; }
  double vertex_y(Index j) const { return ys_[j]; }

  // Envelope height at q.
  double value(double q) const;

  // Envelope of chain + {(px, py)} at q. Falls back to value(q) when the
  // extra point lies on or above the chain.
  double value_with_point(double px, double py, double q) const;

 private:
  LowerChain() = default;
  Index left_tangent(double px, double py, Index count_left) const;
  Index right_tangent(double px, double py, Index first_right) const;
  void check_inside(double q) const;

  std::vector<double> xs_, ys_;
  std::vector<double> edge_;  // edge_[j]: slope of segment j -> j+1
};

// Extremity of each of two candidate points when both are inserted into the
// point set underlying `chain`. Candidates are given in (v, h) coordinates
// with scalar v.
std::pair<bool, bool> both_extreme_after_insert(const LowerChain& chain,
                                                const ScaledPoint& w0,
                                                const ScaledPoint& w1);

}  // namespace festoon
