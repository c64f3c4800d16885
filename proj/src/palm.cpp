#include <festoon/palm.hpp>

#include <algorithm>
#include <cmath>

namespace festoon {

LowerChain LowerChain::from_points(const LimitPointSet& pts) {
  if (pts.window.dim_minus_1 != 1)
    throw ConfigError("LowerChain needs one spatial dimension");
  const std::vector<Index> chain = extreme_points(pts);
  std::vector<double> xs(chain.size()), ys(chain.size());
  for (std::size_t j = 0; j < chain.size(); ++j) {
    const double v = pts.v(0, chain[j]);
    xs[j] = v;
    ys[j] = pts.h(chain[j]) + 0.5 * v * v;
  }
  return from_sorted(std::move(xs), std::move(ys));
}

LowerChain LowerChain::from_sorted(std::vector<double> xs,
                                   std::vector<double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw DegenerateInput("chain needs >= 2 vertices");
  LowerChain chain;
  chain.edge_.resize(xs.size() - 1);
  for (std::size_t j = 0; j + 1 < xs.size(); ++j) {
    if (!(xs[j + 1] > xs[j]))
      throw DegenerateInput("chain abscissae must increase strictly");
    chain.edge_[j] = (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]);
    if (j > 0 && chain.edge_[j] < chain.edge_[j - 1] - 1e-12)
      throw DegenerateInput("chain must be convex");
  }
  chain.xs_ = std::move(xs);
  chain.ys_ = std::move(ys);
  return chain;
}

void LowerChain::check_inside(double q) const {
  if (q < xs_.front() - 1e-12 || q > xs_.back() + 1e-12)
    throw OutsideDomain("query outside the chain domain");
}

double LowerChain::value(double q) const {
  check_inside(q);
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), q);
  Index j = static_cast<Index>(it - xs_.begin()) - 1;
  j = std::clamp<Index>(j, 0, static_cast<Index>(xs_.size()) - 2);
  return ys_[j] + edge_[j] * (q - xs_[j]);
}

// Leftmost chain vertex whose joining segment to (px, py) supports the
// chain: the first j (among vertices strictly left of px) where p lies
// below the extended edge j -> j+1. The predicate is monotone in j because
// edge slopes are nondecreasing.
Index LowerChain::left_tangent(double px, double py, Index count_left) const {
  Index lo = 0, hi = count_left - 1;
  while (lo < hi) {
    const Index mid = lo + (hi - lo) / 2;
    if (py < ys_[mid] + edge_[mid] * (px - xs_[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

// Mirror search among vertices strictly right of px: first j where p lies
// on or above the extension of edge j -> j+1 back to px.
Index LowerChain::right_tangent(double px, double py, Index first_right) const {
  Index lo = first_right, hi = static_cast<Index>(xs_.size()) - 1;
  while (lo < hi) {
    const Index mid = lo + (hi - lo) / 2;
    if (py >= ys_[mid] + edge_[mid] * (px - xs_[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

double LowerChain::value_with_point(double px, double py, double q) const {
  check_inside(q);
  check_inside(px);
  if (py >= value(px)) return value(q);
  const Index n = static_cast<Index>(xs_.size());
  const Index count_left = static_cast<Index>(
      std::lower_bound(xs_.begin(), xs_.end(), px) - xs_.begin());
  const Index first_right = static_cast<Index>(
      std::upper_bound(xs_.begin(), xs_.end(), px) - xs_.begin());
  if (q < px) {
    if (count_left == 0) return py;  // q pinched between domain edge and px
    const Index l = left_tangent(px, py, count_left);
    if (q <= xs_[l]) return value(q);
    const double slope = (py - ys_[l]) / (px - xs_[l]);
    return ys_[l] + slope * (q - xs_[l]);
  }
  if (first_right >= n) return py;
  const Index r = right_tangent(px, py, first_right);
  if (q >= xs_[r]) return value(q);
  const double slope = (ys_[r] - py) / (xs_[r] - px);
  return py + slope * (q - px);
}

std::pair<bool, bool> both_extreme_after_insert(const LowerChain& chain,
                                                const ScaledPoint& w0,
                                                const ScaledPoint& w1) {
  const double x0 = w0.v(0), x1 = w1.v(0);
  const double y0 = w0.h + 0.5 * x0 * x0;
  const double y1 = w1.h + 0.5 * x1 * x1;
  if (std::abs(x0 - x1) < 1e-15) {
    // Vertically stacked candidates: only the lower one can be extreme.
    const double env = chain.value(x0);
    if (y0 < y1) return {y0 < env, false};
    return {false, y1 < env};
  }
  const bool first = y0 < chain.value_with_point(x1, y1, x0);
  const bool second = y1 < chain.value_with_point(x0, y0, x1);
  return {first, second};
}

}  // namespace festoon
