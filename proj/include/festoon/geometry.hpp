#pragma once

#include <cmath>

#include "festoon/types.hpp"

namespace festoon {

// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
  return std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

// Surface area of the unit sphere S^{d-1}.
inline double unit_sphere_area(int d) { return d * unit_ball_volume(d); }

// Volume of the simplex spanned by the columns of `verts` (d x (d+1)).
template <class S>
S simplex_volume(const Mat<S>& verts) {
  const Index d = verts.rows();
  Mat<S> edges(d, d);
  for (Index i = 0; i < d; ++i) edges.col(i) = verts.col(i + 1) - verts.col(0);
  S vol = std::abs(edges.determinant());
  for (Index i = 2; i <= d; ++i) vol /= static_cast<S>(i);
  return vol;
}

// Volume of the cone simplex conv({0} u facet columns), facet d x d.
template <class S>
S origin_simplex_volume(const Mat<S>& facet) {
  const Index d = facet.rows();
  S vol = std::abs(facet.determinant());
  for (Index i = 2; i <= d; ++i) vol /= static_cast<S>(i);
  return vol;
}

// Integral of |x|^2 over the simplex with columns p_0..p_m in R^m:
// Vol * (|sum p_i|^2 + sum |p_i|^2) / ((m+1)(m+2)).
template <class S>
S simplex_quadratic_moment(const Mat<S>& verts) {
  const Index m = verts.rows();
  const S vol = simplex_volume<S>(verts);
  Vec<S> total = verts.rowwise().sum();
  S acc = total.squaredNorm();
  for (Index i = 0; i < verts.cols(); ++i) acc += verts.col(i).squaredNorm();
  return vol * acc / static_cast<S>((m + 1) * (m + 2));
}

// Integral of an affine function a.v + b over the same simplex:
// Vol * (a . centroid + b).
template <class S>
S simplex_affine_integral(const Mat<S>& verts, const Vec<S>& a, S b) {
  const S vol = simplex_volume<S>(verts);
  Vec<S> centroid = verts.rowwise().mean();
  return vol * (a.dot(centroid) + b);
}

// Orthonormal basis of the orthogonal complement of unit vector n in R^d,
// returned as d x (d-1) columns (Householder completion).
template <class S>
Mat<S> orthonormal_complement(const Vec<S>& n) {
  const Index d = n.size();
  Mat<S> house = Mat<S>::Identity(d, d);
  Vec<S> v = n;
  v(0) += (n(0) >= S(0) ? S(1) : S(-1));
  house -= S(2) / v.squaredNorm() * (v * v.transpose());
  // First column of house is -/+ n; the rest span its complement.
  return house.rightCols(d - 1);
}

}  // namespace festoon
