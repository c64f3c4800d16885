#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "festoon/geometry.hpp"
#include "festoon/rng.hpp"
#include "festoon/types.hpp"

namespace festoon {

// Convex polytope produced by convex_hull / lower_hull. Facets are simplicial
// ((d)-vertex tuples of cloud ids); vertex_coords holds the hull vertices'
// coordinates aligned with `vertices` so the polytope is self-contained.
template <class S>
struct PolytopeT {
  Index dim = 0;
  std::vector<Index> vertices;              // sorted cloud ids
  Mat<S> vertex_coords;                     // dim x vertices.size()
  std::vector<std::vector<Index>> facets;   // sorted cloud ids per facet
  Mat<S> normals;                           // dim x facets.size(), outward unit
  Vec<S> offsets;                           // normals.col(f) . x = offsets[f]
  Vec<S> interior;                          // reference point with n.x < offset
};
using Polytope = PolytopeT<double>;

struct FaceLattice {
  Index dim = 0;
  // faces[k] lists the k-faces as sorted vertex-id tuples, k = 0..dim-1.
  std::vector<std::vector<std::vector<Index>>> faces;

  std::vector<Index> f_vector() const {
    std::vector<Index> f;
    f.reserve(faces.size());
    for (const auto& level : faces) f.push_back(static_cast<Index>(level.size()));
    return f;
  }
};

struct SolidAngle {
  double fraction = 0.0;
  double se = 0.0;
};

namespace detail {

template <class S>
S cross2(S ox, S oy, S ax, S ay, S bx, S by) {
  return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox);
}

template <class S>
S cross2_scale(S ox, S oy, S ax, S ay, S bx, S by) {
  return (std::abs(ax - ox) + std::abs(bx - ox)) *
             (std::abs(ay - oy) + std::abs(by - oy)) +
         S(1e-300);
}

// Monotone chain over ids in the given traversal order (ascending (x, y) for
// the lower boundary, descending for the upper). Keeps strict left turns
// only, so near-collinear middle points are dropped (ties resolve toward
// non-vertex).
template <class S>
std::vector<Index> chain_half(const PointCloudT<S>& pts,
                              const std::vector<Index>& order) {
  std::vector<Index> chain;
  chain.reserve(64);
  const auto x = [&](Index id) { return pts(0, id); };
  const auto y = [&](Index id) { return pts(1, id); };
  for (Index id : order) {
    while (chain.size() >= 2) {
      const Index a = chain[chain.size() - 2];
      const Index b = chain[chain.size() - 1];
      const S c = cross2<S>(x(a), y(a), x(b), y(b), x(id), y(id));
      const S scale = cross2_scale<S>(x(a), y(a), x(b), y(b), x(id), y(id));
      if (c > S(kOrientationTol) * scale) break;
      chain.pop_back();
    }
    chain.push_back(id);
  }
  return chain;
}

// Akl-Toussaint style prefilter: points strictly inside the polygon spanned
// by directional extremes cannot be hull vertices and are discarded.
template <class S>
std::vector<Index> planar_prefilter(const PointCloudT<S>& pts) {
  const Index n = pts.cols();
  const S* xs = pts.data();  // column-major, 2 rows: x = data[2i], y = data[2i+1]
  std::array<Index, 8> ext{};
  std::array<S, 8> best;
  best.fill(-std::numeric_limits<S>::infinity());
  for (Index i = 0; i < n; ++i) {
    const S x = xs[2 * i], y = xs[2 * i + 1];
    const std::array<S, 8> val = {x, x + y, y, y - x, -x, -x - y, -y, x - y};
    for (int k = 0; k < 8; ++k) {
      if (val[k] > best[k]) {
        best[k] = val[k];
        ext[k] = i;
      }
    }
  }
  std::vector<Index> cand(ext.begin(), ext.end());
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  if (cand.size() < 3) {
    std::vector<Index> all(n);
    for (Index i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  S cx = 0, cy = 0;
  for (Index id : cand) {
    cx += xs[2 * id];
    cy += xs[2 * id + 1];
  }
  cx /= cand.size();
  cy /= cand.size();
  std::sort(cand.begin(), cand.end(), [&](Index a, Index b) {
    return std::atan2(xs[2 * a + 1] - cy, xs[2 * a] - cx) <
           std::atan2(xs[2 * b + 1] - cy, xs[2 * b] - cx);
  });
  const int m = static_cast<int>(cand.size());
  std::vector<S> ax(m), ay(m), ex(m), ey(m);
  S scale = S(1);
  for (int k = 0; k < m; ++k) {
    const Index a = cand[k], b = cand[(k + 1) % m];
    ax[k] = xs[2 * a];
    ay[k] = xs[2 * a + 1];
    ex[k] = xs[2 * b] - ax[k];
    ey[k] = xs[2 * b + 1] - ay[k];
    scale = std::max({scale, std::abs(ax[k]), std::abs(ay[k])});
  }
  const S margin = S(1e-9) * scale;
  // Radius of a disc around the candidate centroid certainly inside the
  // polygon; most points shortcut through this test.
  S r_in = std::numeric_limits<S>::infinity();
  for (int k = 0; k < m; ++k) {
    const S len = std::hypot(ex[k], ey[k]);
    if (len <= S(0)) continue;
    const S dist = (ex[k] * (cy - ay[k]) - ey[k] * (cx - ax[k])) / len;
    r_in = std::min(r_in, std::abs(dist));
  }
  const S r_safe = std::max(S(0), r_in - margin);
  const S r_safe2 = r_safe * r_safe;
  std::vector<Index> out;
  out.reserve(1024);
  for (Index i = 0; i < n; ++i) {
    const S x = xs[2 * i], y = xs[2 * i + 1];
    const S dx = x - cx, dy = y - cy;
    if (dx * dx + dy * dy < r_safe2) continue;
    bool inside = true;
    for (int k = 0; k < m; ++k) {
      if (ex[k] * (y - ay[k]) - ey[k] * (x - ax[k]) < margin) {
        inside = false;
        break;
      }
    }
    if (!inside) out.push_back(i);
  }
  for (Index id : cand)
    if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Counterclockwise hull vertex ids of a planar cloud (2 x n).
template <class S>
std::vector<Index> planar_hull_indices(const PointCloudT<S>& pts) {
  if (pts.rows() != 2) throw DegenerateInput("planar_hull_indices: need 2 rows");
  std::vector<Index> order;
  if (pts.cols() >= 4096) {
    order = detail::planar_prefilter<S>(pts);
  } else {
    order.resize(pts.cols());
    for (Index i = 0; i < pts.cols(); ++i) order[i] = i;
  }
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return pts(0, a) != pts(0, b) ? pts(0, a) < pts(0, b) : pts(1, a) < pts(1, b);
  });
  const std::vector<Index> lower = detail::chain_half<S>(pts, order);
  std::reverse(order.begin(), order.end());
  const std::vector<Index> upper = detail::chain_half<S>(pts, order);
  std::vector<Index> hull(lower.begin(), lower.end() - 1);
  hull.insert(hull.end(), upper.begin(), upper.end() - 1);
  if (hull.size() < 3)
    throw DegenerateInput("planar hull: affine dimension < 2 within tolerance");
  return hull;
}

namespace detail {

template <class S>
struct HullBuilder {
  const PointCloudT<S>& pts;
  Index d;
  Vec<S> interior;
  struct Facet {
    std::vector<Index> verts;  // sorted, size d
    Vec<S> normal;
    S offset;
    std::vector<Index> nbrs;  // nbrs[i] across ridge verts \ {verts[i]}
    bool alive = true;
  };
  std::vector<Facet> facets;

  explicit HullBuilder(const PointCloudT<S>& cloud) : pts(cloud), d(cloud.rows()) {}

  S point_scale(Index id) const { return S(1) + pts.col(id).template lpNorm<1>(); }

  // Unit normal + offset of the hyperplane through the given d points.
  std::pair<Vec<S>, S> hyperplane(const std::vector<Index>& ids) const {
    Mat<S> edges(d, d - 1);
    for (Index i = 0; i + 1 < static_cast<Index>(ids.size()); ++i)
      edges.col(i) = pts.col(ids[i + 1]) - pts.col(ids[0]);
    Eigen::HouseholderQR<Mat<S>> qr(edges);
    Mat<S> q = qr.householderQ();
    Vec<S> n = q.col(d - 1);
    return {n, n.dot(pts.col(ids[0]))};
  }

  void add_facet(std::vector<Index> ids) {
    auto [n, b] = hyperplane(ids);
    if (n.dot(interior) > b) {
      n = -n;
      b = -b;
    }
    Facet f;
    f.verts = std::move(ids);
    f.normal = std::move(n);
    f.offset = b;
    f.nbrs.assign(d, -1);
    facets.push_back(std::move(f));
  }

  S dist(const Facet& f, Index id) const {
    return f.normal.dot(pts.col(id)) - f.offset;
  }

  bool visible(const Facet& f, Index id) const {
    return dist(f, id) > S(kOrientationTol) * (point_scale(id) + std::abs(f.offset));
  }

  void wire_initial() {
    std::map<std::vector<Index>, std::pair<Index, Index>> ridge_owner;
    for (Index fi = 0; fi < static_cast<Index>(facets.size()); ++fi) {
      auto& f = facets[fi];
      for (Index slot = 0; slot < d; ++slot) {
        std::vector<Index> ridge;
        ridge.reserve(d - 1);
        for (Index j = 0; j < d; ++j)
          if (j != slot) ridge.push_back(f.verts[j]);
        auto it = ridge_owner.find(ridge);
        if (it == ridge_owner.end()) {
          ridge_owner.emplace(std::move(ridge), std::make_pair(fi, slot));
        } else {
          f.nbrs[slot] = it->second.first;
          facets[it->second.first].nbrs[it->second.second] = fi;
        }
      }
    }
  }

  void insert(Index id) {
    thread_local std::vector<char> vis;
    vis.assign(facets.size(), 0);
    bool any = false;
    for (std::size_t fi = 0; fi < facets.size(); ++fi) {
      if (facets[fi].alive && visible(facets[fi], static_cast<Index>(id))) {
        vis[fi] = 1;
        any = true;
      }
    }
    if (!any) return;
    struct HorizonEntry {
      std::vector<Index> ridge;
      Index outside_facet;
      Index outside_slot;
    };
    std::vector<HorizonEntry> horizon;
    for (std::size_t fi = 0; fi < facets.size(); ++fi) {
      if (!vis[fi]) continue;
      const auto& f = facets[fi];
      for (Index slot = 0; slot < d; ++slot) {
        const Index g = f.nbrs[slot];
        if (g < 0 || vis[g]) continue;
        HorizonEntry e;
        for (Index j = 0; j < d; ++j)
          if (j != slot) e.ridge.push_back(f.verts[j]);
        e.outside_facet = g;
        e.outside_slot = -1;
        for (Index gs = 0; gs < d; ++gs)
          if (facets[g].nbrs[gs] == static_cast<Index>(fi)) e.outside_slot = gs;
        horizon.push_back(std::move(e));
      }
    }
    for (std::size_t fi = 0; fi < facets.size(); ++fi)
      if (vis[fi]) facets[fi].alive = false;
    std::map<std::vector<Index>, std::pair<Index, Index>> new_ridges;
    for (auto& e : horizon) {
      std::vector<Index> ids = e.ridge;
      ids.push_back(id);
      std::sort(ids.begin(), ids.end());
      add_facet(ids);
      const Index nf = static_cast<Index>(facets.size()) - 1;
      auto& f = facets[nf];
      for (Index slot = 0; slot < d; ++slot) {
        std::vector<Index> ridge;
        for (Index j = 0; j < d; ++j)
          if (j != slot) ridge.push_back(f.verts[j]);
        if (f.verts[slot] == id) {
          // Across the old ridge sits the untouched outside facet.
          f.nbrs[slot] = e.outside_facet;
          facets[e.outside_facet].nbrs[e.outside_slot] = nf;
        } else {
          auto it = new_ridges.find(ridge);
          if (it == new_ridges.end()) {
            new_ridges.emplace(std::move(ridge), std::make_pair(nf, slot));
          } else {
            f.nbrs[slot] = it->second.first;
            facets[it->second.first].nbrs[it->second.second] = nf;
          }
        }
      }
    }
  }
};

}  // namespace detail

// Simplicial convex hull by randomized incremental insertion. The cloud must
// have full affine dimension within tolerance; shuffle_seed fixes the
// insertion order so a build is reproducible.
template <class S>
PolytopeT<S> convex_hull(const PointCloudT<S>& cloud,
                         std::uint64_t shuffle_seed = 0) {
  const Index d = cloud.rows();
  const Index n = cloud.cols();
  if (d < 2) throw DegenerateInput("convex_hull: dimension must be >= 2");
  if (n < d + 1) throw DegenerateInput("convex_hull: fewer than d+1 points");

  PolytopeT<S> poly;
  poly.dim = d;

  if (d == 2) {
    const std::vector<Index> ring = planar_hull_indices<S>(cloud);
    const Index m = static_cast<Index>(ring.size());
    poly.vertices = ring;
    std::sort(poly.vertices.begin(), poly.vertices.end());
    poly.vertex_coords.resize(2, m);
    for (Index i = 0; i < m; ++i) poly.vertex_coords.col(i) = cloud.col(poly.vertices[i]);
    poly.interior = Vec<S>::Zero(2);
    for (Index id : ring) poly.interior += cloud.col(id);
    poly.interior /= static_cast<S>(m);
    poly.normals.resize(2, m);
    poly.offsets.resize(m);
    poly.facets.reserve(m);
    std::vector<std::pair<std::vector<Index>, Index>> order;
    for (Index i = 0; i < m; ++i) {
      const Index a = ring[i], b = ring[(i + 1) % m];
      Vec<S> t = cloud.col(b) - cloud.col(a);
      Vec<S> nrm(2);
      nrm << t(1), -t(0);
      nrm.normalize();
      poly.normals.col(i) = nrm;
      poly.offsets(i) = nrm.dot(cloud.col(a));
      std::vector<Index> fv = {std::min(a, b), std::max(a, b)};
      order.push_back({std::move(fv), i});
    }
    std::sort(order.begin(), order.end());
    Mat<S> nsorted(2, m);
    Vec<S> osorted(m);
    for (Index i = 0; i < m; ++i) {
      poly.facets.push_back(order[i].first);
      nsorted.col(i) = poly.normals.col(order[i].second);
      osorted(i) = poly.offsets(order[i].second);
    }
    poly.normals = nsorted;
    poly.offsets = osorted;
    return poly;
  }

  detail::HullBuilder<S> builder(cloud);

  // Greedy well-conditioned initial simplex.
  std::vector<Index> init = {0};
  Mat<S> basis(d, 0);
  const S base_scale = S(1) + cloud.col(0).template lpNorm<1>();
  while (static_cast<Index>(init.size()) < d + 1) {
    Index best = -1;
    S best_res = S(0);
    for (Index i = 0; i < n; ++i) {
      if (std::find(init.begin(), init.end(), i) != init.end()) continue;
      Vec<S> delta = cloud.col(i) - cloud.col(init[0]);
      if (basis.cols() > 0) delta -= basis * (basis.transpose() * delta);
      const S res = delta.norm();
      if (res > best_res) {
        best_res = res;
        best = i;
      }
    }
    if (best < 0 || best_res <= S(kOrientationTol) * (base_scale + builder.point_scale(best < 0 ? 0 : best)))
      throw DegenerateInput("convex_hull: affine dimension < d within tolerance");
    Vec<S> delta = cloud.col(best) - cloud.col(init[0]);
    if (basis.cols() > 0) delta -= basis * (basis.transpose() * delta);
    basis.conservativeResize(d, basis.cols() + 1);
    basis.col(basis.cols() - 1) = delta / delta.norm();
    init.push_back(best);
  }

  builder.interior = Vec<S>::Zero(d);
  for (Index id : init) builder.interior += cloud.col(id);
  builder.interior /= static_cast<S>(d + 1);

  std::vector<Index> sorted_init = init;
  std::sort(sorted_init.begin(), sorted_init.end());
  for (Index skip = 0; skip < d + 1; ++skip) {
    std::vector<Index> ids;
    for (Index j = 0; j < d + 1; ++j)
      if (j != skip) ids.push_back(sorted_init[j]);
    builder.add_facet(ids);
  }
  builder.wire_initial();

  std::vector<Index> rest;
  rest.reserve(n);
  for (Index i = 0; i < n; ++i)
    if (std::find(init.begin(), init.end(), i) == init.end()) rest.push_back(i);
  RngStream shuffle(shuffle_seed, mix_stream_id({0x48554C4Cu}));
  for (std::size_t i = rest.size(); i > 1; --i) {
    const std::size_t j = shuffle.next_u64() % i;
    std::swap(rest[i - 1], rest[j]);
  }
  for (Index id : rest) builder.insert(id);

  std::vector<Index> alive;
  for (std::size_t fi = 0; fi < builder.facets.size(); ++fi)
    if (builder.facets[fi].alive) alive.push_back(static_cast<Index>(fi));
  std::sort(alive.begin(), alive.end(), [&](Index a, Index b) {
    return builder.facets[a].verts < builder.facets[b].verts;
  });

  std::set<Index> vset;
  for (Index fi : alive)
    for (Index v : builder.facets[fi].verts) vset.insert(v);
  poly.vertices.assign(vset.begin(), vset.end());
  poly.vertex_coords.resize(d, static_cast<Index>(poly.vertices.size()));
  for (Index i = 0; i < static_cast<Index>(poly.vertices.size()); ++i)
    poly.vertex_coords.col(i) = cloud.col(poly.vertices[i]);
  poly.interior = builder.interior;
  poly.normals.resize(d, static_cast<Index>(alive.size()));
  poly.offsets.resize(static_cast<Index>(alive.size()));
  for (Index i = 0; i < static_cast<Index>(alive.size()); ++i) {
    poly.facets.push_back(builder.facets[alive[i]].verts);
    poly.normals.col(i) = builder.facets[alive[i]].normal;
    poly.offsets(i) = builder.facets[alive[i]].offset;
  }
  return poly;
}

template <class S>
bool polytope_contains(const PolytopeT<S>& poly, const Vec<S>& x,
                       S tol = S(1e-9)) {
  for (Index f = 0; f < poly.offsets.size(); ++f)
    if (poly.normals.col(f).dot(x) > poly.offsets(f) + tol * (S(1) + std::abs(poly.offsets(f))))
      return false;
  return true;
}

namespace detail {

inline void insert_subsets(const std::vector<Index>& verts, int take,
                           std::set<std::vector<Index>>& out) {
  const int n = static_cast<int>(verts.size());
  std::vector<int> pick(take);
  for (int i = 0; i < take; ++i) pick[i] = i;
  while (true) {
    std::vector<Index> face(take);
    for (int i = 0; i < take; ++i) face[i] = verts[pick[i]];
    out.insert(std::move(face));
    int i = take - 1;
    while (i >= 0 && pick[i] == n - take + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < take; ++j) pick[j] = pick[j - 1] + 1;
  }
}

}  // namespace detail

// Face lattice of a hull. Coplanar facet groups (supporting the same
// hyperplane) are merged into geometric faces and recursed, so exact inputs
// like hypercube vertex clouds report true f-vectors; clouds in general
// position take the pure simplicial path.
template <class S>
FaceLattice face_lattice(const PolytopeT<S>& poly) {
  const Index d = poly.dim;
  FaceLattice lat;
  lat.dim = d;
  lat.faces.resize(d);
  const Index nf = static_cast<Index>(poly.facets.size());

  // Group facets by supporting hyperplane (convexity makes same-plane facets
  // one geometric face).
  std::vector<Index> group(nf);
  for (Index i = 0; i < nf; ++i) group[i] = i;
  const auto find_root = [&](Index i) {
    while (group[i] != i) i = group[i] = group[group[i]];
    return i;
  };
  for (Index i = 0; i < nf; ++i) {
    for (Index j = i + 1; j < nf; ++j) {
      if (poly.normals.col(i).dot(poly.normals.col(j)) > S(1) - S(1e-8) &&
          std::abs(poly.offsets(i) - poly.offsets(j)) <
              S(1e-8) * (S(1) + std::abs(poly.offsets(i)))) {
        group[find_root(i)] = find_root(j);
      }
    }
  }
  std::map<Index, std::vector<Index>> groups;
  for (Index i = 0; i < nf; ++i) groups[find_root(i)].push_back(i);

  std::vector<std::set<std::vector<Index>>> levels(d);
  // Planar chains never emit collinear edge pairs, so polygons always take
  // the simplicial path.
  bool simplicial = true;
  if (d > 2)
    for (const auto& [root, members] : groups)
      if (members.size() > 1) simplicial = false;

  if (simplicial) {
    for (const auto& facet : poly.facets) {
      levels[d - 1].insert(facet);
      for (Index k = 0; k + 1 < d; ++k)
        detail::insert_subsets(facet, static_cast<int>(k) + 1, levels[k]);
    }
  } else {
    std::map<Index, Index> coord_of;
    for (Index i = 0; i < static_cast<Index>(poly.vertices.size()); ++i)
      coord_of[poly.vertices[i]] = i;
    for (const auto& [root, members] : groups) {
      std::set<Index> vs;
      for (Index fi : members)
        for (Index v : poly.facets[fi]) vs.insert(v);
      std::vector<Index> face_verts(vs.begin(), vs.end());
      levels[d - 1].insert(face_verts);
      // Recurse on the geometric face in hyperplane coordinates.
      const Vec<S> n = poly.normals.col(members.front());
      const Mat<S> basis = orthonormal_complement<S>(n);
      const Vec<S> origin = poly.vertex_coords.col(coord_of[face_verts[0]]);
      PointCloudT<S> local(d - 1, static_cast<Index>(face_verts.size()));
      for (Index i = 0; i < static_cast<Index>(face_verts.size()); ++i)
        local.col(i) = basis.transpose() *
                       (poly.vertex_coords.col(coord_of[face_verts[i]]) - origin);
      const PolytopeT<S> sub = convex_hull<S>(local);
      const FaceLattice sub_lat = face_lattice<S>(sub);
      for (Index k = 0; k < d - 1; ++k) {
        for (const auto& sub_face : sub_lat.faces[k]) {
          std::vector<Index> mapped;
          mapped.reserve(sub_face.size());
          for (Index lv : sub_face) mapped.push_back(face_verts[lv]);
          std::sort(mapped.begin(), mapped.end());
          levels[k].insert(std::move(mapped));
        }
      }
    }
  }

  for (Index k = 0; k < d; ++k)
    lat.faces[k].assign(levels[k].begin(), levels[k].end());
  return lat;
}

// Volume by the fan over the hull-vertex centroid (exact for simplicial
// facets).
template <class S>
S polytope_volume(const PolytopeT<S>& poly, const PointCloudT<S>& cloud) {
  const Index d = poly.dim;
  Vec<S> c = Vec<S>::Zero(d);
  for (Index v : poly.vertices) c += cloud.col(v);
  c /= static_cast<S>(poly.vertices.size());
  S total = S(0);
  Mat<S> edges(d, d);
  for (const auto& facet : poly.facets) {
    for (Index i = 0; i < d; ++i) edges.col(i) = cloud.col(facet[i]) - c;
    S vol = std::abs(edges.determinant());
    for (Index i = 2; i <= d; ++i) vol /= static_cast<S>(i);
    total += vol;
  }
  return total;
}

// Fraction of the full solid angle subtended at the origin by the cone over a
// facet (columns of `facet`, d x d). Closed form for d = 2, 3; Monte Carlo
// with reported standard error above.
template <class S>
SolidAngle facet_cone_solid_angle(const Mat<S>& facet, long mc_budget = 100000,
                                  std::uint64_t seed = 0x501DA) {
  const Index d = facet.rows();
  if (facet.cols() != d)
    throw DegenerateInput("facet_cone_solid_angle: facet must be d x d");
  {
    Mat<S> edges(d, d - 1);
    for (Index i = 0; i + 1 < d; ++i) edges.col(i) = facet.col(i + 1) - facet.col(0);
    Eigen::HouseholderQR<Mat<S>> qr(edges);
    const Vec<S> n = Mat<S>(qr.householderQ()).col(d - 1);
    const S off = n.dot(facet.col(0));
    S scale = S(1);
    for (Index i = 0; i < d; ++i) scale = std::max(scale, facet.col(i).template lpNorm<1>());
    if (std::abs(off) <= S(kOrientationTol) * scale)
      throw OriginOnFacetHull("facet hyperplane passes through the origin");
  }
  SolidAngle result;
  if (d == 2) {
    const S dot = facet.col(0).dot(facet.col(1));
    const S crs = facet(0, 0) * facet(1, 1) - facet(1, 0) * facet(0, 1);
    result.fraction = std::atan2(std::abs(static_cast<double>(crs)),
                                 static_cast<double>(dot)) / (2.0 * M_PI);
    return result;
  }
  if (d == 3) {
    const Vec<S> a = facet.col(0), b = facet.col(1), c = facet.col(2);
    const S la = a.norm(), lb = b.norm(), lc = c.norm();
    Mat<S> m(3, 3);
    m << a, b, c;
    const S num = std::abs(m.determinant());
    const S den = la * lb * lc + a.dot(b) * lc + a.dot(c) * lb + b.dot(c) * la;
    const double omega = 2.0 * std::atan2(static_cast<double>(num),
                                          static_cast<double>(den));
    result.fraction = omega / (4.0 * M_PI);
    return result;
  }
  Eigen::FullPivLU<Mat<S>> lu(facet);
  if (!lu.isInvertible())
    throw DegenerateInput("facet_cone_solid_angle: degenerate facet");
  RngStream rng(seed, mix_stream_id({0xA26Eu, static_cast<std::uint64_t>(d)}));
  long hits = 0;
  Vec<S> u(d);
  for (long it = 0; it < mc_budget; ++it) {
    for (Index i = 0; i < d; ++i) u(i) = static_cast<S>(rng.next_normal());
    const Vec<S> mu = lu.solve(u);
    bool nonneg = true;
    for (Index i = 0; i < d; ++i)
      if (mu(i) < S(0)) {
        nonneg = false;
        break;
      }
    if (nonneg) ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(mc_budget);
  result.fraction = p;
  result.se = std::sqrt(p * (1.0 - p) / static_cast<double>(mc_budget));
  return result;
}

// Facets of the hull visible from below (outward normal with negative last
// coordinate). For d = 2 the monotone chain handles segments directly, so a
// 2-point cloud yields the segment itself.
template <class S>
PolytopeT<S> lower_hull(const PointCloudT<S>& cloud) {
  const Index d = cloud.rows();
  const Index n = cloud.cols();
  PolytopeT<S> out;
  out.dim = d;
  if (d == 2) {
    if (n < 2) throw DegenerateInput("lower_hull: need >= 2 points");
    std::vector<Index> order(n);
    for (Index i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
      return cloud(0, a) != cloud(0, b) ? cloud(0, a) < cloud(0, b)
                                        : cloud(1, a) < cloud(1, b);
    });
    if (cloud(0, order.front()) == cloud(0, order.back()))
      throw DegenerateInput("lower_hull: all abscissae equal");
    const std::vector<Index> chain = detail::chain_half<S>(cloud, order);
    out.vertices = chain;
    std::sort(out.vertices.begin(), out.vertices.end());
    out.vertex_coords.resize(2, static_cast<Index>(out.vertices.size()));
    for (Index i = 0; i < static_cast<Index>(out.vertices.size()); ++i)
      out.vertex_coords.col(i) = cloud.col(out.vertices[i]);
    const Index m = static_cast<Index>(chain.size()) - 1;
    out.normals.resize(2, m);
    out.offsets.resize(m);
    out.interior = Vec<S>::Zero(2);
    for (Index i = 0; i < m; ++i) {
      const Index a = chain[i], b = chain[i + 1];
      Vec<S> t = cloud.col(b) - cloud.col(a);
      Vec<S> nrm(2);
      nrm << t(1), -t(0);
      nrm.normalize();
      if (nrm(1) > S(0)) nrm = -nrm;
      out.facets.push_back({std::min(a, b), std::max(a, b)});
      out.normals.col(i) = nrm;
      out.offsets(i) = nrm.dot(cloud.col(a));
    }
    return out;
  }
  const PolytopeT<S> full = convex_hull<S>(cloud);
  std::vector<Index> keep;
  for (Index f = 0; f < static_cast<Index>(full.facets.size()); ++f)
    if (full.normals(d - 1, f) < -S(kOrientationTol)) keep.push_back(f);
  out.interior = full.interior;
  out.normals.resize(d, static_cast<Index>(keep.size()));
  out.offsets.resize(static_cast<Index>(keep.size()));
  std::set<Index> vset;
  for (Index i = 0; i < static_cast<Index>(keep.size()); ++i) {
    out.facets.push_back(full.facets[keep[i]]);
    out.normals.col(i) = full.normals.col(keep[i]);
    out.offsets(i) = full.offsets(keep[i]);
    for (Index v : full.facets[keep[i]]) vset.insert(v);
  }
  out.vertices.assign(vset.begin(), vset.end());
  out.vertex_coords.resize(d, static_cast<Index>(out.vertices.size()));
  for (Index i = 0; i < static_cast<Index>(out.vertices.size()); ++i)
    out.vertex_coords.col(i) = cloud.col(out.vertices[i]);
  return out;
}

}  // namespace festoon
