#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace festoon {

inline double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_of: empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double sample_variance(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  if (n < 2) throw std::invalid_argument("sample_variance: need >= 2 values");
  const double m = mean_of(xs);
  double s2 = 0.0;
  for (double x : xs) s2 += (x - m) * (x - m);
  return s2 / static_cast<double>(n - 1);
}

// Standard error of the sample mean.
inline double mean_se(const std::vector<double>& xs) {
  return std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
}

// Delete-one jackknife standard error of the sample variance, computed from
// running sums so the whole pass is O(n).
inline double variance_jackknife_se(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  if (n < 3) throw std::invalid_argument("variance_jackknife_se: need >= 3");
  double sum = 0.0, sum2 = 0.0;
  for (double x : xs) {
    sum += x;
    sum2 += x * x;
  }
  const double nn = static_cast<double>(n);
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = sum - xs[i];
    const double s2 = sum2 - xs[i] * xs[i];
    loo[i] = (s2 - s * s / (nn - 1.0)) / (nn - 2.0);
  }
  const double lm = mean_of(loo);
  double acc = 0.0;
  for (double v : loo) acc += (v - lm) * (v - lm);
  return std::sqrt((nn - 1.0) / nn * acc);
}

// Generic delete-one jackknife SE for a statistic recomputed on each
// leave-one-out sample of per-replicate contribution vectors.
template <class Stat>
double jackknife_se(std::size_t n, Stat&& leave_one_out_value) {
  if (n < 3) throw std::invalid_argument("jackknife_se: need >= 3 replicates");
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) loo[i] = leave_one_out_value(i);
  const double lm = mean_of(loo);
  double acc = 0.0;
  for (double v : loo) acc += (v - lm) * (v - lm);
  const double nn = static_cast<double>(n);
  return std::sqrt((nn - 1.0) / nn * acc);
}

inline double skewness(const std::vector<double>& xs) {
  const double m = mean_of(xs);
  double m2 = 0.0, m3 = 0.0;
  for (double x : xs) {
    const double d = x - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  const double n = static_cast<double>(xs.size());
  m2 /= n;
  m3 /= n;
  return m3 / std::pow(m2, 1.5);
}

inline double excess_kurtosis(const std::vector<double>& xs) {
  const double m = mean_of(xs);
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const double n = static_cast<double>(xs.size());
  m2 /= n;
  m4 /= n;
  return m4 / (m2 * m2) - 3.0;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double correlation = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear_fit: mismatched or short inputs");
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.correlation = syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
  return fit;
}

// Regularized incomplete gamma P(a,x) by series, Q(a,x) by continued fraction.
inline double regularized_gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("regularized_gamma_p");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

inline double chi2_sf(double stat, double dof) {
  return 1.0 - regularized_gamma_p(dof / 2.0, stat / 2.0);
}

inline double poisson_pmf(std::int64_t k, double mean) {
  if (k < 0) return 0.0;
  return std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0));
}

// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
inline double ks_two_sample_stat(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    const double fa = static_cast<double>(i) / a.size();
    const double fb = static_cast<double>(j) / b.size();
    d = std::max(d, std::fabs(fa - fb));
  }
  return d;
}

inline double ks_sf(double d, double n_eff) {
  const double lam = (std::sqrt(n_eff) + 0.12 + 0.11 / std::sqrt(n_eff)) * d;
  double sum = 0.0, sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lam * lam);
    sum += sign * term;
    if (term < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

inline double ks_two_sample_pvalue(const std::vector<double>& a,
                                   const std::vector<double>& b) {
  const double d = ks_two_sample_stat(a, b);
  const double n_eff = static_cast<double>(a.size()) * b.size() /
                       static_cast<double>(a.size() + b.size());
  return ks_sf(d, n_eff);
}

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule on [lo, hi]; nodes by Newton iteration on P_n.
inline Quadrature gauss_legendre(int n, double lo, double hi) {
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    const double half = 0.5 * (hi - lo);
    q.nodes[i] = lo + half * (1.0 - x);
    q.nodes[n - 1 - i] = lo + half * (1.0 + x);
    q.weights[i] = q.weights[n - 1 - i] = 2.0 * half / ((1.0 - x * x) * pp * pp);
  }
  return q;
}

}  // namespace festoon
