// Independent reference computations for the test suites. Nothing here calls
// into the library's estimators: brute force, quadrature, textbook formulas.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Integral of the logistic survival over [0, inf) by adaptive quadrature.
inline double logistic_mean_quadrature(double a, double b) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate([&](double p) { return logistic(a + b * p); });
}

/// Mean of Normal(mu, sd) truncated to [lo, hi], by quadrature of x * pdf.
inline double truncated_normal_mean(double mu, double sd, double lo, double hi) {
  boost::math::normal_distribution<double> n(mu, sd);
  using boost::math::quadrature::gauss_kronrod;
  const double num = gauss_kronrod<double, 61>::integrate(
      [&](double x) { return x * boost::math::pdf(n, x); }, lo, hi, 15, 1e-12);
  const double den = gauss_kronrod<double, 61>::integrate(
      [&](double x) { return boost::math::pdf(n, x); }, lo, hi, 15, 1e-12);
  return num / den;
}

struct GridOptimum {
  double price, quantity, profit;
};

/// Profit (p - c) q(p) ms on a uniform grid from c to p_max.
inline GridOptimum brute_force_optimum(double a, double b, double c, double ms, double p_max,
                                       double step = 0.001) {
  GridOptimum best{c, logistic(a + b * c), 0.0};
  const auto n = static_cast<long>(std::floor((p_max - c) / step));
  for (long k = 0; k <= n; ++k) {
    const double p = c + static_cast<double>(k) * step;
    const double q = logistic(a + b * p);
    const double pi = (p - c) * q * ms;
    if (pi > best.profit) best = {p, q, pi};
  }
  return best;
}

/// Bernoulli log-likelihood summed observation by observation.
inline double loglik(std::span<const double> price, std::span<const int> y, double a, double b) {
  double ll = 0.0;
  for (std::size_t i = 0; i < price.size(); ++i) {
    const double p = logistic(a + b * price[i]);
    ll += y[i] ? std::log(p) : std::log1p(-p);
  }
  return ll;
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double var(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

/// Welch t straight from its definition.
inline double welch_t(std::span<const double> a, std::span<const double> b) {
  return (mean(a) - mean(b)) /
         std::sqrt(var(a) / static_cast<double>(a.size()) + var(b) / static_cast<double>(b.size()));
}

/// sup |F_a - F_b| evaluated at every pooled point, O(n^2).
inline double ks_distance(std::span<const double> a, std::span<const double> b) {
  auto cdf = [](std::span<const double> s, double x) {
    return static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v <= x; })) /
           static_cast<double>(s.size());
  };
  double d = 0.0;
  for (auto s : {a, b}) {
    for (double x : s) d = std::max(d, std::abs(cdf(a, x) - cdf(b, x)));
  }
  return d;
}

/// Population covariance (1/n) sum (x - xbar)(y - ybar).
inline double covariance(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
  return s / static_cast<double>(x.size());
}

}  // namespace oracle
