#include "eegintent/stage_stats.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace eegintent {

namespace {

// c[0] + c[1] x + c[2] x^2 + ...
template <std::size_t N>
double poly(const double (&c)[N], double x) {
  double r = 0.0;
  for (std::size_t i = N; i-- > 0;) r = r * x + c[i];
  return r;
}

constexpr double kC1[] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
constexpr double kC2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
constexpr double kC3[] = {0.5440, -0.39978, 0.025054, -6.714e-4};
constexpr double kC4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
constexpr double kC5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
constexpr double kC6[] = {-0.4803, -0.082676, 0.0030302};
constexpr double kG[] = {-2.273, 0.459};

}  // namespace

ShapiroResult shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 3 || n > 5000) throw DataError("shapiro_wilk needs 3 <= n <= 5000");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  if (!(ss > 0.0) || x.front() == x.back()) throw DataError("shapiro_wilk: sample has zero variance");

  const boost::math::normal_distribution<double> std_normal;
  const auto dn = static_cast<double>(n);

  // Coefficients for the lower half; the upper half mirrors them.
  std::vector<double> a(n, 0.0);
  if (n == 3) {
    a[0] = -std::sqrt(0.5);
    a[2] = std::sqrt(0.5);
  } else {
    std::vector<double> m(n);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = boost::math::quantile(std_normal, (static_cast<double>(i + 1) - 0.375) / (dn + 0.25));
      summ2 += m[i] * m[i];
    }
    const double ssumm2 = std::sqrt(summ2);
    const double u = 1.0 / std::sqrt(dn);
    const double an = m[n - 1] / ssumm2 + poly(kC1, u);
    double phi;
    std::size_t first_plain;
    if (n > 5) {
      const double an1 = m[n - 2] / ssumm2 + poly(kC2, u);
      phi = (summ2 - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
            (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
      a[n - 2] = an1;
      a[1] = -an1;
      first_plain = 2;
    } else {
      phi = (summ2 - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an * an);
      first_plain = 1;
    }
    a[n - 1] = an;
    a[0] = -an;
    const double root_phi = std::sqrt(phi);
    for (std::size_t i = first_plain; i < n - first_plain; ++i) a[i] = m[i] / root_phi;
  }

  double num = 0.0;
  for (std::size_t i = 0; i < n; ++i) num += a[i] * x[i];
  const double w = std::min(1.0, num * num / ss);

  ShapiroResult r;
  r.w = w;
  if (n == 3) {
    constexpr double six_over_pi = 1.90985931710274;
    constexpr double asin_sqrt_three_quarters = 1.04719755119660;
    r.p_value = std::clamp(six_over_pi * (std::asin(std::sqrt(w)) - asin_sqrt_three_quarters), 0.0, 1.0);
    return r;
  }
  const double w1 = 1.0 - w;
  if (!(w1 > 0.0)) {
    r.p_value = 1.0;
    return r;
  }
  double y = std::log(w1);
  double mu, sigma;
  if (n <= 11) {
    const double gamma = poly(kG, dn);
    if (y >= gamma) {
      r.p_value = 1e-99;
      return r;
    }
    y = -std::log(gamma - y);
    mu = poly(kC3, dn);
    sigma = std::exp(poly(kC4, dn));
  } else {
    const double ln = std::log(dn);
    mu = poly(kC5, ln);
    sigma = std::exp(poly(kC6, ln));
  }
  r.p_value = boost::math::cdf(boost::math::complement(std_normal, (y - mu) / sigma));
  return r;
}

}  // namespace eegintent
