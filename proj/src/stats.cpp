#include "distcma/stats.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace distcma {

namespace {

// Continued fraction for the incomplete beta function, modified Lentz
// method. Converges for x < (a+1)/(a+b+2); the caller applies the symmetry
// relation otherwise.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int max_iterations = 500;
  constexpr double eps = 1e-16;
  constexpr double tiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("incomplete beta requires a > 0 and b > 0");
  }
  if (std::isnan(x) || x < 0.0 || x > 1.0) {
    throw std::invalid_argument("incomplete beta requires x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_sf(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("degrees of freedom must be positive");
  if (std::isnan(t)) throw std::invalid_argument("t statistic is NaN");
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  if (t == 0.0) return 0.5;
  const double x = df / (df + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x);
  return t > 0.0 ? tail : 1.0 - tail;
}

double student_t_cdf(double t, double df) { return 1.0 - student_t_sf(t, df); }

double sample_mean(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean of an empty sample");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_sd(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double mean = sample_mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

namespace {

TTestResult t_test_impl(const std::vector<double>& values, double alpha, bool lenient) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  if (values.empty()) throw std::invalid_argument("t-test on an empty sample");

  TTestResult r;
  r.alpha = alpha;
  r.n = values.size();
  r.mean = sample_mean(values);
  r.sd = sample_sd(values);

  if (values.size() < 2 || r.sd == 0.0) {
    if (!lenient) {
      throw std::invalid_argument(values.size() < 2
                                      ? "t-test requires at least 2 values"
                                      : "t-test requires nonzero standard deviation");
    }
    r.degenerate = true;
    if (r.mean == 0.0) {
      r.t_statistic = 0.0;
      r.p_value_one_sided = 0.5;
    } else {
      r.t_statistic = r.mean > 0 ? std::numeric_limits<double>::infinity()
                                 : -std::numeric_limits<double>::infinity();
      r.p_value_one_sided = r.mean > 0 ? 0.0 : 1.0;
    }
    r.reject_h0 = r.p_value_one_sided < alpha;
    return r;
  }

  r.t_statistic = r.mean / (r.sd / std::sqrt(static_cast<double>(r.n)));
  r.p_value_one_sided = student_t_sf(r.t_statistic, static_cast<double>(r.n - 1));
  r.reject_h0 = r.p_value_one_sided < alpha;
  return r;
}

}  // namespace

TTestResult one_sample_t(const std::vector<double>& values, double alpha) {
  return t_test_impl(values, alpha, false);
}

TTestResult one_sample_t_lenient(const std::vector<double>& values, double alpha) {
  return t_test_impl(values, alpha, true);
}

double pearson_r(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("pearson_r: length mismatch");
  }
  if (xs.size() < 2) throw std::invalid_argument("pearson_r: need at least 2 points");
  const double mx = sample_mean(xs);
  const double my = sample_mean(ys);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw std::invalid_argument("pearson_r: constant input");
  }
  return sxy / std::sqrt(sxx * syy);
}

std::string format_p_value(double p) {
  if (std::isnan(p)) return "nan";
  if (p >= 1e-4) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", p);
    return buf;
  }
  if (p <= 0.0) return "<1e-300";
  int e = static_cast<int>(std::floor(std::log10(p)));
  // Small slack so exact powers of ten stay at their own digit.
  int d = static_cast<int>(std::ceil(p / std::pow(10.0, e) - 1e-9));
  if (d >= 10) {
    d = 1;
    e += 1;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "<%de%03d", d, e);
  return buf;
}

}  // namespace distcma
