#pragma once

#include <string>
#include <vector>

namespace distcma {

// Regularized incomplete beta function I_x(a, b), evaluated with the
// continued-fraction expansion (modified Lentz). Absolute accuracy is well
// inside 1e-10 over the parameter ranges the t-distribution needs.
double regularized_incomplete_beta(double a, double b, double x);

// One-sided upper-tail probability P(T >= t) for Student's t with df degrees
// of freedom. Exactly 0.5 at t == 0.
double student_t_sf(double t, double df);
double student_t_cdf(double t, double df);

struct TTestResult {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
  double t_statistic = 0.0;
  double p_value_one_sided = 1.0;
  double alpha = 0.05;
  bool reject_h0 = false;
  // Set when the sample had zero spread (or a single value) and the lenient
  // entry point reported the limit instead of erroring.
  bool degenerate = false;
};

// One-sample t-test of H1: mean > 0.
// Throws std::invalid_argument when n < 2, sd == 0, or alpha outside (0, 1).
TTestResult one_sample_t(const std::vector<double>& values, double alpha);

// Same test, but a zero-spread sample is reported as the distributional
// limit instead of erroring: all-zero values give t = 0, p = 0.5; a constant
// nonzero sample gives t = +/-infinity with p = 0 or 1.
TTestResult one_sample_t_lenient(const std::vector<double>& values, double alpha);

// Sample Pearson correlation. Throws on length mismatch, n < 2, or a
// constant input.
double pearson_r(const std::vector<double>& xs, const std::vector<double>& ys);

double sample_mean(const std::vector<double>& values);
// Sample standard deviation with the n-1 denominator; 0 when n < 2.
double sample_sd(const std::vector<double>& values);

// Human-readable p-value: fixed three decimals down to 1e-4, below that an
// upper bound with one significant digit, e.g. "<8e-06".
std::string format_p_value(double p);

}  // namespace distcma
