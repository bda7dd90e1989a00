#pragma once

#include <span>
#include <vector>

namespace evenif {

double mean(std::span<const double> v);
// Sample standard deviation (n - 1).
double stdev(std::span<const double> v);
// stdev / sqrt(n); 0 for fewer than two values.
double standard_error(std::span<const double> v);

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
};

// Paired t-test on a - b. Throws ValidationError on size mismatch or n < 2.
TTest paired_t_test(std::span<const double> a, std::span<const double> b);

// (mean(a) - mean(b)) / pooled standard deviation.
double cohens_d(std::span<const double> a, std::span<const double> b);

}  // namespace evenif
