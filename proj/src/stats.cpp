#include "evenif/stats.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "evenif/error.hpp"

namespace evenif {

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stdev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double standard_error(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  return stdev(v) / std::sqrt(static_cast<double>(v.size()));
}

TTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("paired samples differ in size");
  if (a.size() < 2) throw ValidationError("paired t-test needs at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  TTest r;
  r.df = static_cast<double>(d.size() - 1);
  const double se = standard_error(d);
  const double md = mean(d);
  if (se == 0.0) {
    r.t = md == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), md);
    r.p = md == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t = md / se;
  boost::math::students_t dist(r.df);
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  if (na + nb < 3) return 0.0;
  const double sa = stdev(a), sb = stdev(b);
  const double pooled = std::sqrt(((na - 1) * sa * sa + (nb - 1) * sb * sb) / (na + nb - 2));
  if (pooled == 0.0) return 0.0;
  return (mean(a) - mean(b)) / pooled;
}

}  // namespace evenif
