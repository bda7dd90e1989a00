#include "evenif/linalg.hpp"

#include <algorithm>

#include "evenif/error.hpp"

namespace evenif {

Norm norm_from_string(const std::string& s) {
  if (s == "l1" || s == "L1") return Norm::l1;
  if (s == "l2" || s == "L2") return Norm::l2;
  if (s == "linf" || s == "Linf") return Norm::linf;
  throw ValidationError("unknown norm '" + s + "'", "norm");
}

std::string to_string(Norm n) {
  switch (n) {
    case Norm::l1:
      return "l1";
    case Norm::l2:
      return "l2";
    case Norm::linf:
      return "linf";
  }
  return "l2";
}

double distance(std::span<const double> a, std::span<const double> b,
                Norm n) {
  double s = 0.0;
  switch (n) {
    case Norm::l1:
      for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
      return s;
    case Norm::l2:
      return std::sqrt(squared_distance(a, b));
    case Norm::linf:
      for (std::size_t i = 0; i < a.size(); ++i)
        s = std::max(s, std::abs(a[i] - b[i]));
      return s;
  }
  return s;
}

double norm(std::span<const double> a, Norm n) {
  double s = 0.0;
  switch (n) {
    case Norm::l1:
      for (double v : a) s += std::abs(v);
      return s;
    case Norm::l2:
      return std::sqrt(dot(a, a));
    case Norm::linf:
      for (double v : a) s = std::max(s, std::abs(v));
      return s;
  }
  return s;
}

}  // namespace evenif
