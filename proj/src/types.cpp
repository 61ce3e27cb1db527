#include "selfstab/types.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace selfstab {

std::string format_point(const Vec& x) {
  std::ostringstream out;
  out.precision(10);
  out << '(';
  for (Eigen::Index i = 0; i < x.size(); ++i) out << (i ? ", " : "") << x(i);
  out << ')';
  return out.str();
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buffer[32];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, x);
  return std::string(buffer, end);
}

}  // namespace selfstab
