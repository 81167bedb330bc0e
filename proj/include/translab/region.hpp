#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "translab/core.hpp"

namespace translab {

/// The (s, sigma) region of the trilinear estimates and of the well-posedness
/// statement: sigma > -1/2, sigma <= s <= sigma + 1, 2s > sigma + 1/2.
/// Returns the violated inequalities, empty when (s, sigma) is admissible.
/// Boundaries are compared with a 1e-12 slack in the direction of the
/// non-strict inequalities, so lattice points like s = sigma + 1 stay inside.
inline std::vector<std::string> region_violations(double s, double sigma) {
  constexpr double slack = 1e-12;
  std::vector<std::string> out;
  if (!(sigma > -0.5 + slack)) out.emplace_back("sigma > -1/2");
  if (!(sigma <= s + slack)) out.emplace_back("sigma <= s");
  if (!(s <= sigma + 1 + slack)) out.emplace_back("s <= sigma + 1");
  if (!(2 * s > sigma + 0.5 + slack)) out.emplace_back("2s > sigma + 1/2");
  return out;
}

/// Throws InputError naming every violated inequality.
inline void require_region(double s, double sigma, const std::string& who) {
  const auto v = region_violations(s, sigma);
  if (v.empty()) return;
  std::ostringstream os;
  os << who << ": (s, sigma) = (" << s << ", " << sigma << ") violates ";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  throw InputError(os.str());
}

}  // namespace translab
