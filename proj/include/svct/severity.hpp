#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "svct/common.hpp"

namespace svct {

/// views_at_level() result for level 0, where degradation is the identity.
inline constexpr int kIdentityLevel = 0;
inline constexpr int kIdentityViews = 0;

/// Discrete severity schedule: level t in 1..t_max maps to a view count, with
/// counts strictly decreasing (level t_max is the sparsest). Level 0 is
/// reserved for the identity degradation.
struct SeverityMap {
  std::vector<int> views_per_level;  // dense -> sparse

  static SeverityMap defaults() {
    return SeverityMap{{288, 234, 180, 126, 72, 54, 36, 18}};
  }

  int t_max() const { return static_cast<int>(views_per_level.size()); }

  void validate() const {
    if (views_per_level.empty())
      throw ConfigError("severity map: empty view-count list");
    int prev = 0;
    for (std::size_t i = 0; i < views_per_level.size(); ++i) {
      const int v = views_per_level[i];
      if (v <= 0)
        throw ConfigError("severity map: view counts must be positive");
      if (i > 0 && v >= prev)
        throw ConfigError("severity map: view counts must be strictly decreasing");
      prev = v;
    }
  }

  /// Number of views at severity level t; level 0 returns the identity
  /// sentinel (kIdentityViews).
  int views_at_level(int t) const {
    if (t == kIdentityLevel)
      return kIdentityViews;
    if (t < 0 || t > t_max())
      throw ConfigError("severity map: invalid level " + std::to_string(t));
    return views_per_level[static_cast<std::size_t>(t - 1)];
  }

  /// Severity level whose view count equals n_views, or 0 if absent.
  int level_for_views(int n_views) const {
    for (int t = 1; t <= t_max(); ++t)
      if (views_per_level[static_cast<std::size_t>(t - 1)] == n_views)
        return t;
    return 0;
  }
};

/// Parses a severity map from whitespace-separated view counts.
inline SeverityMap parse_severity_map(std::istream& in) {
  SeverityMap map;
  int v = 0;
  while (in >> v)
    map.views_per_level.push_back(v);
  if (!in.eof())
    throw DataError("severity map: expected whitespace-separated integers");
  map.validate();
  return map;
}

inline SeverityMap load_severity_map(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("severity map: cannot open " + path);
  return parse_severity_map(in);
}

}  // namespace svct
