#pragma once

#include <algorithm>

namespace twg {

// Closed time interval in seconds.
struct Interval {
  double start_s = 0.0;
  double end_s = 0.0;
  bool operator==(const Interval&) const = default;
};

inline double interval_length(const Interval& v) { return v.end_s - v.start_s; }

// Intersection-over-union measured in seconds. Touching intervals have
// zero-measure intersection and score 0. When both intervals are degenerate
// the union is empty; defined as 0.
inline double temporal_iou(const Interval& a, const Interval& b) {
  const double inter =
      std::max(0.0, std::min(a.end_s, b.end_s) - std::max(a.start_s, b.start_s));
  const double uni = interval_length(a) + interval_length(b) - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

}  // namespace twg
