#pragma once

#include "emnh/core/types.hpp"

#include <cstdint>
#include <vector>

namespace emnh::eval {

/// One objective vector with the solution that produced it.
struct ParetoPoint {
  Vector f;
  int weight_index = -1;
  int augmentation = -1;
  int start = -1;
  std::vector<int> sequence;
};

struct ParetoSet {
  std::vector<ParetoPoint> points;
  Sense sense = Sense::minimize;

  std::vector<Vector> objectives() const;
  std::size_t size() const { return points.size(); }
};

/// u dominates v: no worse in every objective and better in at least one.
bool dominates(const Vector& u, const Vector& v, Sense sense);

/// Exactly the nondominated points; duplicates collapse to the first one seen.
/// Output is sorted lexicographically in the minimization orientation.
ParetoSet pareto_filter(std::vector<ParetoPoint> points, Sense sense);
std::vector<Vector> pareto_filter(const std::vector<Vector>& points, Sense sense);

/// Lebesgue measure of the region dominated by `front` and bounded by `reference`.
/// Throws DataError naming the first point beyond the reference point.
double hypervolume(const std::vector<Vector>& front, const Vector& reference, Sense sense = Sense::minimize);

/// Hypervolume divided by prod |reference - ideal|. Throws UsageError for a degenerate box.
double hv_ratio(const std::vector<Vector>& front, const Vector& reference, const Vector& ideal,
                Sense sense = Sense::minimize);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Fraction of uniform samples in the reference-ideal box dominated by the
/// front, times the box volume.
McEstimate mc_hypervolume(const std::vector<Vector>& front, const Vector& reference, const Vector& ideal,
                          std::int64_t samples, std::uint64_t seed, Sense sense = Sense::minimize);

/// (hv_reference - hv) / hv_reference. Throws UsageError for a zero reference.
double gap(double hv, double hv_reference);

}  // namespace emnh::eval
