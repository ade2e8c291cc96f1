#pragma once

#include "emnh/problems/instance.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace emnh::eval {

/// Reference point r* and ideal point z* shared by every method on a problem.
struct RefPoints {
  Vector reference;
  Vector ideal;
  /// Listed size the entry was taken from.
  int table_size = 0;
  bool exact_size = false;
};

/// The bundled table (compiled into the library).
const nlohmann::json& reference_table();

/// Entry for `kind` at the nearest listed size (the smaller one on a tie).
/// Throws UsageError when the table has no entry for the problem.
RefPoints reference_points(const problems::ProblemKind& kind, int n);

/// Checks the table invariant for a front: r* worse and z* better than every point.
bool box_contains(const RefPoints& ref, const Vector& f, Sense sense);

}  // namespace emnh::eval
