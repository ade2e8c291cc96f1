#pragma once

#include "emnh/decomposition/weights.hpp"

#include <json.hpp>

#include <vector>

namespace emnh::finetune {

/// One node of the weight-space hierarchy.
struct Subspace {
  decomp::WeightVector center;
  /// Index into the previous level; -1 on level 1 (tuned from the meta-model).
  int parent = -1;
  /// Vertices of the sub-simplex, one per column (M x M). Empty on the final level.
  Matrix vertices;
};

struct Hierarchy {
  int M = 2;
  /// Sections per split: 2 for M=2, 4 for M=3.
  int a = 2;
  /// levels[l - 1] is level l; the last level holds the given weights.
  std::vector<std::vector<Subspace>> levels;

  int L() const { return static_cast<int>(levels.size()); }
  const std::vector<Subspace>& final_level() const { return levels.back(); }
};

int sections(int M);

/// Smallest L >= 1 with a^L >= N.
int default_levels(int M, int N);

/// Level l < L has a^l sub-simplices, given by the Das-Dennis lattice with
/// H = 2^l (intervals of lambda_1 for M=2, congruent triangles for M=3).
/// Each final weight hangs off the lowest-index level-(L-1) subspace that
/// contains it. `levels` = 0 picks default_levels. Throws UsageError for
/// M outside {2, 3} and DataError for weights off the simplex.
Hierarchy build_hierarchy(int M, const decomp::WeightSet& final_weights, int levels = 0);

/// Whether `lambda` lies in the sub-simplex (within `tol` in barycentric terms).
bool contains(const Subspace& s, const decomp::WeightVector& lambda, double tol = 1e-12);

nlohmann::json lineage_json(const Hierarchy& h);

}  // namespace emnh::finetune
