#pragma once

#include "emnh/problems/instance.hpp"

#include <vector>

namespace emnh::problems {

/// Partial construction. Node ids live in the action space of the instance
/// (mocvrp: 0 is the depot, customer i is i + 1).
struct DecodeState {
  std::vector<int> sequence;
  std::vector<char> visited;
  /// Remaining vehicle or knapsack capacity.
  double remaining = 0.0;
  int current = -1;
  int unvisited = 0;
  bool done = false;

  int t() const { return static_cast<int>(sequence.size()); }
  int first() const { return sequence.empty() ? -1 : sequence.front(); }
};

struct Solution {
  std::vector<int> sequence;
  Vector objectives;
};

/// Start index k fixes the first choice: node k (motsp), item k (mokp) or
/// customer k, i.e. action k + 1, right after the depot (mocvrp).
/// Throws DataError for an out-of-range start or a mokp item heavier than W.
DecodeState initial_state(const Instance& instance, int start);

/// Whether `start` can begin a rollout (false only for overweight mokp items).
bool feasible_start(const Instance& instance, int start);

Mask feasible_mask(const Instance& instance, const DecodeState& state);

/// In-place transition. Throws DataError for a masked action.
void advance(const Instance& instance, DecodeState& state, int action);

DecodeState apply_action(const Instance& instance, DecodeState state, int action);

/// Completed solution; mocvrp sequences get their closing depot visit.
Solution finish(const Instance& instance, const DecodeState& state);

/// Objective vector in the problem's own sense. Throws DataError for an
/// infeasible or incomplete sequence.
Vector objectives(const Instance& instance, const std::vector<int>& sequence);

/// Euclidean cost of objective `m` between two routing nodes (action ids).
double edge_cost(const Instance& instance, int m, int a, int b);

/// Number of augmented copies: 8^M, 2 * 8^(M-1) or 8. Throws UsageError for mokp.
int augmentation_count(const ProblemKind& kind);

/// Applies one of the eight unit-square symmetries to a coordinate pair.
void transform_pair(int which, double& x, double& y);

/// All augmented copies; index 0 is the identity.
std::vector<Instance> augment(const Instance& instance);

}  // namespace emnh::problems
