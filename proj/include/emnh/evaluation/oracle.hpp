#pragma once

#include "emnh/evaluation/pareto.hpp"
#include "emnh/problems/instance.hpp"

namespace emnh::eval {

/// Size limits of exact enumeration.
inline constexpr int kOracleMaxTsp = 9;
inline constexpr int kOracleMaxKnapsack = 20;
inline constexpr int kOracleMaxVrp = 7;

/// Largest n brute_force_pareto accepts for this kind.
int oracle_limit(const problems::ProblemKind& kind);

/// Exact Pareto front by enumeration: tours with a fixed first city, item
/// subsets, or customer partitions with optimally ordered routes.
/// Throws UsageError above the size limit.
ParetoSet brute_force_pareto(const problems::Instance& instance);

}  // namespace emnh::eval
