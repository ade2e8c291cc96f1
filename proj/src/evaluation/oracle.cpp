#include "emnh/evaluation/oracle.hpp"

#include "emnh/problems/env.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace emnh::eval {

using problems::Family;
using problems::Instance;

int oracle_limit(const problems::ProblemKind& kind) {
  switch (kind.family) {
    case Family::motsp1:
    case Family::motsp2: return kOracleMaxTsp;
    case Family::mokp: return kOracleMaxKnapsack;
    case Family::mocvrp: return kOracleMaxVrp;
  }
  return 0;
}

namespace {

// same tolerance as the solution validator
constexpr double kSlack = 1e-9;

std::vector<ParetoPoint> tours(const Instance& inst) {
  std::vector<ParetoPoint> out;
  std::vector<int> perm(static_cast<std::size_t>(inst.n));
  std::iota(perm.begin(), perm.end(), 0);
  if (inst.n <= 2) {
    out.push_back({problems::objectives(inst, perm), -1, -1, 0, perm});
    return out;
  }
  // node 0 first; a tour and its reversal are enumerated once
  do {
    if (perm[1] > perm.back()) continue;
    out.push_back({problems::objectives(inst, perm), -1, -1, 0, perm});
  } while (std::next_permutation(perm.begin() + 1, perm.end()));
  return out;
}

std::vector<ParetoPoint> subsets(const Instance& inst) {
  const int n = inst.n, M = inst.kind.M;
  std::vector<ParetoPoint> out;
  const Vector w = inst.features.col(M);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double load = 0.0;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1u) load += w(i);
    if (load > inst.capacity + kSlack) continue;
    bool maximal = true;
    for (int i = 0; i < n && maximal; ++i)
      if (!(mask >> i & 1u) && load + w(i) <= inst.capacity + kSlack) maximal = false;
    if (!maximal) continue;
    std::vector<int> seq;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1u) seq.push_back(i);
    out.push_back({problems::objectives(inst, seq), -1, -1, -1, seq});
  }
  return out;
}

// Shortest depot-to-depot route through each customer subset (Held-Karp).
struct RouteTable {
  std::vector<double> length;
  std::vector<std::vector<int>> order;
};

RouteTable route_table(const Instance& inst) {
  const int n = inst.n;
  const std::uint32_t full = 1u << n;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dp(full * static_cast<std::size_t>(n), inf);
  std::vector<int> parent(dp.size(), -1);
  auto at = [n](std::uint32_t mask, int last) { return static_cast<std::size_t>(mask) * n + last; };
  auto d = [&](int a, int b) { return problems::edge_cost(inst, 0, a, b); };
  for (int i = 0; i < n; ++i) dp[at(1u << i, i)] = d(0, i + 1);
  for (std::uint32_t mask = 1; mask < full; ++mask)
    for (int last = 0; last < n; ++last) {
      const double base = dp[at(mask, last)];
      if (!(mask >> last & 1u) || base == inf) continue;
      for (int next = 0; next < n; ++next) {
        if (mask >> next & 1u) continue;
        const std::uint32_t m2 = mask | (1u << next);
        const double c = base + d(last + 1, next + 1);
        if (c < dp[at(m2, next)]) {
          dp[at(m2, next)] = c;
          parent[at(m2, next)] = last;
        }
      }
    }
  RouteTable t;
  t.length.assign(full, inf);
  t.order.resize(full);
  for (std::uint32_t mask = 1; mask < full; ++mask) {
    int best = -1;
    for (int last = 0; last < n; ++last) {
      if (!(mask >> last & 1u)) continue;
      const double c = dp[at(mask, last)] + d(last + 1, 0);
      if (c < t.length[mask]) {
        t.length[mask] = c;
        best = last;
      }
    }
    std::vector<int> rev;
    for (std::uint32_t m = mask; best >= 0;) {
      rev.push_back(best + 1);
      const int p = parent[at(m, best)];
      m &= ~(1u << best);
      best = p;
    }
    t.order[mask].assign(rev.rbegin(), rev.rend());
  }
  return t;
}

void partitions(const Instance& inst, const RouteTable& routes, const std::vector<double>& load,
                std::uint32_t remaining, std::vector<int>& seq, std::vector<ParetoPoint>& out) {
  if (remaining == 0) {
    out.push_back({problems::objectives(inst, seq), -1, -1, -1, seq});
    return;
  }
  // the lowest remaining customer opens the next route, so each partition appears once
  const int low = __builtin_ctz(remaining);
  const std::uint32_t rest = remaining & ~(1u << low);
  for (std::uint32_t sub = rest;; sub = (sub - 1) & rest) {
    const std::uint32_t route = sub | (1u << low);
    if (load[route] <= inst.capacity + kSlack) {
      const std::size_t mark = seq.size();
      for (int a : routes.order[route]) seq.push_back(a);
      seq.push_back(0);
      partitions(inst, routes, load, remaining & ~route, seq, out);
      seq.resize(mark);
    }
    if (sub == 0) break;
  }
}

std::vector<ParetoPoint> vehicle_plans(const Instance& inst) {
  const int n = inst.n;
  const RouteTable routes = route_table(inst);
  std::vector<double> load(1u << n, 0.0);
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    const int low = __builtin_ctz(mask);
    load[mask] = load[mask & (mask - 1)] + inst.features(low, 2);
  }
  std::vector<ParetoPoint> out;
  std::vector<int> seq{0};
  partitions(inst, routes, load, (1u << n) - 1, seq, out);
  return out;
}

}  // namespace

ParetoSet brute_force_pareto(const Instance& inst) {
  const int limit = oracle_limit(inst.kind);
  if (inst.n > limit)
    throw UsageError("exact oracle supports " + inst.kind.name() + " up to n=" + std::to_string(limit) + ", got n=" +
                     std::to_string(inst.n));
  if (inst.n < 1) throw DataError("instance has no nodes");
  std::vector<ParetoPoint> all;
  switch (inst.kind.family) {
    case Family::motsp1:
    case Family::motsp2: all = tours(inst); break;
    case Family::mokp: all = subsets(inst); break;
    case Family::mocvrp: all = vehicle_plans(inst); break;
  }
  return pareto_filter(std::move(all), inst.kind.sense());
}

}  // namespace emnh::eval
