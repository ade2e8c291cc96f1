#include "emnh/problems/env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace emnh::problems {

namespace {

constexpr double kFeasibilitySlack = 1e-9;

double weight(const Instance& inst, int item) { return inst.features(item, inst.kind.M); }
double demand(const Instance& inst, int customer) { return inst.features(customer, 2); }

void check_range(const Instance& inst, int action) {
  if (action < 0 || action >= inst.action_count())
    throw DataError("action " + std::to_string(action) + " outside [0, " + std::to_string(inst.action_count()) +
                    ")");
}

bool any_item_fits(const Instance& inst, const DecodeState& s) {
  for (int i = 0; i < inst.n; ++i)
    if (!s.visited[static_cast<std::size_t>(i)] && weight(inst, i) <= s.remaining) return true;
  return false;
}

}  // namespace

bool feasible_start(const Instance& inst, int start) {
  if (start < 0 || start >= inst.n) return false;
  return inst.kind.family != Family::mokp || weight(inst, start) <= inst.capacity;
}

DecodeState initial_state(const Instance& inst, int start) {
  if (start < 0 || start >= inst.n)
    throw DataError("start index " + std::to_string(start) + " outside [0, " + std::to_string(inst.n) + ")");
  DecodeState s;
  s.visited.assign(static_cast<std::size_t>(inst.action_count()), 0);
  switch (inst.kind.family) {
    case Family::motsp1:
    case Family::motsp2:
      s.sequence = {start};
      s.visited[static_cast<std::size_t>(start)] = 1;
      s.current = start;
      s.unvisited = inst.n - 1;
      s.done = s.unvisited == 0;
      break;
    case Family::mocvrp:
      s.sequence = {0, start + 1};
      s.visited[static_cast<std::size_t>(start + 1)] = 1;
      s.current = start + 1;
      s.remaining = inst.capacity - demand(inst, start);
      s.unvisited = inst.n - 1;
      s.done = s.unvisited == 0;
      break;
    case Family::mokp:
      if (weight(inst, start) > inst.capacity)
        throw DataError("start item " + std::to_string(start) + " is heavier than the knapsack capacity");
      s.sequence = {start};
      s.visited[static_cast<std::size_t>(start)] = 1;
      s.current = start;
      s.remaining = inst.capacity - weight(inst, start);
      s.unvisited = inst.n - 1;
      s.done = !any_item_fits(inst, s);
      break;
  }
  return s;
}

Mask feasible_mask(const Instance& inst, const DecodeState& s) {
  Mask mask = Mask::Constant(inst.action_count(), false);
  if (s.done) return mask;
  switch (inst.kind.family) {
    case Family::motsp1:
    case Family::motsp2:
      for (int i = 0; i < inst.n; ++i) mask(i) = !s.visited[static_cast<std::size_t>(i)];
      break;
    case Family::mocvrp:
      // no depot-to-depot moves
      mask(0) = s.current != 0;
      for (int i = 0; i < inst.n; ++i)
        mask(i + 1) = !s.visited[static_cast<std::size_t>(i + 1)] && demand(inst, i) <= s.remaining;
      break;
    case Family::mokp:
      for (int i = 0; i < inst.n; ++i)
        mask(i) = !s.visited[static_cast<std::size_t>(i)] && weight(inst, i) <= s.remaining;
      break;
  }
  return mask;
}

void advance(const Instance& inst, DecodeState& s, int action) {
  check_range(inst, action);
  if (!feasible_mask(inst, s)(action))
    throw DataError("action " + std::to_string(action) + " is masked at step " + std::to_string(s.t()));
  s.sequence.push_back(action);
  s.current = action;
  switch (inst.kind.family) {
    case Family::motsp1:
    case Family::motsp2:
      s.visited[static_cast<std::size_t>(action)] = 1;
      s.done = --s.unvisited == 0;
      break;
    case Family::mocvrp:
      if (action == 0) {
        s.remaining = inst.capacity;
      } else {
        s.visited[static_cast<std::size_t>(action)] = 1;
        s.remaining -= demand(inst, action - 1);
        s.done = --s.unvisited == 0;
      }
      break;
    case Family::mokp:
      s.visited[static_cast<std::size_t>(action)] = 1;
      s.remaining -= weight(inst, action);
      --s.unvisited;
      s.done = !any_item_fits(inst, s);
      break;
  }
}

DecodeState apply_action(const Instance& inst, DecodeState state, int action) {
  advance(inst, state, action);
  return state;
}

Solution finish(const Instance& inst, const DecodeState& s) {
  if (!s.done) throw DataError("cannot finish a non-terminal state at step " + std::to_string(s.t()));
  Solution sol;
  sol.sequence = s.sequence;
  if (inst.kind.family == Family::mocvrp && sol.sequence.back() != 0) sol.sequence.push_back(0);
  sol.objectives = objectives(inst, sol.sequence);
  return sol;
}

double edge_cost(const Instance& inst, int m, int a, int b) {
  if (inst.kind.family == Family::mocvrp) {
    auto xy = [&](int id) -> std::pair<double, double> {
      if (id == 0) return {inst.depot(0), inst.depot(1)};
      return {inst.features(id - 1, 0), inst.features(id - 1, 1)};
    };
    const auto [xa, ya] = xy(a);
    const auto [xb, yb] = xy(b);
    return std::hypot(xa - xb, ya - yb);
  }
  if (inst.kind.family == Family::motsp2 && m == inst.kind.M - 1) {
    const Eigen::Index alt = 2 * inst.kind.M - 2;
    return std::abs(inst.features(a, alt) - inst.features(b, alt));
  }
  return std::hypot(inst.features(a, 2 * m) - inst.features(b, 2 * m),
                    inst.features(a, 2 * m + 1) - inst.features(b, 2 * m + 1));
}

Vector objectives(const Instance& inst, const std::vector<int>& seq) {
  const int M = inst.kind.M;
  Vector f = Vector::Zero(M);
  std::vector<char> seen(static_cast<std::size_t>(inst.action_count()), 0);
  for (int a : seq) check_range(inst, a);

  switch (inst.kind.family) {
    case Family::motsp1:
    case Family::motsp2: {
      if (static_cast<int>(seq.size()) != inst.n)
        throw DataError("tour visits " + std::to_string(seq.size()) + " nodes, expected " + std::to_string(inst.n));
      for (int a : seq) {
        if (seen[static_cast<std::size_t>(a)]) throw DataError("tour visits node " + std::to_string(a) + " twice");
        seen[static_cast<std::size_t>(a)] = 1;
      }
      for (int m = 0; m < M; ++m)
        for (std::size_t j = 0; j < seq.size(); ++j) f(m) += edge_cost(inst, m, seq[j], seq[(j + 1) % seq.size()]);
      return f;
    }
    case Family::mocvrp: {
      if (seq.size() < 3 || seq.front() != 0 || seq.back() != 0)
        throw DataError("vehicle routes must start and end at the depot");
      double load = 0.0, route = 0.0, makespan = 0.0, total = 0.0;
      for (std::size_t j = 1; j < seq.size(); ++j) {
        const double c = edge_cost(inst, 0, seq[j - 1], seq[j]);
        total += c;
        route += c;
        const int a = seq[j];
        if (a == 0) {
          makespan = std::max(makespan, route);
          route = 0.0;
          load = 0.0;
          continue;
        }
        if (seen[static_cast<std::size_t>(a)])
          throw DataError("customer " + std::to_string(a - 1) + " is served twice");
        seen[static_cast<std::size_t>(a)] = 1;
        load += demand(inst, a - 1);
        if (load > inst.capacity + kFeasibilitySlack)
          throw DataError("route load " + std::to_string(load) + " exceeds the vehicle capacity");
      }
      for (int i = 1; i <= inst.n; ++i)
        if (!seen[static_cast<std::size_t>(i)]) throw DataError("customer " + std::to_string(i - 1) + " is not served");
      f << total, makespan;
      return f;
    }
    case Family::mokp: {
      double w = 0.0;
      for (int a : seq) {
        if (seen[static_cast<std::size_t>(a)]) throw DataError("item " + std::to_string(a) + " selected twice");
        seen[static_cast<std::size_t>(a)] = 1;
        w += weight(inst, a);
        f += inst.features.row(a).head(M).transpose();
      }
      if (w > inst.capacity + kFeasibilitySlack)
        throw DataError("selected weight " + std::to_string(w) + " exceeds the knapsack capacity");
      return f;
    }
  }
  return f;
}

int augmentation_count(const ProblemKind& kind) {
  auto pow8 = [](int e) {
    int r = 1;
    for (int i = 0; i < e; ++i) r *= 8;
    return r;
  };
  switch (kind.family) {
    case Family::motsp1: return pow8(kind.M);
    case Family::motsp2: return 2 * pow8(kind.M - 1);
    case Family::mocvrp: return 8;
    case Family::mokp: break;
  }
  throw UsageError("mokp has no augmentation");
}

void transform_pair(int which, double& x, double& y) {
  const double a = x, b = y;
  switch (which) {
    case 0: x = a; y = b; break;
    case 1: x = b; y = a; break;
    case 2: x = a; y = 1 - b; break;
    case 3: x = b; y = 1 - a; break;
    case 4: x = 1 - a; y = b; break;
    case 5: x = 1 - b; y = a; break;
    case 6: x = 1 - a; y = 1 - b; break;
    case 7: x = 1 - b; y = 1 - a; break;
    default: throw UsageError("transform index must be in [0, 8)");
  }
}

std::vector<Instance> augment(const Instance& inst) {
  const int count = augmentation_count(inst.kind);
  const int pairs = inst.kind.coordinate_pairs();
  std::vector<Instance> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) {
    Instance copy = inst;
    int code = t;
    for (int p = 0; p < pairs; ++p) {
      const int which = code % 8;
      code /= 8;
      for (int i = 0; i < inst.n; ++i) transform_pair(which, copy.features(i, 2 * p), copy.features(i, 2 * p + 1));
      if (inst.kind.family == Family::mocvrp) transform_pair(which, copy.depot(0), copy.depot(1));
    }
    if (inst.kind.family == Family::motsp2 && code == 1) {
      const Eigen::Index alt = 2 * inst.kind.M - 2;
      copy.features.col(alt) = (1.0 - copy.features.col(alt).array()).matrix();
    }
    copy.metadata["augmentation"] = t;
    out.push_back(std::move(copy));
  }
  return out;
}

}  // namespace emnh::problems
