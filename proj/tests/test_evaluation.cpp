#include <doctest.h>

#include "emnh/core/rng.hpp"
#include "emnh/evaluation/oracle.hpp"
#include "emnh/evaluation/pareto.hpp"
#include "emnh/evaluation/reference.hpp"
#include "emnh/evaluation/solve.hpp"
#include "emnh/problems/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace emnh;
using namespace emnh::eval;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// O(n^2) nondominated subset (minimization), no dedup of equal points.
std::vector<Vector> pairwise_nondominated(const std::vector<Vector>& pts) {
  std::vector<Vector> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j)
      dominated = j != i && dominates(pts[j], pts[i], Sense::minimize);
    if (!dominated) out.push_back(pts[i]);
  }
  return out;
}

std::set<std::vector<double>> as_set(const std::vector<Vector>& pts) {
  std::set<std::vector<double>> s;
  for (const auto& p : pts) s.insert(std::vector<double>(p.data(), p.data() + p.size()));
  return s;
}

// Exact HV by coordinate compression: sum the grid cells whose lower corner is dominated.
double grid_hypervolume(const std::vector<Vector>& pts, const Vector& r) {
  const Eigen::Index M = r.size();
  std::vector<std::vector<double>> axes(static_cast<std::size_t>(M));
  for (Eigen::Index m = 0; m < M; ++m) {
    auto& a = axes[static_cast<std::size_t>(m)];
    for (const auto& p : pts) a.push_back(p(m));
    a.push_back(r(m));
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  std::vector<std::size_t> idx(static_cast<std::size_t>(M), 0);
  double total = 0.0;
  while (true) {
    bool valid = true;
    Vector corner(M);
    double vol = 1.0;
    for (Eigen::Index m = 0; m < M; ++m) {
      const auto& a = axes[static_cast<std::size_t>(m)];
      const std::size_t i = idx[static_cast<std::size_t>(m)];
      if (i + 1 >= a.size()) {
        valid = false;
        break;
      }
      corner(m) = a[i];
      vol *= a[i + 1] - a[i];
    }
    if (valid)
      for (const auto& p : pts)
        if ((p.array() <= corner.array()).all()) {
          total += vol;
          break;
        }
    std::size_t m = 0;
    while (m < idx.size() && ++idx[m] >= axes[m].size() - 1) idx[m++] = 0;
    if (m == idx.size()) break;
  }
  return total;
}

// Points on a concave-ish curve so fronts are mostly nondominated.
std::vector<Vector> random_front(Rng& rng, int M, int size) {
  std::vector<Vector> pts;
  for (int i = 0; i < size; ++i) {
    Vector p(M);
    for (int m = 0; m < M; ++m) p(m) = rng.uniform(0.05, 1.0);
    p *= rng.uniform(0.6, 1.0) / p.sum() * M * 0.5;
    pts.push_back(p.cwiseMin(0.999));
  }
  return pareto_filter(pts, Sense::minimize);
}

}  // namespace

TEST_CASE("pareto filter basic examples") {
  auto f = pareto_filter({vec({1, 2}), vec({2, 1}), vec({2, 2})}, Sense::minimize);
  CHECK(as_set(f) == as_set({vec({1, 2}), vec({2, 1})}));
  CHECK(pareto_filter({vec({4, 4})}, Sense::minimize).size() == 1);
  auto dup = pareto_filter({vec({1, 1}), vec({1, 1}), vec({0, 3})}, Sense::minimize);
  CHECK(dup.size() == 2);
  auto mx = pareto_filter({vec({1, 2}), vec({2, 1}), vec({2, 2})}, Sense::maximize);
  REQUIRE(mx.size() == 1);
  CHECK(mx[0] == vec({2, 2}));
}

TEST_CASE("pareto filter keeps the first duplicate's provenance") {
  std::vector<ParetoPoint> pts{{vec({1, 1}), 3}, {vec({1, 1}), 7}, {vec({2, 2}), 1}};
  auto s = pareto_filter(pts, Sense::minimize);
  REQUIRE(s.size() == 1);
  CHECK(s.points[0].weight_index == 3);
}

TEST_CASE("pareto filter matches the pairwise oracle and is idempotent") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vector> pts;
    for (int i = 0; i < 200; ++i) {
      Vector p(3);
      // coarse grid creates ties and duplicates
      for (int m = 0; m < 3; ++m) p(m) = static_cast<double>(rng.below(12));
      pts.push_back(p);
    }
    const auto fast = pareto_filter(pts, Sense::minimize);
    CHECK(as_set(fast) == as_set(pairwise_nondominated(pts)));
    CHECK(as_set(fast).size() == fast.size());
    const auto again = pareto_filter(fast, Sense::minimize);
    CHECK(again == fast);
  }
}

TEST_CASE("hypervolume hand cases") {
  CHECK(hypervolume({vec({1, 2}), vec({2, 1})}, vec({3, 3})) == 3.0);
  CHECK(hypervolume({}, vec({3, 3})) == 0.0);
  CHECK(hypervolume({vec({0.5, 1.0, 2.0})}, vec({2, 3, 4})) == doctest::Approx(1.5 * 2 * 2).epsilon(1e-15));
  CHECK(hypervolume({vec({1, 2}), vec({2, 1}), vec({2, 2})}, vec({3, 3})) == 3.0);
  // maximization mirrors the box
  CHECK(hypervolume({vec({2, 1}), vec({1, 2})}, vec({0, 0}), Sense::maximize) == 3.0);
}

TEST_CASE("hypervolume names a point beyond the reference") {
  try {
    hypervolume({vec({1, 2}), vec({3.5, 0.5})}, vec({3, 3}));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("(3.5, 0.5)") != std::string::npos);
  }
}

TEST_CASE("hypervolume ratio examples") {
  const Vector r = vec({20, 20}), z = vec({0, 0});
  CHECK(hv_ratio({z}, r, z) == 1.0);
  CHECK(hv_ratio({vec({10, 10})}, r, z) == doctest::Approx(100.0 / 400.0));
  CHECK(hv_ratio({vec({1, 2}), vec({2, 1})}, vec({3, 3}), z) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(hv_ratio({}, vec({3, 0}), z), UsageError);
}

TEST_CASE("exact hypervolume equals grid enumeration") {
  Rng rng(5);
  for (int M = 2; M <= 4; ++M)
    for (int trial = 0; trial < 30; ++trial) {
      const auto front = random_front(rng, M, 3 + static_cast<int>(rng.below(M == 4 ? 8 : 20)));
      const Vector r = Vector::Ones(M);
      CHECK(hypervolume(front, r) == doctest::Approx(grid_hypervolume(front, r)).epsilon(1e-12));
    }
}

TEST_CASE("hypervolume is monotone under added points") {
  Rng rng(6);
  for (int M = 2; M <= 3; ++M)
    for (int trial = 0; trial < 50; ++trial) {
      auto front = random_front(rng, M, 10);
      double prev = hypervolume(front, Vector::Ones(M));
      for (int k = 0; k < 5; ++k) {
        Vector p(M);
        for (int m = 0; m < M; ++m) p(m) = rng.uniform(0.0, 1.0);
        front.push_back(p);
        const double cur = hypervolume(front, Vector::Ones(M));
        CHECK(cur >= prev);
        prev = cur;
      }
    }
}

TEST_CASE("Monte-Carlo hypervolume agrees with the exact value") {
  Rng rng(7);
  int outside = 0, total = 0;
  for (int M = 2; M <= 3; ++M)
    for (int trial = 0; trial < 100; ++trial) {
      const auto front = random_front(rng, M, 4 + static_cast<int>(rng.below(12)));
      const Vector r = Vector::Ones(M), z = Vector::Zero(M);
      const double exact = hypervolume(front, r);
      const auto mc = mc_hypervolume(front, r, z, 100000, derive_seed(99, {static_cast<std::uint64_t>(M), static_cast<std::uint64_t>(trial)}));
      ++total;
      if (std::abs(mc.value - exact) > 3.0 * mc.std_error) ++outside;
      CHECK(std::abs(mc.value - exact) < 5.0 * mc.std_error);
    }
  // about 0.3% of draws fall outside 3 sigma
  CHECK(outside <= 4);
  CHECK(total == 200);
}

TEST_CASE("Monte-Carlo hypervolume trivial cases") {
  const Vector r = vec({2, 3}), z = vec({0, 0});
  CHECK(mc_hypervolume({}, r, z, 1000, 1).value == 0.0);
  CHECK(mc_hypervolume({z}, r, z, 1000, 1).value == 6.0);
  CHECK(mc_hypervolume({vec({0, 0, 0})}, vec({1, 1, 1}), vec({0, 0, 0}), 100, 2).value == 1.0);
  CHECK_THROWS_AS(mc_hypervolume({}, r, z, 0, 1), UsageError);
}

TEST_CASE("gap examples") {
  CHECK(gap(2.0, 2.0) == 0.0);
  CHECK(gap(0.9, 1.0) == doctest::Approx(0.1));
  CHECK(gap(1.1, 1.0) == doctest::Approx(-0.1));
  CHECK_THROWS_AS(gap(1.0, 0.0), UsageError);
}

TEST_CASE("reference table lookup") {
  auto r = reference_points(problems::parse_kind("motsp1"), 20);
  CHECK(r.reference == vec({20, 20}));
  CHECK(r.ideal == vec({0, 0}));
  CHECK(r.exact_size);
  auto near = reference_points(problems::parse_kind("motsp1"), 6);
  CHECK(near.reference == vec({20, 20}));
  CHECK_FALSE(near.exact_size);
  CHECK(reference_points(problems::parse_kind("motsp1"), 35).table_size == 20);
  CHECK(reference_points(problems::parse_kind("mocvrp"), 100).reference == vec({80, 4}));
  CHECK(reference_points(problems::parse_kind("mokp"), 100).ideal == vec({50, 50}));
  auto tri = reference_points(problems::parse_kind("motsp2", 3), 50);
  CHECK(tri.reference == vec({35, 35, 25}));
  CHECK(tri.ideal.size() == 3);
  CHECK_THROWS_AS(reference_points(problems::parse_kind("mokp", 3), 100), UsageError);
}

TEST_CASE("oracle: three-city tour has a single front point") {
  auto inst = problems::generate_instance(problems::parse_kind("motsp1"), 3, 4);
  auto front = brute_force_pareto(inst);
  CHECK(front.size() == 1);
  auto tri = problems::generate_instance(problems::parse_kind("motsp1", 3), 3, 5);
  CHECK(brute_force_pareto(tri).size() == 1);
}

TEST_CASE("oracle: two items that do not fit together") {
  problems::Instance inst;
  inst.kind = problems::parse_kind("mokp");
  inst.n = 2;
  inst.features.resize(2, 3);
  inst.features << 1, 0, 0.6, 0, 1, 0.6;
  inst.capacity = 1.0;
  auto front = brute_force_pareto(inst);
  CHECK(as_set(front.objectives()) == as_set({vec({1, 0}), vec({0, 1})}));
}

TEST_CASE("oracle refuses oversized instances") {
  auto inst = problems::generate_instance(problems::parse_kind("motsp1"), 12, 1);
  CHECK_THROWS_AS(brute_force_pareto(inst), UsageError);
  CHECK(oracle_limit(problems::parse_kind("mocvrp")) == 7);
  CHECK(oracle_limit(problems::parse_kind("mokp")) == 20);
}

TEST_CASE("oracle agrees with filtering a full enumeration") {
  // every permutation, no symmetry reduction
  for (const char* fam : {"motsp1", "motsp2"})
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto inst = problems::generate_instance(problems::parse_kind(fam), 6, seed);
      std::vector<int> perm{0, 1, 2, 3, 4, 5};
      std::vector<Vector> all;
      do all.push_back(problems::objectives(inst, perm));
      while (std::next_permutation(perm.begin(), perm.end()));
      const auto expect = pareto_filter(all, Sense::minimize);
      const auto got = brute_force_pareto(inst);
      CHECK(hypervolume(got.objectives(), vec({20, 20})) ==
            doctest::Approx(hypervolume(expect, vec({20, 20}))).epsilon(1e-12));
      for (const auto& p : got.points) CHECK(problems::objectives(inst, p.sequence) == p.f);
    }
}

TEST_CASE("knapsack oracle agrees with all subsets") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto inst = problems::generate_instance(problems::parse_kind("mokp"), 12, seed, 2.0);
    std::vector<Vector> all;
    for (std::uint32_t mask = 0; mask < (1u << 12); ++mask) {
      std::vector<int> seq;
      double w = 0.0;
      for (int i = 0; i < 12; ++i)
        if (mask >> i & 1u) {
          seq.push_back(i);
          w += inst.features(i, 2);
        }
      if (w <= inst.capacity) all.push_back(problems::objectives(inst, seq));
    }
    const auto expect = pareto_filter(all, Sense::maximize);
    const auto got = brute_force_pareto(inst);
    CHECK(as_set(got.objectives()) == as_set(expect));
  }
}

namespace {

// Every customer order split at every subset of cut points.
std::vector<Vector> enumerate_vrp(const problems::Instance& inst) {
  std::vector<Vector> out;
  std::vector<int> perm(static_cast<std::size_t>(inst.n));
  std::iota(perm.begin(), perm.end(), 1);
  do {
    for (std::uint32_t cuts = 0; cuts < (1u << (inst.n - 1)); ++cuts) {
      std::vector<int> seq{0};
      for (int i = 0; i < inst.n; ++i) {
        seq.push_back(perm[static_cast<std::size_t>(i)]);
        if (i + 1 < inst.n && (cuts >> i & 1u)) seq.push_back(0);
      }
      seq.push_back(0);
      try {
        out.push_back(problems::objectives(inst, seq));
      } catch (const DataError&) {
      }
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace

TEST_CASE("vehicle routing oracle agrees with all split tours") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto inst = problems::generate_instance(problems::parse_kind("mocvrp"), 6, seed, 9.0);
    const auto expect = pareto_filter(enumerate_vrp(inst), Sense::minimize);
    const auto got = brute_force_pareto(inst);
    CHECK(hypervolume(got.objectives(), vec({30, 4})) ==
          doctest::Approx(hypervolume(expect, vec({30, 4}))).epsilon(1e-12));
  }
}

TEST_CASE("augmentation never hurts any weight") {
  policy::ModelConfig c;
  c.kind = problems::parse_kind("motsp1");
  c.d_model = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  const auto params = policy::init_params(c, 3);
  const auto weights = decomp::das_dennis_weights(2, 4);
  const auto set = finetune::uniform_submodels(c, params, weights);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = problems::generate_instance(c.kind, 6, seed);
    const auto off = solve_instance(set, inst, false), on = solve_instance(set, inst, true);
    CHECK(hypervolume(on.objectives(), vec({20, 20})) >= hypervolume(off.objectives(), vec({20, 20})));
    const auto copies = problems::augment(inst);
    for (const auto& w : weights) {
      const auto a = best_for_weight(c, params, w, inst, {inst});
      const auto b = best_for_weight(c, params, w, inst, copies);
      CHECK(decomp::weighted_sum(b.f, w, Sense::minimize) <= decomp::weighted_sum(a.f, w, Sense::minimize));
      CHECK(problems::objectives(inst, b.sequence) == b.f);
    }
    for (const auto& p : on.points) CHECK(p.weight_index >= 0);
  }
}

TEST_CASE("duplicate weights do not duplicate front points") {
  policy::ModelConfig c;
  c.kind = problems::parse_kind("motsp1");
  c.d_model = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  const auto params = policy::init_params(c, 4);
  decomp::WeightSet weights{vec({0.5, 0.5}), vec({0.5, 0.5}), vec({0.2, 0.8}), vec({0.2, 0.8})};
  const auto inst = problems::generate_instance(c.kind, 6, 1);
  const auto front = solve_instance(finetune::uniform_submodels(c, params, weights), inst, false);
  CHECK(as_set(front.objectives()).size() == front.size());
  CHECK(front.size() <= 2);

  policy::ModelConfig other = c;
  other.kind = problems::parse_kind("motsp2");
  CHECK_THROWS_AS(solve_instance(finetune::uniform_submodels(other, policy::init_params(other, 1), weights), inst, false),
                  UsageError);
}
