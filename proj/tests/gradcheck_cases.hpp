#pragma once

#include "emnh/autodiff/graph.hpp"
#include "emnh/core/rng.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace emnh::testing {

inline ad::Tensor random_tensor(Rng& rng, Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
  ad::Tensor t(r, c);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(lo, hi);
  return t;
}

// Random linear functional of `out`, so every output entry gets a distinct upstream gradient.
inline ad::Var probe_loss(ad::Var out, Rng& rng) {
  return ad::sum(ad::hadamard_const(out, random_tensor(rng, out.rows(), out.cols())));
}

/// Worst relative gradient-check error of each tape primitive over `seeds` random inputs.
inline std::vector<std::pair<std::string, double>> primitive_gradcheck(int seeds) {
  using namespace ad;

  struct Case {
    const char* name;
    std::function<Var(Tape&, const ParamStore&, Rng&)> build;
    std::function<void(ParamStore&, Rng&)> init;
  };
  auto one = [](Eigen::Index r, Eigen::Index c, double lo = -1, double hi = 1) {
    return [=](ParamStore& p, Rng& rng) { p.add("a", Partition::body, random_tensor(rng, r, c, lo, hi)); };
  };
  auto two = [](Eigen::Index r1, Eigen::Index c1, Eigen::Index r2, Eigen::Index c2) {
    return [=](ParamStore& p, Rng& rng) {
      p.add("a", Partition::body, random_tensor(rng, r1, c1));
      p.add("b", Partition::head, random_tensor(rng, r2, c2));
    };
  };
  std::vector<Case> cases = {
      {"matmul", [](Tape& t, const ParamStore& p, Rng&) { return matmul(t.param(p, "a"), t.param(p, "b")); },
       two(3, 4, 4, 2)},
      {"matmul_nt", [](Tape& t, const ParamStore& p, Rng&) { return matmul_nt(t.param(p, "a"), t.param(p, "b")); },
       two(3, 4, 5, 4)},
      {"add", [](Tape& t, const ParamStore& p, Rng&) { return add(t.param(p, "a"), t.param(p, "b")); },
       two(3, 4, 3, 4)},
      {"add_row", [](Tape& t, const ParamStore& p, Rng&) { return add(t.param(p, "a"), t.param(p, "b")); },
       two(3, 4, 1, 4)},
      {"sub", [](Tape& t, const ParamStore& p, Rng&) { return sub(t.param(p, "a"), t.param(p, "b")); },
       two(2, 3, 2, 3)},
      {"scale", [](Tape& t, const ParamStore& p, Rng&) { return scale(t.param(p, "a"), -2.5); }, one(2, 3)},
      {"tanh", [](Tape& t, const ParamStore& p, Rng&) { return ad::tanh(t.param(p, "a")); }, one(3, 3, -2, 2)},
      // kept away from the kink at zero
      {"relu", [](Tape& t, const ParamStore& p, Rng&) { return relu(t.param(p, "a")); },
       [](ParamStore& p, Rng& rng) {
         Tensor a = random_tensor(rng, 3, 3, 0.1, 1.0);
         for (Eigen::Index i = 0; i < a.size(); ++i)
           if (rng.uniform() < 0.5) a.data()[i] = -a.data()[i];
         p.add("a", Partition::body, a);
       }},
      {"log", [](Tape& t, const ParamStore& p, Rng&) { return ad::log(t.param(p, "a")); }, one(2, 4, 0.2, 3.0)},
      {"softmax_masked",
       [](Tape& t, const ParamStore& p, Rng& rng) {
         Tensor mask = Tensor::Zero(3, 5);
         for (Eigen::Index i = 0; i < 3; ++i)
           for (Eigen::Index j = 1; j < 5; ++j)
             if (rng.uniform() < 0.3) mask(i, j) = kMaskedLogit;
         return softmax_rows(t.param(p, "a"), mask);
       },
       one(3, 5, -3, 3)},
      {"batch_norm",
       [](Tape& t, const ParamStore& p, Rng&) {
         return batch_norm(t.param(p, "a"), t.param(p, "g"), t.param(p, "b"));
       },
       [](ParamStore& p, Rng& rng) {
         p.add("a", Partition::body, random_tensor(rng, 5, 3));
         p.add("g", Partition::body, random_tensor(rng, 1, 3, 0.5, 1.5));
         p.add("b", Partition::body, random_tensor(rng, 1, 3));
       }},
      {"concat_cols",
       [](Tape& t, const ParamStore& p, Rng&) {
         const Var parts[] = {t.param(p, "a"), t.param(p, "b"), t.param(p, "a")};
         return concat_cols(parts);
       },
       two(2, 3, 2, 1)},
      {"concat_rows",
       [](Tape& t, const ParamStore& p, Rng&) {
         const Var parts[] = {t.param(p, "a"), t.param(p, "b")};
         return concat_rows(parts);
       },
       two(2, 3, 1, 3)},
      {"mean_rows", [](Tape& t, const ParamStore& p, Rng&) { return mean_rows(t.param(p, "a")); }, one(4, 3)},
      {"sum_rows", [](Tape& t, const ParamStore& p, Rng&) { return sum_rows(t.param(p, "a")); }, one(4, 3)},
      {"broadcast_rows", [](Tape& t, const ParamStore& p, Rng&) { return broadcast_rows(t.param(p, "a"), 4); },
       one(1, 3)},
      {"slice_cols", [](Tape& t, const ParamStore& p, Rng&) { return slice_cols(t.param(p, "a"), 1, 2); }, one(3, 4)},
      {"gather_rows",
       [](Tape& t, const ParamStore& p, Rng&) {
         const int rows[] = {2, 0, 2, 1};
         return gather_rows(t.param(p, "a"), rows);
       },
       one(3, 2)},
      {"pick",
       [](Tape& t, const ParamStore& p, Rng&) {
         const int cols[] = {1, 0, 3};
         return pick(t.param(p, "a"), cols);
       },
       one(3, 4)},
  };
  std::vector<std::pair<std::string, double>> out;
  for (const auto& c : cases) {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(seeds); ++seed) {
      Rng init_rng(seed * 7919 + 1);
      ParamStore params;
      c.init(params, init_rng);
      const std::uint64_t build_seed = seed + 17;
      LossFn loss = [&](Tape& t, const ParamStore& p) {
        Rng rng(build_seed);
        return probe_loss(c.build(t, p, rng), rng);
      };
      worst = std::max(worst, check_gradients(loss, params, 1e-4).worst);
    }
    out.emplace_back(c.name, worst);
  }
  return out;
}

}  // namespace emnh::testing
