#pragma once

#include "emnh/core/rng.hpp"
#include "emnh/core/types.hpp"

#include <algorithm>
#include <filesystem>
#include <vector>

namespace emnh::decomp {

/// A point on the probability simplex.
using WeightVector = Vector;
using WeightSet = std::vector<WeightVector>;

/// Weighted sum of objectives, oriented so that lower is better.
template <typename DerivedF, typename DerivedL>
typename DerivedF::Scalar weighted_sum(const Eigen::MatrixBase<DerivedF>& f, const Eigen::MatrixBase<DerivedL>& lambda,
                                       Sense sense = Sense::minimize) {
  if (f.size() != lambda.size())
    throw ShapeError("weighted sum of " + std::to_string(f.size()) + " objectives with " +
                     std::to_string(lambda.size()) + " weights");
  const auto v = f.cwiseProduct(lambda).sum();
  return sense == Sense::maximize ? -v : v;
}

/// max_m lambda_m |f_m - z_m|; lower is better in either sense.
template <typename DerivedF, typename DerivedL, typename DerivedZ>
typename DerivedF::Scalar tchebycheff(const Eigen::MatrixBase<DerivedF>& f, const Eigen::MatrixBase<DerivedL>& lambda,
                                      const Eigen::MatrixBase<DerivedZ>& ideal) {
  if (f.size() != lambda.size() || f.size() != ideal.size())
    throw ShapeError("Tchebycheff dimensions disagree");
  return (lambda.array() * (f - ideal).array().abs()).maxCoeff();
}

/// One rotation: the last component moves to the front.
template <typename Derived>
VectorX<typename Derived::Scalar> rotate(const Eigen::MatrixBase<Derived>& lambda) {
  const Eigen::Index M = lambda.size();
  VectorX<typename Derived::Scalar> out(M);
  out(0) = lambda(M - 1);
  out.tail(M - 1) = lambda.head(M - 1);
  return out;
}

/// The M - 1 successive rotations of `lambda`.
template <typename Derived>
std::vector<VectorX<typename Derived::Scalar>> symmetric_rotations(const Eigen::MatrixBase<Derived>& lambda) {
  std::vector<VectorX<typename Derived::Scalar>> out;
  VectorX<typename Derived::Scalar> cur = lambda;
  for (Eigen::Index i = 1; i < lambda.size(); ++i) {
    cur = rotate(cur);
    out.push_back(cur);
  }
  return out;
}

/// Scaled rotation: rotate lambda * f', divide by f', renormalize.
template <typename DerivedL, typename DerivedS>
VectorX<typename DerivedL::Scalar> scaled_rotation(const Eigen::MatrixBase<DerivedL>& lambda,
                                                   const Eigen::MatrixBase<DerivedS>& scale) {
  VectorX<typename DerivedL::Scalar> scaled = lambda.cwiseProduct(scale);
  VectorX<typename DerivedL::Scalar> out = rotate(scaled).cwiseQuotient(scale);
  return out / out.sum();
}

/// True when every component is nonnegative and the sum is 1 within `tol`.
bool on_simplex(const WeightVector& lambda, double tol = 1e-12);

/// Simplex lattice with spacing 1/H, ordered lexicographically by the
/// components (ascending). Count is C(H + M - 1, M - 1).
WeightSet das_dennis_weights(int M, int H);

/// Uniform sample from the simplex via sorted uniform spacings.
WeightVector sample_simplex(Rng& rng, int M);

/// Objective scales f' and where they came from.
struct ScaleEstimate {
  enum class Source { validation_estimate, configured };
  Vector f;
  Source source = Source::configured;
  int iteration = 0;
};

ScaleEstimate unit_scale(int M);

/// Ntilde weights: floor(Ntilde / M) uniform samples, each followed in turn
/// by its M - 1 scaled rotations, then the remainder sampled uniformly.
/// Throws UsageError for a nonpositive scale component.
WeightSet scaled_symmetric_sample(Rng& rng, const Vector& scale, int ntilde, int M);

/// Ntilde independent uniform samples.
WeightSet random_sample(Rng& rng, int ntilde, int M);

/// How the per-instance representative solution is chosen when estimating f'.
enum class ScalePick { best, worst };

/// f'_m = mean over instances of f_m at the start whose scalarized value
/// under the uniform weight is picked (best = lowest cost). `per_instance`
/// holds the candidate objective vectors of each validation instance.
Vector estimate_ideal_scale(const std::vector<std::vector<Vector>>& per_instance, Sense sense,
                            ScalePick pick = ScalePick::best);

/// Each weight scaled componentwise by 1 / f' and renormalized.
WeightSet scaled_weight_assignment(const WeightSet& weights, const Vector& scale);

void write_weights_csv(const std::filesystem::path& path, const WeightSet& weights);
WeightSet read_weights_csv(const std::filesystem::path& path);

}  // namespace emnh::decomp
