#include "emnh/decomposition/weights.hpp"

#include "emnh/autodiff/checkpoint.hpp"

#include <cstdio>
#include <sstream>
#include <string>

namespace emnh::decomp {

bool on_simplex(const WeightVector& lambda, double tol) {
  return lambda.size() > 0 && (lambda.array() >= 0.0).all() && std::abs(lambda.sum() - 1.0) <= tol;
}

namespace {

void lattice(int M, int H, int remaining, std::vector<int>& prefix, WeightSet& out) {
  if (static_cast<int>(prefix.size()) == M - 1) {
    WeightVector w(M);
    for (int m = 0; m < M - 1; ++m) w(m) = static_cast<double>(prefix[static_cast<std::size_t>(m)]) / H;
    w(M - 1) = static_cast<double>(remaining) / H;
    out.push_back(std::move(w));
    return;
  }
  for (int k = 0; k <= remaining; ++k) {
    prefix.push_back(k);
    lattice(M, H, remaining - k, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

WeightSet das_dennis_weights(int M, int H) {
  if (M < 2) throw UsageError("weight vectors need M >= 2");
  if (H < 1) throw UsageError("Das-Dennis divisions H must be >= 1");
  WeightSet out;
  std::vector<int> prefix;
  lattice(M, H, H, prefix, out);
  return out;
}

WeightVector sample_simplex(Rng& rng, int M) {
  std::vector<double> cuts(static_cast<std::size_t>(M - 1));
  for (auto& c : cuts) c = rng.uniform();
  std::sort(cuts.begin(), cuts.end());
  WeightVector w(M);
  double prev = 0.0;
  for (int m = 0; m < M - 1; ++m) {
    w(m) = cuts[static_cast<std::size_t>(m)] - prev;
    prev = cuts[static_cast<std::size_t>(m)];
  }
  w(M - 1) = 1.0 - prev;
  return w;
}

ScaleEstimate unit_scale(int M) { return ScaleEstimate{Vector::Ones(M), ScaleEstimate::Source::configured, 0}; }

WeightSet random_sample(Rng& rng, int ntilde, int M) {
  WeightSet out;
  for (int i = 0; i < ntilde; ++i) out.push_back(sample_simplex(rng, M));
  return out;
}

WeightSet scaled_symmetric_sample(Rng& rng, const Vector& scale, int ntilde, int M) {
  if (ntilde < 1) throw UsageError("number of sampled weights must be >= 1");
  if (scale.size() != M) throw ShapeError("objective scale has the wrong dimension");
  if (!(scale.array() > 0.0).all() || !scale.allFinite())
    throw UsageError("objective scales must be positive and finite");
  const int groups = ntilde / M;
  WeightSet out(static_cast<std::size_t>(ntilde));
  for (int i = 0; i < groups; ++i) out[static_cast<std::size_t>(i)] = sample_simplex(rng, M);
  for (int i = groups; i < groups * M; ++i)
    out[static_cast<std::size_t>(i)] = scaled_rotation(out[static_cast<std::size_t>(i - groups)], scale);
  for (int i = groups * M; i < ntilde; ++i) out[static_cast<std::size_t>(i)] = sample_simplex(rng, M);
  return out;
}

Vector estimate_ideal_scale(const std::vector<std::vector<Vector>>& per_instance, Sense sense, ScalePick pick) {
  if (per_instance.empty()) throw UsageError("scale estimation needs a non-empty validation set");
  const Eigen::Index M = per_instance.front().empty() ? 0 : per_instance.front().front().size();
  if (M == 0) throw DataError("validation instance without candidate solutions");
  const WeightVector uniform = WeightVector::Constant(M, 1.0 / static_cast<double>(M));
  Vector total = Vector::Zero(M);
  for (const auto& candidates : per_instance) {
    if (candidates.empty()) throw DataError("validation instance without candidate solutions");
    std::size_t chosen = 0;
    double chosen_cost = weighted_sum(candidates[0], uniform, sense);
    for (std::size_t k = 1; k < candidates.size(); ++k) {
      const double c = weighted_sum(candidates[k], uniform, sense);
      if (pick == ScalePick::best ? c < chosen_cost : c > chosen_cost) {
        chosen = k;
        chosen_cost = c;
      }
    }
    total += candidates[chosen];
  }
  Vector f = total / static_cast<double>(per_instance.size());
  if (!(f.array() > 0.0).all())
    throw NumericError("estimated objective scale is not positive");
  return f;
}

WeightSet scaled_weight_assignment(const WeightSet& weights, const Vector& scale) {
  if (!(scale.array() > 0.0).all()) throw UsageError("objective scales must be positive");
  WeightSet out;
  out.reserve(weights.size());
  for (const auto& w : weights) {
    if (w.size() != scale.size()) throw ShapeError("weight and scale dimensions disagree");
    WeightVector s = w.cwiseQuotient(scale);
    out.push_back(s / s.sum());
  }
  return out;
}

void write_weights_csv(const std::filesystem::path& path, const WeightSet& weights) {
  std::string text;
  if (!weights.empty()) {
    for (Eigen::Index m = 0; m < weights.front().size(); ++m)
      text += (m ? ",lambda" : "lambda") + std::to_string(m + 1);
    text += '\n';
  }
  char buf[32];
  for (const auto& w : weights) {
    for (Eigen::Index m = 0; m < w.size(); ++m) {
      std::snprintf(buf, sizeof buf, "%.17g", w(m));
      if (m) text += ',';
      text += buf;
    }
    text += '\n';
  }
  ad::write_text_file(path, text);
}

WeightSet read_weights_csv(const std::filesystem::path& path) {
  std::istringstream in(ad::read_text_file(path));
  std::string line;
  WeightSet out;
  while (std::getline(in, line)) {
    if (line.empty() || line.rfind("lambda", 0) == 0) continue;
    std::vector<double> values;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DataError("bad weight value '" + cell + "' in " + path.string());
      }
    }
    WeightVector w = Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    if (!on_simplex(w, 1e-9)) throw DataError("weight row '" + line + "' is not on the simplex");
    if (!out.empty() && out.front().size() != w.size()) throw DataError("weight rows have different lengths");
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace emnh::decomp
