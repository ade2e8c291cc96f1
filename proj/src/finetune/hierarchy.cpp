#include "emnh/finetune/hierarchy.hpp"

namespace emnh::finetune {

int sections(int M) {
  if (M == 2) return 2;
  if (M == 3) return 4;
  throw UsageError("hierarchical fine-tuning supports M=2 or M=3, got M=" + std::to_string(M));
}

int default_levels(int M, int N) {
  if (N < 1) throw UsageError("at least one final weight is required");
  const long a = sections(M);
  int L = 1;
  for (long p = a; p < N; p *= a) ++L;
  return L;
}

namespace {

Subspace make(const Matrix& vertices) {
  Subspace s;
  s.vertices = vertices;
  s.center = vertices.rowwise().mean();
  return s;
}

std::vector<Subspace> level_subspaces(int M, int l) {
  const int H = 1 << l;
  const double h = 1.0 / H;
  std::vector<Subspace> out;
  if (M == 2) {
    for (int j = 0; j < H; ++j) {
      Matrix v(2, 2);
      v << j * h, (j + 1) * h, 1.0 - j * h, 1.0 - (j + 1) * h;
      out.push_back(make(v));
    }
    return out;
  }
  auto corner = [&](int i, int j, int k) {
    Vector p(3);
    p << i * h, j * h, k * h;
    return p;
  };
  // upward triangles, then the inverted ones
  for (int i = 0; i < H; ++i)
    for (int j = 0; i + j < H; ++j) {
      const int k = H - 1 - i - j;
      Matrix v(3, 3);
      v.col(0) = corner(i + 1, j, k);
      v.col(1) = corner(i, j + 1, k);
      v.col(2) = corner(i, j, k + 1);
      out.push_back(make(v));
    }
  for (int i = 0; i + 1 < H; ++i)
    for (int j = 0; i + j + 1 < H; ++j) {
      const int k = H - 2 - i - j;
      Matrix v(3, 3);
      v.col(0) = corner(i, j + 1, k + 1);
      v.col(1) = corner(i + 1, j, k + 1);
      v.col(2) = corner(i + 1, j + 1, k);
      out.push_back(make(v));
    }
  return out;
}

int containing(const std::vector<Subspace>& level, const decomp::WeightVector& lambda) {
  for (std::size_t i = 0; i < level.size(); ++i)
    if (contains(level[i], lambda, 1e-12)) return static_cast<int>(i);
  throw DataError("weight is not inside any subspace");
}

}  // namespace

bool contains(const Subspace& s, const decomp::WeightVector& lambda, double tol) {
  if (s.vertices.size() == 0) return false;
  if (s.vertices.rows() == 2) {
    const double lo = std::min(s.vertices(0, 0), s.vertices(0, 1)), hi = std::max(s.vertices(0, 0), s.vertices(0, 1));
    return lambda(0) >= lo - tol && lambda(0) <= hi + tol;
  }
  const Vector alpha = s.vertices.partialPivLu().solve(lambda);
  return (alpha.array() >= -tol).all();
}

Hierarchy build_hierarchy(int M, const decomp::WeightSet& final_weights, int levels) {
  Hierarchy h;
  h.M = M;
  h.a = sections(M);
  if (final_weights.empty()) throw UsageError("at least one final weight is required");
  for (const auto& w : final_weights)
    if (w.size() != M || !decomp::on_simplex(w, 1e-9)) throw DataError("final weight is not on the simplex");
  const int L = levels > 0 ? levels : default_levels(M, static_cast<int>(final_weights.size()));
  if (L > 12) throw UsageError("hierarchy depth " + std::to_string(L) + " is too large");
  for (int l = 1; l < L; ++l) {
    auto level = level_subspaces(M, l);
    if (l > 1)
      for (auto& s : level) s.parent = containing(h.levels.back(), s.center);
    h.levels.push_back(std::move(level));
  }
  std::vector<Subspace> last;
  for (const auto& w : final_weights) {
    Subspace s;
    s.center = w;
    s.parent = L > 1 ? containing(h.levels.back(), w) : -1;
    last.push_back(std::move(s));
  }
  h.levels.push_back(std::move(last));
  return h;
}

nlohmann::json lineage_json(const Hierarchy& h) {
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& level : h.levels) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& s : level)
      nodes.push_back({{"center", std::vector<double>(s.center.data(), s.center.data() + s.center.size())},
                       {"parent", s.parent}});
    levels.push_back(std::move(nodes));
  }
  return {{"M", h.M}, {"a", h.a}, {"L", h.L()}, {"levels", levels}};
}

}  // namespace emnh::finetune
