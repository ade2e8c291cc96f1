#include "emnh/evaluation/reference.hpp"

#include "emnh/build_info.hpp"

#include <cstdlib>

namespace emnh::eval {

const nlohmann::json& reference_table() {
  static const nlohmann::json table = nlohmann::json::parse(build_info::reference_table_json);
  return table;
}

RefPoints reference_points(const problems::ProblemKind& kind, int n) {
  const nlohmann::json* best = nullptr;
  for (const auto& e : reference_table().at("entries")) {
    if (e.at("problem") != kind.name() || e.at("objectives").get<int>() != kind.M) continue;
    const int size = e.at("size").get<int>();
    if (!best || std::abs(size - n) < std::abs(best->at("size").get<int>() - n)) best = &e;
  }
  if (!best)
    throw UsageError("no bundled reference point for " + kind.name() + " with M=" + std::to_string(kind.M) +
                     "; pass --reference and --ideal");
  RefPoints r;
  const auto ref = best->at("reference").get<std::vector<double>>();
  const auto ideal = best->at("ideal").get<std::vector<double>>();
  r.reference = Eigen::Map<const Vector>(ref.data(), static_cast<Eigen::Index>(ref.size()));
  r.ideal = Eigen::Map<const Vector>(ideal.data(), static_cast<Eigen::Index>(ideal.size()));
  r.table_size = best->at("size").get<int>();
  r.exact_size = r.table_size == n;
  return r;
}

bool box_contains(const RefPoints& ref, const Vector& f, Sense sense) {
  if (sense == Sense::maximize)
    return (f.array() > ref.reference.array()).all() && (f.array() < ref.ideal.array()).all();
  return (f.array() < ref.reference.array()).all() && (f.array() > ref.ideal.array()).all();
}

}  // namespace emnh::eval
