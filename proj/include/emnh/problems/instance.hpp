#pragma once

#include "emnh/core/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace emnh::problems {

enum class Family { motsp1, motsp2, mocvrp, mokp };

struct ProblemKind {
  Family family = Family::motsp1;
  int M = 2;

  Sense sense() const { return family == Family::mokp ? Sense::maximize : Sense::minimize; }
  /// Columns of Instance::features.
  int feature_dim() const;
  /// Coordinate pairs that carry Euclidean costs (routing only).
  int coordinate_pairs() const;
  bool routing() const { return family != Family::mokp; }
  /// "motsp1", "motsp2", "mocvrp" or "mokp".
  std::string name() const;

  friend bool operator==(const ProblemKind&, const ProblemKind&) = default;
};

/// Parses a family name; M defaults to 2. Throws UsageError.
ProblemKind parse_kind(const std::string& family, int M = 2);
/// Checks family/M consistency. Throws UsageError.
void validate(const ProblemKind& kind);

/// One problem instance.
///
/// Feature layouts (one row per node or item):
///  - motsp1: M coordinate pairs (x^1, y^1, ..., x^M, y^M)
///  - motsp2: M-1 coordinate pairs followed by the altitude
///  - mocvrp: customer (x, y, normalized demand); the depot is stored separately
///  - mokp:   M values followed by the weight
struct Instance {
  ProblemKind kind;
  int n = 0;
  Matrix features;
  /// mocvrp depot coordinates (1 x 2); empty otherwise.
  RowVector depot;
  /// 1.0 for mocvrp, W for mokp, unused for motsp.
  double capacity = 0.0;
  std::uint64_t seed = 0;
  /// Provenance such as the capacity source or TSPLIB scale.
  nlohmann::json metadata = nlohmann::json::object();

  /// Size of the action space: n, or n + 1 for mocvrp where action 0 is the depot.
  int action_count() const { return kind.family == Family::mocvrp ? n + 1 : n; }
};

/// Capacity used when none is given: mocvrp D by nearest listed size
/// (20/50/100), mokp W for n in [50, 200] by nearest listed size.
/// Throws UsageError when no default exists.
double default_capacity(const ProblemKind& kind, int n);

/// Samples an instance from the kind's training distribution. For mocvrp
/// `capacity` overrides D; for mokp it overrides W.
Instance generate_instance(const ProblemKind& kind, int n, std::uint64_t seed,
                           std::optional<double> capacity = std::nullopt);

/// `count` instances with seeds derived from `seed`.
std::vector<Instance> generate_instances(const ProblemKind& kind, int n, std::uint64_t seed, int count,
                                         std::optional<double> capacity = std::nullopt);

nlohmann::json to_json(const Instance& instance);
Instance instance_from_json(const nlohmann::json& j);

/// Reads one instance or an array of instances.
std::vector<Instance> load_instances(const std::filesystem::path& path);
void save_instances(const std::filesystem::path& path, const std::vector<Instance>& instances);

/// motsp1 instance from two or three TSPLIB EUC_2D files of equal dimension.
/// Coordinates are divided by the largest coordinate over all files; the
/// divisor is recorded in metadata["coordinate_scale"].
Instance parse_tsplib(const std::vector<std::filesystem::path>& files);
Instance parse_tsplib_text(const std::vector<std::string>& contents);

}  // namespace emnh::problems
