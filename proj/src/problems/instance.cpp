#include "emnh/problems/instance.hpp"

#include "emnh/autodiff/checkpoint.hpp"
#include "emnh/core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace emnh::problems {

int ProblemKind::feature_dim() const {
  switch (family) {
    case Family::motsp1: return 2 * M;
    case Family::motsp2: return 2 * M - 1;
    case Family::mocvrp: return 3;
    case Family::mokp: return M + 1;
  }
  return 0;
}

int ProblemKind::coordinate_pairs() const {
  switch (family) {
    case Family::motsp1: return M;
    case Family::motsp2: return M - 1;
    case Family::mocvrp: return 1;
    case Family::mokp: return 0;
  }
  return 0;
}

std::string ProblemKind::name() const {
  switch (family) {
    case Family::motsp1: return "motsp1";
    case Family::motsp2: return "motsp2";
    case Family::mocvrp: return "mocvrp";
    case Family::mokp: return "mokp";
  }
  return "?";
}

void validate(const ProblemKind& kind) {
  if (kind.M < 2) throw UsageError("number of objectives must be at least 2, got " + std::to_string(kind.M));
  if (kind.family == Family::mocvrp && kind.M != 2) throw UsageError("mocvrp has exactly 2 objectives");
}

ProblemKind parse_kind(const std::string& family, int M) {
  ProblemKind k;
  if (family == "motsp1") k.family = Family::motsp1;
  else if (family == "motsp2") k.family = Family::motsp2;
  else if (family == "mocvrp") k.family = Family::mocvrp;
  else if (family == "mokp") k.family = Family::mokp;
  else throw UsageError("unknown problem '" + family + "' (expected motsp1, motsp2, mocvrp or mokp)");
  k.M = M;
  validate(k);
  return k;
}

namespace {

struct SizeEntry {
  int n;
  double value;
};

double nearest(const std::vector<SizeEntry>& table, int n) {
  const SizeEntry* best = &table.front();
  for (const auto& e : table)
    if (std::abs(e.n - n) < std::abs(best->n - n)) best = &e;
  return best->value;
}

const std::vector<SizeEntry> kCvrpCapacity = {{20, 30.0}, {50, 40.0}, {100, 50.0}};
const std::vector<SizeEntry> kKnapsackCapacity = {{50, 12.5}, {100, 25.0}, {200, 25.0}};

}  // namespace

double default_capacity(const ProblemKind& kind, int n) {
  switch (kind.family) {
    case Family::mocvrp: return nearest(kCvrpCapacity, n);
    case Family::mokp:
      if (n < 50 || n > 200)
        throw UsageError("no default knapsack capacity for n=" + std::to_string(n) +
                         " (listed sizes span 50..200); pass --capacity");
      return nearest(kKnapsackCapacity, n);
    default: return 0.0;
  }
}

Instance generate_instance(const ProblemKind& kind, int n, std::uint64_t seed, std::optional<double> capacity) {
  validate(kind);
  if (n < 2) throw UsageError("instance size must be at least 2, got " + std::to_string(n));
  Instance inst;
  inst.kind = kind;
  inst.n = n;
  inst.seed = seed;
  Rng rng(seed);
  const int F = kind.feature_dim();
  inst.features.resize(n, F);

  if (kind.family == Family::mocvrp) {
    const double D = capacity ? *capacity : default_capacity(kind, n);
    if (!(D >= 9.0)) throw UsageError("mocvrp capacity must be at least the largest demand (9)");
    inst.depot.resize(2);
    inst.depot << rng.uniform(), rng.uniform();
    for (int i = 0; i < n; ++i) {
      inst.features(i, 0) = rng.uniform();
      inst.features(i, 1) = rng.uniform();
      inst.features(i, 2) = static_cast<double>(1 + rng.below(9)) / D;
    }
    inst.capacity = 1.0;
    inst.metadata["demand_scale"] = D;
    inst.metadata["capacity_source"] = capacity ? "override" : "nearest listed size";
    return inst;
  }

  for (int i = 0; i < n; ++i)
    for (int f = 0; f < F; ++f) inst.features(i, f) = rng.uniform();
  if (kind.family == Family::mokp) {
    const double W = capacity ? *capacity : default_capacity(kind, n);
    if (!(W > 0.0)) throw UsageError("knapsack capacity must be positive");
    inst.capacity = W;
    inst.metadata["capacity_source"] = capacity ? "override" : "nearest listed size";
  }
  return inst;
}

std::vector<Instance> generate_instances(const ProblemKind& kind, int n, std::uint64_t seed, int count,
                                         std::optional<double> capacity) {
  std::vector<Instance> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i)
    out.push_back(generate_instance(kind, n, derive_seed(seed, {static_cast<std::uint64_t>(i)}), capacity));
  return out;
}

nlohmann::json to_json(const Instance& inst) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < inst.features.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index f = 0; f < inst.features.cols(); ++f) row.push_back(inst.features(i, f));
    rows.push_back(std::move(row));
  }
  nlohmann::json j = {{"kind", inst.kind.name()},
                      {"M", inst.kind.M},
                      {"n", inst.n},
                      {"features", std::move(rows)},
                      {"capacity", inst.capacity},
                      {"seed", inst.seed}};
  if (inst.depot.size() > 0) j["depot"] = {inst.depot(0), inst.depot(1)};
  if (!inst.metadata.empty()) j["metadata"] = inst.metadata;
  return j;
}

Instance instance_from_json(const nlohmann::json& j) {
  try {
    Instance inst;
    inst.kind = parse_kind(j.at("kind").get<std::string>(), j.at("M").get<int>());
    inst.n = j.at("n").get<int>();
    inst.capacity = j.value("capacity", 0.0);
    inst.seed = j.value("seed", std::uint64_t{0});
    const auto& rows = j.at("features");
    const int F = inst.kind.feature_dim();
    if (static_cast<int>(rows.size()) != inst.n)
      throw DataError("instance has " + std::to_string(rows.size()) + " feature rows, expected n=" +
                      std::to_string(inst.n));
    inst.features.resize(inst.n, F);
    for (int i = 0; i < inst.n; ++i) {
      const auto& row = rows.at(static_cast<std::size_t>(i));
      if (static_cast<int>(row.size()) != F)
        throw DataError("feature row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                        " entries, expected " + std::to_string(F));
      for (int f = 0; f < F; ++f) inst.features(i, f) = row.at(static_cast<std::size_t>(f)).get<double>();
    }
    if (inst.kind.family == Family::mocvrp) {
      const auto& d = j.at("depot");
      inst.depot.resize(2);
      inst.depot << d.at(0).get<double>(), d.at(1).get<double>();
      if (inst.capacity <= 0.0) inst.capacity = 1.0;
    }
    if (inst.kind.family == Family::mokp && !(inst.capacity > 0.0))
      throw DataError("knapsack instance needs a positive capacity");
    if (j.contains("metadata")) inst.metadata = j.at("metadata");
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed instance: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("malformed instance: ") + e.what());
  }
}

std::vector<Instance> load_instances(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ad::read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("cannot parse " + path.string() + ": " + e.what());
  }
  std::vector<Instance> out;
  if (j.is_array())
    for (const auto& e : j) out.push_back(instance_from_json(e));
  else
    out.push_back(instance_from_json(j));
  return out;
}

void save_instances(const std::filesystem::path& path, const std::vector<Instance>& instances) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& inst : instances) j.push_back(to_json(inst));
  ad::write_text_file(path, j.dump(1) + "\n");
}

namespace {

struct TsplibCoords {
  int dimension = -1;
  std::vector<std::pair<double, double>> xy;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

TsplibCoords parse_one(const std::string& text, std::size_t file_index) {
  const std::string where = "TSPLIB file " + std::to_string(file_index + 1);
  TsplibCoords out;
  std::istringstream in(text);
  std::string line;
  bool coords = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line == "EOF") break;
    if (!coords) {
      if (line.rfind("NODE_COORD_SECTION", 0) == 0) {
        coords = true;
        continue;
      }
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = trim(line.substr(0, colon));
      const std::string value = trim(line.substr(colon + 1));
      if (key == "DIMENSION") out.dimension = std::atoi(value.c_str());
      if (key == "EDGE_WEIGHT_TYPE" && value != "EUC_2D")
        throw DataError(where + ": unsupported EDGE_WEIGHT_TYPE " + value + " (only EUC_2D)");
      continue;
    }
    std::istringstream row(line);
    long id;
    double x, y;
    if (!(row >> id >> x >> y)) throw DataError(where + ": bad coordinate line '" + line + "'");
    out.xy.emplace_back(x, y);
  }
  if (!coords) throw DataError(where + ": missing NODE_COORD_SECTION");
  if (out.dimension < 0) out.dimension = static_cast<int>(out.xy.size());
  if (static_cast<int>(out.xy.size()) != out.dimension)
    throw DataError(where + ": DIMENSION " + std::to_string(out.dimension) + " but " +
                    std::to_string(out.xy.size()) + " coordinates");
  return out;
}

}  // namespace

Instance parse_tsplib_text(const std::vector<std::string>& contents) {
  if (contents.size() < 2 || contents.size() > 3) throw UsageError("TSPLIB ingestion needs two or three files");
  std::vector<TsplibCoords> files;
  for (std::size_t i = 0; i < contents.size(); ++i) files.push_back(parse_one(contents[i], i));
  const int n = files.front().dimension;
  for (std::size_t i = 1; i < files.size(); ++i)
    if (files[i].dimension != n)
      throw DataError("TSPLIB dimension mismatch: " + std::to_string(n) + " vs " +
                      std::to_string(files[i].dimension));
  if (n < 2) throw DataError("TSPLIB instance needs at least 2 nodes");
  double scale = 0.0;
  for (const auto& f : files)
    for (const auto& [x, y] : f.xy) {
      if (x < 0.0 || y < 0.0) throw DataError("TSPLIB coordinates must be nonnegative");
      scale = std::max({scale, x, y});
    }
  if (!(scale > 0.0)) throw DataError("TSPLIB coordinates are all zero");

  Instance inst;
  inst.kind = ProblemKind{Family::motsp1, static_cast<int>(files.size())};
  inst.n = n;
  inst.features.resize(n, 2 * inst.kind.M);
  for (std::size_t m = 0; m < files.size(); ++m)
    for (int i = 0; i < n; ++i) {
      inst.features(i, static_cast<Eigen::Index>(2 * m)) = files[m].xy[static_cast<std::size_t>(i)].first / scale;
      inst.features(i, static_cast<Eigen::Index>(2 * m + 1)) =
          files[m].xy[static_cast<std::size_t>(i)].second / scale;
    }
  inst.metadata["coordinate_scale"] = scale;
  return inst;
}

Instance parse_tsplib(const std::vector<std::filesystem::path>& files) {
  std::vector<std::string> contents;
  for (const auto& f : files) contents.push_back(ad::read_text_file(f));
  Instance inst = parse_tsplib_text(contents);
  nlohmann::json names = nlohmann::json::array();
  for (const auto& f : files) names.push_back(f.filename().string());
  inst.metadata["source_files"] = names;
  return inst;
}

}  // namespace emnh::problems
