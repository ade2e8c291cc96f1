#pragma once

#include "emnh/autodiff/adam.hpp"
#include "emnh/autodiff/param_store.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace emnh::ad {

inline constexpr int kCheckpointFormatVersion = 1;

/// On-disk model state: parameters as base64 of little-endian f64 values plus
/// free-form hyperparameters and metadata.
struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  std::string problem_kind;
  nlohmann::json hyperparameters = nlohmann::json::object();
  ParamStore parameters;
  std::optional<AdamState> adam_state;
  /// Provenance (version, config hash, seed) and resumable training state.
  nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string encode_tensor_values(const Tensor& t);
Tensor decode_tensor_values(std::string_view text, Eigen::Index rows, Eigen::Index cols);

/// Writes `text` to `path` through a temporary file and rename.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace emnh::ad
