#include "emnh/autodiff/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace emnh::ad {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

static_assert(std::endian::native == std::endian::little, "checkpoint encoding assumes a little-endian host");

nlohmann::json entry_json(const std::string& path, const Tensor& t) {
  return {{"path", path}, {"shape", {t.rows(), t.cols()}}, {"values", encode_tensor_values(t)}};
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i < bytes.size()) {
    std::uint32_t v = bytes[i] << 16;
    if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += i + 1 < bytes.size() ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::array<int, 256> lookup;
  lookup.fill(-1);
  for (int i = 0; i < 64; ++i) lookup[static_cast<unsigned char>(kAlphabet[i])] = i;
  if (text.size() % 4 != 0) throw DataError("base64 text length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::uint32_t v = 0;
    int pad = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=') {
        if (i + 4 != text.size() || k < 2) throw DataError("misplaced base64 padding");
        ++pad;
        v <<= 6;
        continue;
      }
      if (pad) throw DataError("misplaced base64 padding");
      const int d = lookup[static_cast<unsigned char>(c)];
      if (d < 0) throw DataError("invalid base64 character");
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::string encode_tensor_values(const Tensor& t) {
  // row-major flattening
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(t.size()) * sizeof(double));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < t.rows(); ++r)
    for (Eigen::Index c = 0; c < t.cols(); ++c, ++k) std::memcpy(&bytes[k * sizeof(double)], &t(r, c), sizeof(double));
  return base64_encode(bytes);
}

Tensor decode_tensor_values(std::string_view text, Eigen::Index rows, Eigen::Index cols) {
  const auto bytes = base64_decode(text);
  if (bytes.size() != static_cast<std::size_t>(rows * cols) * sizeof(double))
    throw DataError("tensor payload size does not match its shape");
  Tensor t(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c, ++k) std::memcpy(&t(r, c), &bytes[k * sizeof(double)], sizeof(double));
  return t;
}

nlohmann::json to_json(const Checkpoint& c) {
  nlohmann::json j;
  j["format_version"] = c.format_version;
  j["problem_kind"] = c.problem_kind;
  j["hyperparameters"] = c.hyperparameters;
  j["metadata"] = c.metadata;
  auto& params = j["parameters"] = nlohmann::json::array();
  for (const auto& e : c.parameters.entries()) {
    auto item = entry_json(e.path, e.value);
    item["partition"] = std::string(to_string(e.partition));
    params.push_back(std::move(item));
  }
  if (c.adam_state) {
    const auto& s = *c.adam_state;
    nlohmann::json a;
    a["step"] = s.step;
    a["learning_rate"] = s.config.learning_rate;
    a["beta1"] = s.config.beta1;
    a["beta2"] = s.config.beta2;
    a["epsilon"] = s.config.epsilon;
    a["first_moment"] = nlohmann::json::array();
    a["second_moment"] = nlohmann::json::array();
    for (const auto& [p, t] : s.first_moment) a["first_moment"].push_back(entry_json(p, t));
    for (const auto& [p, t] : s.second_moment) a["second_moment"].push_back(entry_json(p, t));
    j["adam_state"] = std::move(a);
  }
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    Checkpoint c;
    c.format_version = j.at("format_version").get<int>();
    if (c.format_version != kCheckpointFormatVersion)
      throw DataError("unsupported checkpoint format_version " + std::to_string(c.format_version));
    c.problem_kind = j.at("problem_kind").get<std::string>();
    c.hyperparameters = j.value("hyperparameters", nlohmann::json::object());
    c.metadata = j.value("metadata", nlohmann::json::object());
    auto decode = [](const nlohmann::json& item) {
      const auto shape = item.at("shape").get<std::vector<Eigen::Index>>();
      if (shape.size() != 2 || shape[0] <= 0 || shape[1] <= 0) throw DataError("tensor shape must be two positive integers");
      return decode_tensor_values(item.at("values").get<std::string>(), shape[0], shape[1]);
    };
    for (const auto& item : j.at("parameters"))
      c.parameters.add(item.at("path").get<std::string>(),
                       partition_from_string(item.at("partition").get<std::string>()), decode(item));
    if (j.contains("adam_state") && !j["adam_state"].is_null()) {
      const auto& a = j["adam_state"];
      AdamConfig cfg{a.at("learning_rate").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
                     a.at("epsilon").get<double>()};
      AdamState s(cfg);
      s.step = a.at("step").get<std::int64_t>();
      for (const auto& item : a.at("first_moment")) s.first_moment.emplace(item.at("path").get<std::string>(), decode(item));
      for (const auto& item : a.at("second_moment")) s.second_moment.emplace(item.at("path").get<std::string>(), decode(item));
      c.adam_state = std::move(s);
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << text;
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_text_file(path, to_json(c).dump(1) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return checkpoint_from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace emnh::ad
