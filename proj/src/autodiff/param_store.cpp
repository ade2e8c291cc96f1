#include "emnh/autodiff/param_store.hpp"

#include <cstring>

namespace emnh::ad {

std::string_view to_string(Partition p) { return p == Partition::head ? "head" : "body"; }

Partition partition_from_string(std::string_view s) {
  if (s == "head") return Partition::head;
  if (s == "body") return Partition::body;
  throw DataError("unknown parameter partition '" + std::string(s) + "'");
}

void ParamStore::add(std::string path, Partition partition, Tensor value) {
  if (index_.count(path)) throw DataError("duplicate parameter path '" + path + "'");
  if (!value.allFinite()) throw NumericError("parameter '" + path + "' has non-finite values");
  index_.emplace(path, entries_.size());
  entries_.push_back({std::move(path), partition, std::move(value)});
}

bool ParamStore::contains(std::string_view path) const {
  return index_.find(std::string(path)) != index_.end();
}

const ParamStore::Entry& ParamStore::find(std::string_view path) const {
  auto it = index_.find(std::string(path));
  if (it == index_.end()) throw DataError("unknown parameter '" + std::string(path) + "'");
  return entries_[it->second];
}

const Tensor& ParamStore::at(std::string_view path) const { return find(path).value; }

Tensor& ParamStore::at(std::string_view path) { return const_cast<Entry&>(find(path)).value; }

Partition ParamStore::partition(std::string_view path) const { return find(path).partition; }

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
  return n;
}

ParamStore ParamStore::subset(Partition p) const {
  ParamStore out;
  for (const auto& e : entries_)
    if (e.partition == p) out.add(e.path, e.partition, e.value);
  return out;
}

NamedTensors ParamStore::zeros_like() const {
  NamedTensors out;
  for (const auto& e : entries_) out.emplace(e.path, Tensor::Zero(e.value.rows(), e.value.cols()));
  return out;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return a.size() == 0 ||
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    const auto& x = a.entries_[i];
    const auto& y = b.entries_[i];
    if (x.path != y.path || x.partition != y.partition || !bitwise_equal(x.value, y.value))
      return false;
  }
  return true;
}

}  // namespace emnh::ad
