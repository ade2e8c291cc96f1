#pragma once

#include "emnh/core/types.hpp"

#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace emnh::ad {

/// Dense tensors are rank-2 Eigen matrices; a vector is a 1 x d row.
using Tensor = Matrix;

enum class Partition { body, head };

std::string_view to_string(Partition p);
Partition partition_from_string(std::string_view s);

/// Gradients, Adam moments and other per-parameter data keyed by path.
/// Ordered so that any iteration over it is deterministic.
using NamedTensors = std::map<std::string, Tensor>;

/// Named parameters in insertion order, each labelled body or head.
class ParamStore {
 public:
  struct Entry {
    std::string path;
    Partition partition;
    Tensor value;
  };

  void add(std::string path, Partition partition, Tensor value);

  bool contains(std::string_view path) const;
  const Tensor& at(std::string_view path) const;
  Tensor& at(std::string_view path);
  Partition partition(std::string_view path) const;

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t parameter_count() const;

  /// Copy of the entries in one partition, preserving order.
  ParamStore subset(Partition p) const;

  /// Zero tensor for every entry.
  NamedTensors zeros_like() const;

  /// Exact (bitwise) equality of paths, partitions, shapes and values.
  friend bool operator==(const ParamStore& a, const ParamStore& b);

 private:
  const Entry& find(std::string_view path) const;

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

bool bitwise_equal(const Tensor& a, const Tensor& b);

}  // namespace emnh::ad
