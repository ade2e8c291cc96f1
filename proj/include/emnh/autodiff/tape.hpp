#pragma once

#include "emnh/autodiff/param_store.hpp"

#include <functional>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace emnh::ad {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode recording of a dense computation graph.
///
/// Every primitive evaluates eagerly, checks its result is finite and, when
/// gradients are recorded, stores a closure that propagates the upstream
/// gradient to its inputs. Nodes are appended in evaluation order so a
/// reverse sweep over the node list is a valid topological order.
class Tape {
 public:
  /// Propagates `upstream` (the gradient w.r.t. this node's value) to the inputs.
  using BackwardFn = std::function<void(Tape&, const Tensor& upstream)>;

  explicit Tape(bool record_gradients = true) : record_(record_gradients) {
    scopes_.emplace_back("");
    scope_index_.emplace("", 0);
  }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool records_gradients() const { return record_; }

  /// Leaf without gradient.
  Var constant(Tensor value);

  /// Leaf bound to a stored parameter. Binding the same (store, path) twice
  /// returns the same node so gradients accumulate in one place.
  Var param(const ParamStore& store, const std::string& path);

  /// Appends a node. Throws NumericError naming the node when `value` is not finite.
  Var emplace(const char* op, Tensor value, std::span<const int> inputs, BackwardFn backward);

  const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Tensor& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  /// Id the next emplaced node will receive.
  int next_id() const { return static_cast<int>(nodes_.size()); }

  /// Adds `g` into the gradient of node `id` (no-op for nodes without gradient).
  void accumulate(int id, const Tensor& g);

  /// Reverse sweep from a 1 x 1 loss node.
  void backward(Var loss);

  /// Gradient for every entry of `store`; entries the loss never reached get zeros.
  /// Only parameters bound from this same store object count.
  NamedTensors gradients(const ParamStore& store) const;

  /// "scope.path/op#id" description used in error messages.
  std::string describe(int id) const;
  std::string describe_pending(const char* op) const;

  /// RAII naming scope; nested scopes join with '.'.
  class Scope {
   public:
    Scope(Tape& tape, const std::string& name);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape& tape_;
    int previous_;
  };

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    const char* op;
    int scope;
    bool requires_grad;
  };

  bool record_;
  std::vector<Node> nodes_;
  using ParamKey = std::pair<const ParamStore*, std::string>;
  std::map<ParamKey, int> param_ids_;
  std::vector<std::string> scopes_;
  std::unordered_map<std::string, int> scope_index_;
  int current_scope_ = 0;
};

// Primitives. Shapes are (rows x cols); a "row" operand is 1 x cols.

/// a (r x k) * b (k x c)
Var matmul(Var a, Var b);
/// a (r x k) * b^T where b is (c x k)
Var matmul_nt(Var a, Var b);
/// Elementwise sum. `b` may also be a 1 x cols row broadcast over the rows of `a`.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
/// Elementwise product with a constant tensor of the same shape.
Var hadamard_const(Var a, const Tensor& c);
Var tanh(Var a);
Var relu(Var a);
Var log(Var a);
/// Row-wise softmax of (a + additive_mask). An empty mask means no masking.
Var softmax_rows(Var a, const Tensor& additive_mask = Tensor());
/// Per-column normalization over the rows using the statistics of `x` itself.
Var batch_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
/// 1 x cols mean over rows.
Var mean_rows(Var a);
/// 1 x cols sum over rows.
Var sum_rows(Var a);
/// 1 x 1 sum of all entries.
Var sum(Var a);
/// Repeats a 1 x cols row `rows` times.
Var broadcast_rows(Var a, Eigen::Index rows);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var gather_rows(Var a, std::span<const int> rows);
/// r x 1 column holding a(i, columns[i]).
Var pick(Var a, std::span<const int> columns);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator*(Var a, double s) { return scale(a, s); }

/// Additive surrogate for -infinity used by masked softmax.
inline constexpr double kMaskedLogit = -1e30;

}  // namespace emnh::ad
