#include "emnh/autodiff/tape.hpp"

#include <cmath>
#include <sstream>

namespace emnh::ad {

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) { return emplace("constant", std::move(value), {}, nullptr); }

Var Tape::param(const ParamStore& store, const std::string& path) {
  ParamKey key{&store, path};
  if (auto it = param_ids_.find(key); it != param_ids_.end()) return {this, it->second};
  Var v = emplace("param", store.at(path), {}, nullptr);
  nodes_.back().requires_grad = record_;
  param_ids_.emplace(std::move(key), v.id);
  return v;
}

Var Tape::emplace(const char* op, Tensor value, std::span<const int> inputs, BackwardFn backward) {
  if (!value.allFinite())
    throw NumericError("non-finite value produced at " + describe_pending(op));
  bool needs = false;
  if (record_)
    for (int i : inputs) needs = needs || nodes_[static_cast<std::size_t>(i)].requires_grad;
  nodes_.push_back(
      {std::move(value), Tensor(), needs ? std::move(backward) : BackwardFn(), op, current_scope_, needs});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(int id, const Tensor& g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw UsageError("loss node belongs to a different tape");
  const Tensor& lv = value(loss.id);
  if (lv.rows() != 1 || lv.cols() != 1)
    throw ShapeError("loss must be scalar (1 x 1), got " + std::to_string(lv.rows()) + " x " +
                     std::to_string(lv.cols()) + " at " + describe(loss.id));
  if (!record_) throw UsageError("tape was created without gradient recording");
  accumulate(loss.id, Tensor::Ones(1, 1));
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this, n.grad);
  }
}

NamedTensors Tape::gradients(const ParamStore& store) const {
  NamedTensors out;
  for (const auto& e : store.entries()) {
    auto it = param_ids_.find(ParamKey{&store, e.path});
    if (it != param_ids_.end() && grad(it->second).size() != 0)
      out.emplace(e.path, grad(it->second));
    else
      out.emplace(e.path, Tensor::Zero(e.value.rows(), e.value.cols()));
  }
  return out;
}

std::string Tape::describe(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  std::ostringstream os;
  const std::string& s = scopes_[static_cast<std::size_t>(n.scope)];
  os << (s.empty() ? "" : s + "/") << n.op << "#" << id;
  return os.str();
}

std::string Tape::describe_pending(const char* op) const {
  std::ostringstream os;
  const std::string& s = scopes_[static_cast<std::size_t>(current_scope_)];
  os << (s.empty() ? "" : s + "/") << op << "#" << nodes_.size();
  return os.str();
}

Tape::Scope::Scope(Tape& tape, const std::string& name) : tape_(tape), previous_(tape.current_scope_) {
  const std::string& parent = tape.scopes_[static_cast<std::size_t>(previous_)];
  std::string full = parent.empty() ? name : parent + "." + name;
  auto it = tape.scope_index_.find(full);
  if (it == tape.scope_index_.end()) {
    tape.scopes_.push_back(full);
    it = tape.scope_index_.emplace(std::move(full), static_cast<int>(tape.scopes_.size()) - 1).first;
  }
  tape.current_scope_ = it->second;
}

Tape::Scope::~Scope() { tape_.current_scope_ = previous_; }

namespace {

Tape& same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw UsageError("operands recorded on different tapes");
  return *a.tape;
}

std::string shape_str(const Tensor& t) {
  return "(" + std::to_string(t.rows()) + " x " + std::to_string(t.cols()) + ")";
}

[[noreturn]] void shape_fail(Tape& t, const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError("shape mismatch at " + t.describe_pending(op) + ": " + shape_str(a) + " vs " +
                   shape_str(b));
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) shape_fail(t, "matmul", av, bv);
  const int ids[] = {a.id, b.id};
  return t.emplace("matmul", av * bv, ids, [ia = a.id, ib = b.id](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
    if (tp.requires_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.cols()) shape_fail(t, "matmul_nt", av, bv);
  const int ids[] = {a.id, b.id};
  return t.emplace("matmul_nt", av * bv.transpose(), ids,
                   [ia = a.id, ib = b.id](Tape& tp, const Tensor& g) {
                     if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib));
                     if (tp.requires_grad(ib)) tp.accumulate(ib, g.transpose() * tp.value(ia));
                   });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const int ids[] = {a.id, b.id};
  if (av.rows() == bv.rows() && av.cols() == bv.cols()) {
    return t.emplace("add", av + bv, ids, [ia = a.id, ib = b.id](Tape& tp, const Tensor& g) {
      tp.accumulate(ia, g);
      tp.accumulate(ib, g);
    });
  }
  if (bv.rows() == 1 && bv.cols() == av.cols()) {
    Tensor out = av.rowwise() + bv.row(0);
    return t.emplace("add_row", std::move(out), ids, [ia = a.id, ib = b.id](Tape& tp, const Tensor& g) {
      tp.accumulate(ia, g);
      if (tp.requires_grad(ib)) tp.accumulate(ib, g.colwise().sum());
    });
  }
  shape_fail(t, "add", av, bv);
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) shape_fail(t, "sub", av, bv);
  const int ids[] = {a.id, b.id};
  return t.emplace("sub", av - bv, ids, [ia = a.id, ib = b.id](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g);
    if (tp.requires_grad(ib)) tp.accumulate(ib, -g);
  });
}

Var scale(Var a, double s) {
  const int ids[] = {a.id};
  return a.tape->emplace("scale", s * a.value(), ids,
                         [ia = a.id, s](Tape& tp, const Tensor& g) { tp.accumulate(ia, s * g); });
}

Var hadamard_const(Var a, const Tensor& c) {
  Tape& t = *a.tape;
  if (a.rows() != c.rows() || a.cols() != c.cols()) shape_fail(t, "hadamard_const", a.value(), c);
  const int ids[] = {a.id};
  return t.emplace("hadamard_const", a.value().cwiseProduct(c), ids,
                   [ia = a.id, c](Tape& tp, const Tensor& g) { tp.accumulate(ia, g.cwiseProduct(c)); });
}

Var tanh(Var a) {
  Tape& t = *a.tape;
  const int ids[] = {a.id};
  const int self = t.next_id();
  return t.emplace("tanh", a.value().array().tanh().matrix(), ids,
                   [ia = a.id, self](Tape& tp, const Tensor& g) {
                     const Tensor& y = tp.value(self);
                     tp.accumulate(ia, g.cwiseProduct((1.0 - y.array().square()).matrix()));
                   });
}

Var relu(Var a) {
  const int ids[] = {a.id};
  return a.tape->emplace("relu", a.value().cwiseMax(0.0), ids, [ia = a.id](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value(ia);
    tp.accumulate(ia, (x.array() > 0.0).select(g.array(), 0.0).matrix());
  });
}

Var log(Var a) {
  Tape& t = *a.tape;
  if ((a.value().array() <= 0.0).any())
    throw NumericError("log of non-positive value at " + t.describe_pending("log"));
  const int ids[] = {a.id};
  return t.emplace("log", a.value().array().log().matrix(), ids, [ia = a.id](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g.cwiseQuotient(tp.value(ia)));
  });
}

Var softmax_rows(Var a, const Tensor& additive_mask) {
  Tape& t = *a.tape;
  Tensor z = a.value();
  if (additive_mask.size() != 0) {
    if (additive_mask.rows() != z.rows() || additive_mask.cols() != z.cols())
      shape_fail(t, "softmax_rows", z, additive_mask);
    z += additive_mask;
  }
  Tensor y(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    y.row(r) = (z.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  const int ids[] = {a.id};
  const int self = t.next_id();
  return t.emplace("softmax_rows", std::move(y), ids, [ia = a.id, self](Tape& tp, const Tensor& g) {
    const Tensor& y = tp.value(self);
    Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
    Tensor dx = y.cwiseProduct((g.colwise() - dot));
    tp.accumulate(ia, dx);
  });
}

Var batch_norm(Var x, Var gamma, Var beta, double eps) {
  Tape& t = same_tape(x, gamma);
  same_tape(x, beta);
  const Tensor& xv = x.value();
  const Eigen::Index n = xv.rows();
  if (gamma.rows() != 1 || gamma.cols() != xv.cols()) shape_fail(t, "batch_norm", xv, gamma.value());
  if (beta.rows() != 1 || beta.cols() != xv.cols()) shape_fail(t, "batch_norm", xv, beta.value());
  RowVector mean = xv.colwise().mean();
  Tensor centered = xv.rowwise() - mean;
  RowVector var = centered.array().square().colwise().mean().matrix();
  RowVector inv_std = (var.array() + eps).rsqrt().matrix();
  Tensor xhat = centered.array().rowwise() * inv_std.array();
  Tensor out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
               beta.value().row(0).array();
  const int ids[] = {x.id, gamma.id, beta.id};
  return t.emplace("batch_norm", std::move(out), ids,
                   [ix = x.id, ig = gamma.id, ib = beta.id, xhat = std::move(xhat),
                    inv_std = std::move(inv_std), n](Tape& tp, const Tensor& g) {
                     if (tp.requires_grad(ig)) tp.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
                     if (tp.requires_grad(ib)) tp.accumulate(ib, g.colwise().sum());
                     if (tp.requires_grad(ix)) {
                       const auto gam = tp.value(ig).row(0).array();
                       Tensor dxhat = g.array().rowwise() * gam;
                       RowVector s1 = dxhat.colwise().sum();
                       RowVector s2 = dxhat.cwiseProduct(xhat).colwise().sum();
                       Tensor dx = (static_cast<double>(n) * dxhat).rowwise() - s1;
                       dx -= (xhat.array().rowwise() * s2.array()).matrix();
                       dx = (dx.array().rowwise() * (inv_std.array() / static_cast<double>(n))).matrix();
                       tp.accumulate(ix, dx);
                     }
                   });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw UsageError("concat_cols of no tensors");
  Tape& t = *parts[0].tape;
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> widths;
  for (const Var& p : parts) {
    same_tape(parts[0], p);
    if (p.rows() != rows) shape_fail(t, "concat_cols", parts[0].value(), p.value());
    ids.push_back(p.id);
    widths.push_back(p.cols());
    cols += p.cols();
  }
  Tensor out(rows, cols);
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return t.emplace("concat_cols", std::move(out), ids, [ids, widths](Tape& tp, const Tensor& g) {
    Eigen::Index c = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (tp.requires_grad(ids[i])) tp.accumulate(ids[i], g.middleCols(c, widths[i]));
      c += widths[i];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw UsageError("concat_rows of no tensors");
  Tape& t = *parts[0].tape;
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> heights;
  for (const Var& p : parts) {
    same_tape(parts[0], p);
    if (p.cols() != cols) shape_fail(t, "concat_rows", parts[0].value(), p.value());
    ids.push_back(p.id);
    heights.push_back(p.rows());
    rows += p.rows();
  }
  Tensor out(rows, cols);
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return t.emplace("concat_rows", std::move(out), ids, [ids, heights](Tape& tp, const Tensor& g) {
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (tp.requires_grad(ids[i])) tp.accumulate(ids[i], g.middleRows(r, heights[i]));
      r += heights[i];
    }
  });
}

Var mean_rows(Var a) {
  const int ids[] = {a.id};
  const Eigen::Index n = a.rows();
  return a.tape->emplace("mean_rows", a.value().colwise().mean(), ids,
                         [ia = a.id, n](Tape& tp, const Tensor& g) {
                           tp.accumulate(ia, g.replicate(n, 1) / static_cast<double>(n));
                         });
}

Var sum_rows(Var a) {
  const int ids[] = {a.id};
  const Eigen::Index n = a.rows();
  return a.tape->emplace("sum_rows", a.value().colwise().sum(), ids,
                         [ia = a.id, n](Tape& tp, const Tensor& g) { tp.accumulate(ia, g.replicate(n, 1)); });
}

Var sum(Var a) {
  const int ids[] = {a.id};
  const Eigen::Index r = a.rows(), c = a.cols();
  Tensor out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape->emplace("sum", std::move(out), ids, [ia = a.id, r, c](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, Tensor::Constant(r, c, g(0, 0)));
  });
}

Var broadcast_rows(Var a, Eigen::Index rows) {
  Tape& t = *a.tape;
  if (a.rows() != 1) throw ShapeError("broadcast_rows expects a single row at " + t.describe_pending("broadcast_rows"));
  const int ids[] = {a.id};
  return t.emplace("broadcast_rows", a.value().replicate(rows, 1), ids,
                   [ia = a.id](Tape& tp, const Tensor& g) { tp.accumulate(ia, g.colwise().sum()); });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  Tape& t = *a.tape;
  if (start < 0 || count < 0 || start + count > a.cols())
    throw ShapeError("column slice [" + std::to_string(start) + ", " + std::to_string(start + count) +
                     ") out of range for " + shape_str(a.value()) + " at " + t.describe_pending("slice_cols"));
  const int ids[] = {a.id};
  const Eigen::Index rows = a.rows(), cols = a.cols();
  return t.emplace("slice_cols", a.value().middleCols(start, count), ids,
                   [ia = a.id, start, count, rows, cols](Tape& tp, const Tensor& g) {
                     Tensor full = Tensor::Zero(rows, cols);
                     full.middleCols(start, count) = g;
                     tp.accumulate(ia, full);
                   });
}

Var gather_rows(Var a, std::span<const int> rows) {
  Tape& t = *a.tape;
  const Tensor& av = a.value();
  Tensor out(static_cast<Eigen::Index>(rows.size()), av.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= av.rows())
      throw ShapeError("row index " + std::to_string(rows[i]) + " out of range for " + shape_str(av) +
                       " at " + t.describe_pending("gather_rows"));
    out.row(static_cast<Eigen::Index>(i)) = av.row(rows[i]);
  }
  const int ids[] = {a.id};
  std::vector<int> idx(rows.begin(), rows.end());
  const Eigen::Index src_rows = av.rows(), cols = av.cols();
  return t.emplace("gather_rows", std::move(out), ids,
                   [ia = a.id, idx = std::move(idx), src_rows, cols](Tape& tp, const Tensor& g) {
                     Tensor full = Tensor::Zero(src_rows, cols);
                     for (std::size_t i = 0; i < idx.size(); ++i) full.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
                     tp.accumulate(ia, full);
                   });
}

Var pick(Var a, std::span<const int> columns) {
  Tape& t = *a.tape;
  const Tensor& av = a.value();
  if (static_cast<Eigen::Index>(columns.size()) != av.rows())
    throw ShapeError("pick needs one column index per row at " + t.describe_pending("pick"));
  Tensor out(av.rows(), 1);
  for (Eigen::Index r = 0; r < av.rows(); ++r) {
    const int c = columns[static_cast<std::size_t>(r)];
    if (c < 0 || c >= av.cols())
      throw ShapeError("column index " + std::to_string(c) + " out of range at " + t.describe_pending("pick"));
    out(r, 0) = av(r, c);
  }
  const int ids[] = {a.id};
  std::vector<int> idx(columns.begin(), columns.end());
  const Eigen::Index rows = av.rows(), cols = av.cols();
  return t.emplace("pick", std::move(out), ids,
                   [ia = a.id, idx = std::move(idx), rows, cols](Tape& tp, const Tensor& g) {
                     Tensor full = Tensor::Zero(rows, cols);
                     for (Eigen::Index r = 0; r < rows; ++r) full(r, idx[static_cast<std::size_t>(r)]) = g(r, 0);
                     tp.accumulate(ia, full);
                   });
}

}  // namespace emnh::ad
