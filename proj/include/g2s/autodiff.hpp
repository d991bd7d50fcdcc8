#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "g2s/errors.hpp"
#include "g2s/tensor.hpp"

namespace g2s {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run gradient tape.
///
/// Every op appends a node holding its output and a closure that pushes the
/// node's gradient into its parents. Parameter leaves refer to tensors owned
/// elsewhere (normally a ParamSet); `backward` accumulates into their `grad`.
/// A tape built with `grad_enabled = false` records values only.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }

  Var constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, nullptr, {}, false});
    return Var(this, nodes_.size() - 1);
  }

  // One leaf per distinct parameter tensor per tape.
  Var param(Tensor& p) {
    if (auto it = params_.find(&p); it != params_.end()) return Var(this, it->second);
    nodes_.push_back(Node{{}, {}, &p, {}, grad_enabled_});
    params_.emplace(&p, nodes_.size() - 1);
    return Var(this, nodes_.size() - 1);
  }

  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
    return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(fn));
  }

  Var record(Tensor value, std::span<const Var> parents, BackwardFn fn) {
    bool needs = false;
    for (const Var& p : parents) {
      if (&p.tape() != this) throw StateError("op mixes vars from different tapes");
      needs = needs || nodes_[p.id()].needs_grad;
    }
    if (!value.all_finite()) throw NumericError("non-finite value produced on gradient tape");
    nodes_.push_back(Node{std::move(value), {}, nullptr, needs ? std::move(fn) : BackwardFn{}, needs});
    return Var(this, nodes_.size() - 1);
  }

  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.param ? *n.param : n.value;
  }

  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

  std::vector<double>& grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad.assign(value(id).size(), 0.0);
    return n.grad;
  }

  /// Reverse sweep from a scalar; parameter leaves accumulate into `grad`.
  void backward(Var loss) {
    if (&loss.tape() != this) throw StateError("loss belongs to another tape");
    if (value(loss.id()).size() != 1) {
      throw ArgumentError("backward needs a scalar loss, got shape " + shape_str(value(loss.id()).shape));
    }
    if (!nodes_[loss.id()].needs_grad) return;
    grad(loss.id())[0] += 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.empty()) continue;
      if (n.param) {
        Tensor& p = *n.param;
        if (p.grad.empty()) p.grad.assign(p.size(), 0.0);
        for (std::size_t k = 0; k < n.grad.size(); ++k) p.grad[k] += n.grad[k];
      } else if (n.backward) {
        n.backward(*this, i);
      }
    }
  }

  void clear() {
    nodes_.clear();
    params_.clear();
  }

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    Tensor* param;
    BackwardFn backward;
    bool needs_grad;
  };

  std::deque<Node> nodes_;
  std::unordered_map<const Tensor*, std::size_t> params_;
  bool grad_enabled_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

namespace detail {

// Fixed-order dot product with eight partial sums (vectorizes, stays deterministic).
inline double dot(const double* a, const double* b, std::size_t n) {
  double acc[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8)
    for (std::size_t l = 0; l < 8; ++l) acc[l] += a[j + l] * b[j + l];
  double s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  for (; j < n; ++j) s += a[j] * b[j];
  return s;
}

inline void check_same_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw StateError("op mixes vars from different tapes");
}

template <class F>
Var unary(const Var& x, F&& f, std::function<double(double in, double out)> dfdx) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape);
  for (std::size_t i = 0; i < xv.size(); ++i) out.data[i] = f(xv.data[i]);
  const std::size_t xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, dfdx = std::move(dfdx)](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const Tensor& in = t.value(xid);
    const Tensor& o = t.value(self);
    auto& gx = t.grad(xid);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * dfdx(in.data[i], o.data[i]);
  });
}

}  // namespace detail

/// [n,k] x [k,m] -> [n,m]
inline Var matmul(const Var& a, const Var& b) {
  detail::check_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t n = av.rows(), k = av.cols(), m = bv.cols();
  if (bv.rows() != k) {
    throw DimensionError("matmul shape mismatch: " + shape_str(av.shape) + " x " + shape_str(bv.shape));
  }
  Tensor out(Shape{n, m});
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = out.data.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av.data[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = bv.data.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  }
  const std::size_t aid = a.id(), bid = b.id();
  return a.tape().record(std::move(out), {a, b}, [aid, bid, n, k, m](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const Tensor& A = t.value(aid);
    const Tensor& B = t.value(bid);
    if (t.needs_grad(aid)) {
      auto& ga = t.grad(aid);
      for (std::size_t i = 0; i < n; ++i) {
        const double* grow = g.data() + i * m;
        for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += detail::dot(grow, B.data.data() + p * m, m);
      }
    }
    if (t.needs_grad(bid)) {
      auto& gb = t.grad(bid);
      for (std::size_t i = 0; i < n; ++i) {
        const double* grow = g.data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A.data[i * k + p];
          if (aip == 0.0) continue;
          double* gbrow = gb.data() + p * m;
          for (std::size_t j = 0; j < m; ++j) gbrow[j] += aip * grow[j];
        }
      }
    }
  });
}

/// Elementwise sum of two tensors with equal element counts; result takes a's shape.
inline Var add(const Var& a, const Var& b) {
  detail::check_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.size() != bv.size()) {
    throw DimensionError("add shape mismatch: " + shape_str(av.shape) + " + " + shape_str(bv.shape));
  }
  Tensor out(av.shape);
  for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = av.data[i] + bv.data[i];
  const std::size_t aid = a.id(), bid = b.id();
  return a.tape().record(std::move(out), {a, b}, [aid, bid](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    for (std::size_t id : {aid, bid}) {
      if (!t.needs_grad(id)) continue;
      auto& gi = t.grad(id);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

/// [n,m] + broadcast row of m elements.
inline Var add_row(const Var& x, const Var& row) {
  detail::check_same_tape(x, row);
  const Tensor& xv = x.value();
  const Tensor& bv = row.value();
  const std::size_t n = xv.rows(), m = xv.cols();
  if (bv.size() != m) {
    throw DimensionError("add_row shape mismatch: " + shape_str(xv.shape) + " + " + shape_str(bv.shape));
  }
  Tensor out(Shape{n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out.data[i * m + j] = xv.data[i * m + j] + bv.data[j];
  const std::size_t xid = x.id(), bid = row.id();
  return x.tape().record(std::move(out), {x, row}, [xid, bid, n, m](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(xid)) {
      auto& gx = t.grad(xid);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (t.needs_grad(bid)) {
      auto& gb = t.grad(bid);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) gb[j] += g[i * m + j];
    }
  });
}

/// Elementwise product.
inline Var mul(const Var& a, const Var& b) {
  detail::check_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.size() != bv.size()) {
    throw DimensionError("mul shape mismatch: " + shape_str(av.shape) + " * " + shape_str(bv.shape));
  }
  Tensor out(av.shape);
  for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = av.data[i] * bv.data[i];
  const std::size_t aid = a.id(), bid = b.id();
  return a.tape().record(std::move(out), {a, b}, [aid, bid](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const Tensor& A = t.value(aid);
    const Tensor& B = t.value(bid);
    if (t.needs_grad(aid)) {
      auto& ga = t.grad(aid);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B.data[i];
    }
    if (t.needs_grad(bid)) {
      auto& gb = t.grad(bid);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A.data[i];
    }
  });
}

inline Var scale(const Var& x, double s) {
  return detail::unary(x, [s](double v) { return s * v; }, [s](double, double) { return s; });
}

inline Var relu(const Var& x) {
  return detail::unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

inline Var tanh(const Var& x) {
  return detail::unary(
      x, [](double v) { return std::tanh(v); }, [](double, double out) { return 1.0 - out * out; });
}

inline Var sigmoid(const Var& x) {
  return detail::unary(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); }, [](double, double out) { return out * (1.0 - out); });
}

/// Side-by-side concatenation of blocks with equal row counts.
inline Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ArgumentError("concat_cols of nothing");
  const std::size_t n = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    detail::check_same_tape(parts[0], p);
    if (p.rows() != n) {
      throw DimensionError("concat_cols row mismatch: " + shape_str(parts[0].value().shape) + " vs " +
                           shape_str(p.value().shape));
    }
    widths.push_back(p.cols());
    total += p.cols();
  }
  Tensor out(Shape{n, total});
  std::size_t off = 0;
  for (std::size_t b = 0; b < parts.size(); ++b) {
    const Tensor& v = parts[b].value();
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(v.data.data() + i * widths[b], widths[b], out.data.data() + i * total + off);
    off += widths[b];
  }
  std::vector<std::size_t> ids;
  for (const Var& p : parts) ids.push_back(p.id());
  return parts[0].tape().record(std::move(out), parts, [ids, widths, n, total](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    std::size_t off = 0;
    for (std::size_t b = 0; b < ids.size(); ++b) {
      if (t.needs_grad(ids[b])) {
        auto& gb = t.grad(ids[b]);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < widths[b]; ++j) gb[i * widths[b] + j] += g[i * total + off + j];
      }
      off += widths[b];
    }
  });
}

inline Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

/// Vertical stacking of blocks with equal column counts.
inline Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ArgumentError("concat_rows of nothing");
  const std::size_t m = parts[0].cols();
  std::size_t total = 0;
  for (const Var& p : parts) {
    detail::check_same_tape(parts[0], p);
    if (p.cols() != m) {
      throw DimensionError("concat_rows column mismatch: " + shape_str(parts[0].value().shape) + " vs " +
                           shape_str(p.value().shape));
    }
    total += p.rows();
  }
  Tensor out(Shape{total, m});
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    std::copy(v.data.begin(), v.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(off));
    ids.push_back(p.id());
    offsets.push_back(off);
    off += v.size();
  }
  return parts[0].tape().record(std::move(out), parts, [ids, offsets](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    for (std::size_t b = 0; b < ids.size(); ++b) {
      if (!t.needs_grad(ids[b])) continue;
      auto& gb = t.grad(ids[b]);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[offsets[b] + i];
    }
  });
}

inline Var slice_cols(const Var& x, std::size_t start, std::size_t len) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows(), m = xv.cols();
  if (start + len > m) throw DimensionError("slice_cols out of range for shape " + shape_str(xv.shape));
  Tensor out(Shape{n, len});
  for (std::size_t i = 0; i < n; ++i)
    std::copy_n(xv.data.data() + i * m + start, len, out.data.data() + i * len);
  const std::size_t xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, n, m, start, len](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(xid);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < len; ++j) gx[i * m + start + j] += g[i * len + j];
  });
}

/// Rows of x selected (with repetition) by index.
inline Var gather_rows(const Var& x, std::vector<std::size_t> index) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows(), m = xv.cols();
  Tensor out(Shape{index.size(), m});
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= n) throw ArgumentError("gather_rows index out of range");
    std::copy_n(xv.data.data() + index[r] * m, m, out.data.data() + r * m);
  }
  const std::size_t xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, m, index = std::move(index)](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(xid);
    for (std::size_t r = 0; r < index.size(); ++r)
      for (std::size_t j = 0; j < m; ++j) gx[index[r] * m + j] += g[r * m + j];
  });
}

inline Var reshape(const Var& x, Shape shape) {
  const Tensor& xv = x.value();
  if (shape_numel(shape) != xv.size()) {
    throw DimensionError("cannot reshape " + shape_str(xv.shape) + " to " + shape_str(shape));
  }
  Tensor out(std::move(shape), xv.data);
  const std::size_t xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(xid);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

using RowGroups = std::vector<std::vector<std::size_t>>;

/// Per-group elementwise mean of rows; an empty group yields a zero row.
///
/// Each column is summed in ascending value order, so the result is
/// bit-identical under any permutation of a group's members.
inline Var segment_mean(const Var& x, const RowGroups& groups) {
  const Tensor& xv = x.value();
  const std::size_t m = xv.cols();
  Tensor out(Shape{groups.size(), m});
  std::vector<double> column;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& members = groups[g];
    if (members.empty()) continue;
    for (std::size_t r : members)
      if (r >= xv.rows()) throw ArgumentError("segment_mean row index out of range");
    const double inv = 1.0 / static_cast<double>(members.size());
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      if (members.size() <= 2) {
        for (std::size_t r : members) s += xv.data[r * m + j];
      } else {
        column.clear();
        for (std::size_t r : members) column.push_back(xv.data[r * m + j]);
        std::sort(column.begin(), column.end());
        for (double v : column) s += v;
      }
      out.data[g * m + j] = s * inv;
    }
  }
  const std::size_t xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, m, groups](Tape& t, std::size_t self) {
    const auto& gr = t.grad(self);
    auto& gx = t.grad(xid);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (groups[g].empty()) continue;
      const double inv = 1.0 / static_cast<double>(groups[g].size());
      for (std::size_t r : groups[g])
        for (std::size_t j = 0; j < m; ++j) gx[r * m + j] += gr[g * m + j] * inv;
    }
  });
}

/// Per-group elementwise max (or min) of rows; an empty group yields a zero row.
/// Ties route the gradient to the lowest row index.
inline Var segment_extreme(const Var& x, const RowGroups& groups, bool take_max) {
  const Tensor& xv = x.value();
  const std::size_t m = xv.cols();
  Tensor out(Shape{groups.size(), m});
  std::vector<std::size_t> winner(groups.size() * m, static_cast<std::size_t>(-1));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t j = 0; j < m; ++j) {
      std::size_t best = static_cast<std::size_t>(-1);
      for (std::size_t r : groups[g]) {
        if (r >= xv.rows()) throw ArgumentError("segment row index out of range");
        const double v = xv.data[r * m + j];
        if (best == static_cast<std::size_t>(-1)) {
          best = r;
          continue;
        }
        const double b = xv.data[best * m + j];
        if ((take_max ? v > b : v < b) || (v == b && r < best)) best = r;
      }
      if (best != static_cast<std::size_t>(-1)) {
        out.data[g * m + j] = xv.data[best * m + j];
        winner[g * m + j] = best;
      }
    }
  }
  const std::size_t xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, m, winner = std::move(winner)](Tape& t, std::size_t self) {
    const auto& gr = t.grad(self);
    auto& gx = t.grad(xid);
    for (std::size_t k = 0; k < winner.size(); ++k) {
      if (winner[k] == static_cast<std::size_t>(-1)) continue;
      gx[winner[k] * m + k % m] += gr[k];
    }
  });
}

inline Var segment_max(const Var& x, const RowGroups& groups) { return segment_extreme(x, groups, true); }
inline Var segment_min(const Var& x, const RowGroups& groups) { return segment_extreme(x, groups, false); }

namespace detail {
inline RowGroups all_rows(std::size_t n) {
  RowGroups g(1);
  for (std::size_t i = 0; i < n; ++i) g[0].push_back(i);
  return g;
}
}  // namespace detail

// Column-wise reductions over all rows -> [1, m].
inline Var rows_max(const Var& x) { return segment_max(x, detail::all_rows(x.rows())); }
inline Var rows_min(const Var& x) { return segment_min(x, detail::all_rows(x.rows())); }
inline Var rows_mean(const Var& x) { return segment_mean(x, detail::all_rows(x.rows())); }

/// Row-wise softmax with max subtraction.
inline Var softmax_rows(const Var& x) {
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows(), m = xv.cols();
  if (m == 0) throw ArgumentError("softmax of an empty vector");
  Tensor out(xv.shape);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = softmax(std::span<const double>(xv.data.data() + i * m, m));
    std::copy(row.begin(), row.end(), out.data.begin() + static_cast<std::ptrdiff_t>(i * m));
  }
  const std::size_t xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, n, m](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const Tensor& y = t.value(self);
    auto& gx = t.grad(xid);
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < m; ++j) dot += g[i * m + j] * y.data[i * m + j];
      for (std::size_t j = 0; j < m; ++j) gx[i * m + j] += y.data[i * m + j] * (g[i * m + j] - dot);
    }
  });
}

inline Var sum(const Var& x) {
  const Tensor& xv = x.value();
  double s = 0.0;
  for (double v : xv.data) s += v;
  const std::size_t xid = x.id();
  return x.tape().record(Tensor::scalar(s), {x}, [xid](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (double& gx : t.grad(xid)) gx += g;
  });
}

/// Mean negative log-likelihood of `targets[i]` under softmax of logits row i.
inline Var cross_entropy(const Var& logits, std::vector<std::size_t> targets) {
  const Tensor& lv = logits.value();
  const std::size_t n = lv.rows(), m = lv.cols();
  if (targets.size() != n) throw DimensionError("cross_entropy needs one target per logits row");
  std::vector<double> probs(n * m);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (targets[i] >= m) throw ArgumentError("cross_entropy target out of range");
    auto lp = log_softmax(std::span<const double>(lv.data.data() + i * m, m));
    loss -= lp[targets[i]];
    for (std::size_t j = 0; j < m; ++j) probs[i * m + j] = std::exp(lp[j]);
  }
  loss /= static_cast<double>(n);
  const std::size_t lid = logits.id();
  return logits.tape().record(
      Tensor::scalar(loss), {logits},
      [lid, n, m, probs = std::move(probs), targets = std::move(targets)](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0] / static_cast<double>(n);
        auto& gl = t.grad(lid);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < m; ++j) gl[i * m + j] += g * probs[i * m + j];
          gl[i * m + targets[i]] -= g;
        }
      });
}

/// Inverted dropout: at train time keep each element with probability
/// 1 - rate and scale kept values by 1 / (1 - rate); identity otherwise.
inline Var dropout(const Var& x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0) || rate >= 1.0) throw ArgumentError("dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) return x;
  const Tensor& xv = x.value();
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(xv.size());
  for (double& v : mask) v = rng.uniform() >= rate ? keep_scale : 0.0;
  Tensor out(xv.shape);
  for (std::size_t i = 0; i < xv.size(); ++i) out.data[i] = xv.data[i] * mask[i];
  const std::size_t xid = x.id();
  return x.tape().record(std::move(out), {x}, [xid, mask = std::move(mask)](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gx = t.grad(xid);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

}  // namespace g2s
