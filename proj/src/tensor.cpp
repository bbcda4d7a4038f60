#include "ppjudge/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "ppjudge/error.hpp"

namespace ppjudge {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ", ";
    os << s[i];
  }
  os << ']';
  return os.str();
}

std::uint64_t& mac_counter() {
  thread_local std::uint64_t count = 0;
  return count;
}

namespace {

thread_local int no_grad_depth = 0;

const std::vector<double>& empty_grad() {
  static const std::vector<double> e;
  return e;
}

}  // namespace

NoGradGuard::NoGradGuard() { ++no_grad_depth; }
NoGradGuard::~NoGradGuard() { --no_grad_depth; }

bool grad_enabled() { return no_grad_depth == 0; }

// ---- Tensor basics ----

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
  return from_values(shape, std::vector<double>(shape_numel(shape), 0.0), requires_grad);
}

Tensor Tensor::full(const Shape& shape, double value, bool requires_grad) {
  return from_values(shape, std::vector<double>(shape_numel(shape), value), requires_grad);
}

Tensor Tensor::scalar(double value) { return from_values({1}, {value}, false); }

Tensor Tensor::from_values(const Shape& shape, std::vector<double> values,
                           bool requires_grad) {
  if (values.size() != shape_numel(shape)) {
    throw DimensionError("from_values: " + std::to_string(values.size()) +
                         " values for shape " + shape_str(shape));
  }
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->values = std::move(values);
  n->requires_grad = requires_grad;
  return wrap(std::move(n));
}

static void require_defined(const Tensor& t, const char* who) {
  if (!t.defined()) throw ContractError(std::string(who) + ": undefined tensor");
}

const Shape& Tensor::shape() const {
  require_defined(*this, "shape");
  return node_->shape;
}

std::size_t Tensor::numel() const { return shape_numel(shape()); }

std::size_t Tensor::rows() const {
  if (shape().size() != 2) throw DimensionError("rows: tensor is not 2-D: " + shape_str(shape()));
  return shape()[0];
}

std::size_t Tensor::cols() const {
  if (shape().size() != 2) throw DimensionError("cols: tensor is not 2-D: " + shape_str(shape()));
  return shape()[1];
}

const std::vector<double>& Tensor::values() const {
  require_defined(*this, "values");
  return node_->values;
}

std::vector<double>& Tensor::values_mut() {
  require_defined(*this, "values_mut");
  return node_->values;
}

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item: tensor has shape " + shape_str(shape()));
  return node_->values[0];
}

double Tensor::at(std::size_t i) const {
  if (i >= numel()) throw RangeError("flat index " + std::to_string(i) + " out of range");
  return node_->values[i];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (r >= rows() || c >= cols()) {
    throw RangeError("index (" + std::to_string(r) + ", " + std::to_string(c) +
                     ") out of range for " + shape_str(shape()));
  }
  return node_->values[r * cols() + c];
}

bool Tensor::requires_grad() const { return defined() && node_->requires_grad; }

void Tensor::set_requires_grad(bool v) {
  require_defined(*this, "set_requires_grad");
  if (!is_leaf()) throw ContractError("set_requires_grad is only valid on leaf tensors");
  node_->requires_grad = v;
}

bool Tensor::is_leaf() const {
  require_defined(*this, "is_leaf");
  return node_->parents.empty() && !node_->backward_fn;
}

const std::vector<double>& Tensor::grad() const {
  require_defined(*this, "grad");
  if (node_->grad.empty()) return empty_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  require_defined(*this, "zero_grad");
  node_->ensure_grad();
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

// ---- graph plumbing ----

namespace {

Tensor make_op(Shape shape, std::vector<double> values, std::vector<NodePtr> parents,
               std::function<void(Node&)> bw) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  if (grad_enabled()) {
    bool any = false;
    for (const auto& p : parents) any = any || p->requires_grad;
    if (any) {
      n->requires_grad = true;
      n->parents = std::move(parents);
      n->backward_fn = std::move(bw);
    }
  }
  return Tensor::wrap(std::move(n));
}

void topo_collect(Node* root, std::vector<Node*>& order) {
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& top = stack.back();
    Node* node = top.first;
    if (top.second < node->parents.size()) {
      Node* p = node->parents[top.second].get();
      ++top.second;
      if (visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* who) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(who) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
  }
}

// dense multiply-add kernels; all accumulate into C

// Dot product over eight independent accumulators. The reassociation is fixed,
// so results stay bit-reproducible while the chains vectorize without
// reordering licenses from the compiler.
inline double dot_mc(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  double s4 = 0.0, s5 = 0.0, s6 = 0.0, s7 = 0.0;
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    s0 += a[j] * b[j];
    s1 += a[j + 1] * b[j + 1];
    s2 += a[j + 2] * b[j + 2];
    s3 += a[j + 3] * b[j + 3];
    s4 += a[j + 4] * b[j + 4];
    s5 += a[j + 5] * b[j + 5];
    s6 += a[j + 6] * b[j + 6];
    s7 += a[j + 7] * b[j + 7];
  }
  double s = ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7));
  for (; j < n; ++j) s += a[j] * b[j];
  return s;
}

void mm_nn(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
           std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* a = A + i * k;
    double* c = C + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      double av = a[p];
      const double* b = B + p * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
  mac_counter() += static_cast<std::uint64_t>(m) * k * n;
}

// A: [m,n], B: [k,n], C: [m,k] += A * B^T
void mm_nt(const double* A, const double* B, double* C, std::size_t m, std::size_t n,
           std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* a = A + i * n;
    double* c = C + i * k;
    for (std::size_t p = 0; p < k; ++p) c[p] += dot_mc(a, B + p * n, n);
  }
  mac_counter() += static_cast<std::uint64_t>(m) * n * k;
}

// A: [m,k], B: [m,n], C: [k,n] += A^T * B
void mm_tn(const double* A, const double* B, double* C, std::size_t m, std::size_t k,
           std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* a = A + i * k;
    const double* b = B + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      double av = a[p];
      double* c = C + p * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += av * b[j];
    }
  }
  mac_counter() += static_cast<std::uint64_t>(m) * k * n;
}

}  // namespace

void backward(const Tensor& loss, double seed) {
  require_defined(loss, "backward");
  if (loss.numel() != 1) {
    throw ContractError("backward requires a scalar loss, got " + shape_str(loss.shape()));
  }
  if (!loss.requires_grad()) {
    throw ContractError("backward: loss does not require grad (no parameters on its path?)");
  }
  std::vector<Node*> order;
  topo_collect(loss.node().get(), order);
  loss.node()->ensure_grad();
  loss.node()->grad[0] += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

void zero_graph_grads(const Tensor& root) {
  require_defined(root, "zero_graph_grads");
  std::vector<Node*> order;
  topo_collect(root.node().get(), order);
  for (Node* n : order) std::fill(n->grad.begin(), n->grad.end(), 0.0);
}

// ---- elementwise ----

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_op(a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    for (int p = 0; p < 2; ++p) {
      Node& par = *self.parents[p];
      if (!par.requires_grad) continue;
      par.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) par.grad[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_op(a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_op(a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        pa.grad[i] += self.grad[i] * pb.values[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        pb.grad[i] += self.grad[i] * pa.values[i];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
  return make_op(a.shape(), std::move(out), {a.node()}, [c](Node& self) {
    Node& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * c;
  });
}

Tensor add_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + c;
  return make_op(a.shape(), std::move(out), {a.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
  });
}

Tensor reciprocal(const Tensor& a) {
  std::vector<double> out(a.numel());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (av[i] == 0.0) throw DegenerateInputError("reciprocal of zero element");
    out[i] = 1.0 / av[i];
  }
  return make_op(a.shape(), std::move(out), {a.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      pa.grad[i] -= self.grad[i] * self.values[i] * self.values[i];
  });
}

Tensor square(const Tensor& a) {
  std::vector<double> out(a.numel());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * av[i];
  return make_op(a.shape(), std::move(out), {a.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      pa.grad[i] += 2.0 * self.grad[i] * pa.values[i];
  });
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  std::size_t n = m.rows(), d = m.cols();
  if (v.shape().size() != 1 || v.shape()[0] != d) {
    throw DimensionError("add_rowvec: vector " + shape_str(v.shape()) +
                         " does not match matrix " + shape_str(m.shape()));
  }
  std::vector<double> out(n * d);
  const auto& mv = m.values();
  const auto& vv = v.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = mv[i * d + j] + vv[j];
  return make_op(m.shape(), std::move(out), {m.node(), v.node()}, [n, d](Node& self) {
    Node& pm = *self.parents[0];
    Node& pv = *self.parents[1];
    if (pm.requires_grad) {
      pm.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pm.grad[i] += self.grad[i];
    }
    if (pv.requires_grad) {
      pv.ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) pv.grad[j] += self.grad[i * d + j];
    }
  });
}

// ---- linear algebra ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  std::size_t m = a.rows(), k = a.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  std::size_t n = b.cols();
  std::vector<double> out(m * n, 0.0);
  mm_nn(a.values().data(), b.values().data(), out.data(), m, k, n);
  return make_op({m, n}, std::move(out), {a.node(), b.node()}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      // dA = dC * B^T
      mm_nt(self.grad.data(), pb.values.data(), pa.grad.data(), m, n, k);
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      // dB = A^T * dC
      mm_tn(pa.values.data(), self.grad.data(), pb.grad.data(), m, k, n);
    }
  });
}

Tensor transpose(const Tensor& a) {
  std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  const auto& av = a.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return make_op({n, m}, std::move(out), {a.node()}, [m, n](Node& self) {
    Node& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < m; ++i) pa.grad[i * n + j] += self.grad[j * m + i];
  });
}

Tensor reshape(const Tensor& a, const Shape& shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("reshape: " + shape_str(a.shape()) + " to " + shape_str(shape) +
                         " changes element count");
  }
  std::vector<double> out = a.values();
  return make_op(shape, std::move(out), {a.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no parts");
  std::size_t d = parts[0].cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.cols() != d) {
      throw DimensionError("concat_rows: column mismatch " + shape_str(p.shape()));
    }
    total += p.rows();
  }
  std::vector<double> out;
  out.reserve(total * d);
  std::vector<NodePtr> parents;
  parents.reserve(parts.size());
  for (const auto& p : parts) {
    const auto& pv = p.values();
    out.insert(out.end(), pv.begin(), pv.end());
    parents.push_back(p.node());
  }
  return make_op({total, d}, std::move(out), std::move(parents), [](Node& self) {
    std::size_t off = 0;
    for (auto& pp : self.parents) {
      Node& par = *pp;
      std::size_t count = par.values.size();
      if (par.requires_grad) {
        par.ensure_grad();
        for (std::size_t i = 0; i < count; ++i) par.grad[i] += self.grad[off + i];
      }
      off += count;
    }
  });
}

Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t count) {
  std::size_t n = a.rows(), d = a.cols();
  if (start + count > n) {
    throw RangeError("slice_rows: [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") out of " + std::to_string(n) + " rows");
  }
  const auto& av = a.values();
  std::vector<double> out(av.begin() + start * d, av.begin() + (start + count) * d);
  return make_op({count, d}, std::move(out), {a.node()}, [start, d](Node& self) {
    Node& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      pa.grad[start * d + i] += self.grad[i];
  });
}

Tensor gather_rows(const Tensor& a, const std::vector<std::size_t>& idx) {
  std::size_t n = a.rows(), d = a.cols();
  std::vector<double> out(idx.size() * d);
  const auto& av = a.values();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= n) throw RangeError("gather_rows: index " + std::to_string(idx[i]));
    std::copy_n(av.begin() + idx[i] * d, d, out.begin() + i * d);
  }
  auto idx_copy = std::make_shared<std::vector<std::size_t>>(idx);
  return make_op({idx.size(), d}, std::move(out), {a.node()}, [idx_copy, d](Node& self) {
    Node& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (std::size_t i = 0; i < idx_copy->size(); ++i) {
      double* dst = pa.grad.data() + (*idx_copy)[i] * d;
      const double* src = self.grad.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
  });
}

Tensor scatter_add_rows(const Tensor& base, const std::vector<std::size_t>& idx,
                        const Tensor& rows) {
  std::size_t n = base.rows(), d = base.cols();
  if (rows.cols() != d || rows.rows() != idx.size()) {
    throw DimensionError("scatter_add_rows: rows " + shape_str(rows.shape()) + " with " +
                         std::to_string(idx.size()) + " indices into " +
                         shape_str(base.shape()));
  }
  std::vector<double> out = base.values();
  const auto& rv = rows.values();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= n) throw RangeError("scatter_add_rows: index " + std::to_string(idx[i]));
    double* dst = out.data() + idx[i] * d;
    const double* src = rv.data() + i * d;
    for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
  }
  auto idx_copy = std::make_shared<std::vector<std::size_t>>(idx);
  return make_op({n, d}, std::move(out), {base.node(), rows.node()},
                 [idx_copy, d](Node& self) {
                   Node& pb = *self.parents[0];
                   Node& pr = *self.parents[1];
                   if (pb.requires_grad) {
                     pb.ensure_grad();
                     for (std::size_t i = 0; i < self.grad.size(); ++i)
                       pb.grad[i] += self.grad[i];
                   }
                   if (pr.requires_grad) {
                     pr.ensure_grad();
                     for (std::size_t i = 0; i < idx_copy->size(); ++i) {
                       double* dst = pr.grad.data() + i * d;
                       const double* src = self.grad.data() + (*idx_copy)[i] * d;
                       for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
                     }
                   }
                 });
}

Tensor gather_elements(const Tensor& a, const std::vector<std::size_t>& flat_idx) {
  std::vector<double> out(flat_idx.size());
  const auto& av = a.values();
  for (std::size_t i = 0; i < flat_idx.size(); ++i) {
    if (flat_idx[i] >= av.size())
      throw RangeError("gather_elements: index " + std::to_string(flat_idx[i]));
    out[i] = av[flat_idx[i]];
  }
  auto idx_copy = std::make_shared<std::vector<std::size_t>>(flat_idx);
  return make_op({flat_idx.size()}, std::move(out), {a.node()}, [idx_copy](Node& self) {
    Node& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (std::size_t i = 0; i < idx_copy->size(); ++i)
      pa.grad[(*idx_copy)[i]] += self.grad[i];
  });
}

Tensor mul_rowwise(const Tensor& m, const Tensor& w) {
  std::size_t n = m.rows(), d = m.cols();
  if (w.shape().size() != 1 || w.shape()[0] != n) {
    throw DimensionError("mul_rowwise: weights " + shape_str(w.shape()) + " for matrix " +
                         shape_str(m.shape()));
  }
  std::vector<double> out(n * d);
  const auto& mv = m.values();
  const auto& wv = w.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = mv[i * d + j] * wv[i];
  return make_op(m.shape(), std::move(out), {m.node(), w.node()}, [n, d](Node& self) {
    Node& pm = *self.parents[0];
    Node& pw = *self.parents[1];
    if (pm.requires_grad) {
      pm.ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
          pm.grad[i * d + j] += self.grad[i * d + j] * pw.values[i];
    }
    if (pw.requires_grad) {
      pw.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j)
          s += self.grad[i * d + j] * pm.values[i * d + j];
        pw.grad[i] += s;
      }
    }
  });
}

// ---- reductions ----

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return make_op({1}, {s}, {a.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (double& g : pa.grad) g += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw DegenerateInputError("mean of empty tensor");
  double s = 0.0;
  for (double v : a.values()) s += v;
  double inv = 1.0 / static_cast<double>(a.numel());
  return make_op({1}, {s * inv}, {a.node()}, [inv](Node& self) {
    Node& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (double& g : pa.grad) g += self.grad[0] * inv;
  });
}

Tensor row_sum(const Tensor& m) {
  std::size_t n = m.rows(), d = m.cols();
  std::vector<double> out(n, 0.0);
  const auto& mv = m.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i] += mv[i * d + j];
  return make_op({n}, std::move(out), {m.node()}, [n, d](Node& self) {
    Node& pm = *self.parents[0];
    if (!pm.requires_grad) return;
    pm.ensure_grad();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) pm.grad[i * d + j] += self.grad[i];
  });
}

Tensor mean_rows(const Tensor& m) {
  std::size_t n = m.rows(), d = m.cols();
  if (n == 0) throw DegenerateInputError("mean_rows of empty matrix");
  std::vector<double> out(d, 0.0);
  const auto& mv = m.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[j] += mv[i * d + j];
  double inv = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= inv;
  return make_op({d}, std::move(out), {m.node()}, [n, d, inv](Node& self) {
    Node& pm = *self.parents[0];
    if (!pm.requires_grad) return;
    pm.ensure_grad();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) pm.grad[i * d + j] += self.grad[j] * inv;
  });
}

// ---- nonlinearities ----

Tensor softmax(const Tensor& a, std::size_t axis) {
  const Shape& s = a.shape();
  if (axis >= s.size()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " for " + shape_str(s));
  }
  std::size_t outer = 1, inner = 1, mid = s[axis];
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  std::vector<double> out(a.numel());
  const auto& av = a.values();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      std::size_t base = o * mid * inner + in;
      double mx = av[base];
      for (std::size_t m = 1; m < mid; ++m) mx = std::max(mx, av[base + m * inner]);
      double z = 0.0;
      for (std::size_t m = 0; m < mid; ++m) {
        double e = std::exp(av[base + m * inner] - mx);
        out[base + m * inner] = e;
        z += e;
      }
      double inv = 1.0 / z;
      for (std::size_t m = 0; m < mid; ++m) out[base + m * inner] *= inv;
    }
  }
  return make_op(s, std::move(out), {a.node()}, [outer, inner, mid](Node& self) {
    Node& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        std::size_t base = o * mid * inner + in;
        double dot = 0.0;
        for (std::size_t m = 0; m < mid; ++m)
          dot += self.values[base + m * inner] * self.grad[base + m * inner];
        for (std::size_t m = 0; m < mid; ++m) {
          std::size_t p = base + m * inner;
          pa.grad[p] += self.values[p] * (self.grad[p] - dot);
        }
      }
    }
  });
}

Tensor silu(const Tensor& a) {
  std::vector<double> out(a.numel());
  const auto& av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double sg = 1.0 / (1.0 + std::exp(-av[i]));
    out[i] = av[i] * sg;
  }
  return make_op(a.shape(), std::move(out), {a.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      double x = pa.values[i];
      double sg = 1.0 / (1.0 + std::exp(-x));
      pa.grad[i] += self.grad[i] * sg * (1.0 + x * (1.0 - sg));
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  std::size_t n = x.rows(), d = x.cols();
  if (gain.shape() != Shape{d} || bias.shape() != Shape{d}) {
    throw DimensionError("layer_norm: gain/bias must be [" + std::to_string(d) + "]");
  }
  auto xhat = std::make_shared<std::vector<double>>(n * d);
  auto inv_std = std::make_shared<std::vector<double>>(n);
  std::vector<double> out(n * d);
  const auto& xv = x.values();
  const auto& gv = gain.values();
  const auto& bv = bias.values();
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = xv.data() + i * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double c = row[j] - mu;
      var += c * c;
    }
    var /= static_cast<double>(d);
    double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      double xh = (row[j] - mu) * inv;
      (*xhat)[i * d + j] = xh;
      out[i * d + j] = xh * gv[j] + bv[j];
    }
  }
  return make_op(x.shape(), std::move(out), {x.node(), gain.node(), bias.node()},
                 [n, d, xhat, inv_std](Node& self) {
                   Node& px = *self.parents[0];
                   Node& pg = *self.parents[1];
                   Node& pb = *self.parents[2];
                   if (pg.requires_grad) pg.ensure_grad();
                   if (pb.requires_grad) pb.ensure_grad();
                   if (px.requires_grad) px.ensure_grad();
                   for (std::size_t i = 0; i < n; ++i) {
                     const double* g = self.grad.data() + i * d;
                     const double* xh = xhat->data() + i * d;
                     if (pg.requires_grad || pb.requires_grad) {
                       for (std::size_t j = 0; j < d; ++j) {
                         if (pg.requires_grad) pg.grad[j] += g[j] * xh[j];
                         if (pb.requires_grad) pb.grad[j] += g[j];
                       }
                     }
                     if (px.requires_grad) {
                       double mean_dxh = 0.0, mean_dxh_xh = 0.0;
                       for (std::size_t j = 0; j < d; ++j) {
                         double dxh = g[j] * pg.values[j];
                         mean_dxh += dxh;
                         mean_dxh_xh += dxh * xh[j];
                       }
                       mean_dxh /= static_cast<double>(d);
                       mean_dxh_xh /= static_cast<double>(d);
                       double inv = (*inv_std)[i];
                       for (std::size_t j = 0; j < d; ++j) {
                         double dxh = g[j] * pg.values[j];
                         px.grad[i * d + j] += inv * (dxh - mean_dxh - xh[j] * mean_dxh_xh);
                       }
                     }
                   }
                 });
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel()) {
    throw DimensionError("cosine_similarity: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  const auto& av = a.values();
  const auto& bv = b.values();
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    dot += av[i] * bv[i];
    na += av[i] * av[i];
    nb += bv[i] * bv[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (na < 1e-12 || nb < 1e-12) {
    throw DegenerateInputError("cosine_similarity: zero-norm input");
  }
  double c = dot / (na * nb);
  return make_op({1}, {c}, {a.node(), b.node()}, [na, nb, c](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    double g = self.grad[0];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < pa.values.size(); ++i)
        pa.grad[i] += g * (pb.values[i] / (na * nb) - c * pa.values[i] / (na * na));
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < pb.values.size(); ++i)
        pb.grad[i] += g * (pa.values[i] / (na * nb) - c * pb.values[i] / (nb * nb));
    }
  });
}

Tensor rotate_pairs(const Tensor& x, const std::vector<double>& angles,
                    std::size_t n_heads) {
  std::size_t n = x.rows(), d = x.cols();
  if (n_heads == 0 || d % n_heads != 0) {
    throw DimensionError("rotate_pairs: " + std::to_string(d) + " columns for " +
                         std::to_string(n_heads) + " heads");
  }
  std::size_t hd = d / n_heads;
  if (hd % 2 != 0) throw DimensionError("rotate_pairs: head dim must be even");
  std::size_t pairs = hd / 2;
  if (angles.size() != n * pairs) {
    throw DimensionError("rotate_pairs: expected " + std::to_string(n * pairs) +
                         " angles, got " + std::to_string(angles.size()));
  }
  auto ang = std::make_shared<std::vector<double>>(angles);
  std::vector<double> out(n * d);
  const auto& xv = x.values();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = ang->data() + i * pairs;
    for (std::size_t h = 0; h < n_heads; ++h) {
      const double* src = xv.data() + i * d + h * hd;
      double* dst = out.data() + i * d + h * hd;
      for (std::size_t p = 0; p < pairs; ++p) {
        double c = std::cos(arow[p]);
        double s = std::sin(arow[p]);
        double x0 = src[2 * p], x1 = src[2 * p + 1];
        dst[2 * p] = x0 * c - x1 * s;
        dst[2 * p + 1] = x0 * s + x1 * c;
      }
    }
  }
  mac_counter() += static_cast<std::uint64_t>(n) * d * 2;
  return make_op(x.shape(), std::move(out), {x.node()},
                 [n, d, hd, pairs, n_heads, ang](Node& self) {
                   Node& px = *self.parents[0];
                   if (!px.requires_grad) return;
                   px.ensure_grad();
                   for (std::size_t i = 0; i < n; ++i) {
                     const double* arow = ang->data() + i * pairs;
                     for (std::size_t h = 0; h < n_heads; ++h) {
                       const double* g = self.grad.data() + i * d + h * hd;
                       double* dst = px.grad.data() + i * d + h * hd;
                       for (std::size_t p = 0; p < pairs; ++p) {
                         double c = std::cos(arow[p]);
                         double s = std::sin(arow[p]);
                         double g0 = g[2 * p], g1 = g[2 * p + 1];
                         // inverse rotation
                         dst[2 * p] += g0 * c + g1 * s;
                         dst[2 * p + 1] += -g0 * s + g1 * c;
                       }
                     }
                   }
                 });
}

Tensor prefix_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                        std::size_t n_heads, const std::vector<std::size_t>& row_end) {
  std::size_t m = q.rows(), d = q.cols();
  std::size_t n = k.rows();
  if (k.cols() != d || v.cols() != d || v.rows() != n) {
    throw DimensionError("prefix_attention: q " + shape_str(q.shape()) + ", k " +
                         shape_str(k.shape()) + ", v " + shape_str(v.shape()));
  }
  if (n_heads == 0 || d % n_heads != 0) {
    throw DimensionError("prefix_attention: " + std::to_string(d) + " columns for " +
                         std::to_string(n_heads) + " heads");
  }
  if (row_end.size() != m) {
    throw DimensionError("prefix_attention: row_end size " + std::to_string(row_end.size()) +
                         " for " + std::to_string(m) + " query rows");
  }
  for (std::size_t e : row_end) {
    if (e >= n) throw RangeError("prefix_attention: row_end " + std::to_string(e));
  }
  std::size_t hd = d / n_heads;
  double sc = 1.0 / std::sqrt(static_cast<double>(hd));

  // Ragged per-row probability storage, shared across heads via a stride.
  auto offsets = std::make_shared<std::vector<std::size_t>>(m + 1);
  for (std::size_t i = 0; i < m; ++i) (*offsets)[i + 1] = (*offsets)[i] + row_end[i] + 1;
  std::size_t total = (*offsets)[m];
  auto probs = std::make_shared<std::vector<double>>(n_heads * total);
  auto ends = std::make_shared<std::vector<std::size_t>>(row_end);

  std::vector<double> out(m * d, 0.0);
  const auto& qv = q.values();
  const auto& kv = k.values();
  const auto& vv = v.values();
  std::vector<double> srow;
  for (std::size_t h = 0; h < n_heads; ++h) {
    std::size_t hb = h * hd;
    double* pbase = probs->data() + h * total;
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t e = row_end[i];
      std::size_t len = e + 1;
      srow.resize(len);
      const double* qi = qv.data() + i * d + hb;
      double mx = -1e300;
      for (std::size_t j = 0; j < len; ++j) {
        double s = dot_mc(qi, kv.data() + j * d + hb, hd) * sc;
        srow[j] = s;
        if (s > mx) mx = s;
      }
      double z = 0.0;
      for (std::size_t j = 0; j < len; ++j) {
        double ev = std::exp(srow[j] - mx);
        srow[j] = ev;
        z += ev;
      }
      double inv = 1.0 / z;
      double* prow = pbase + (*offsets)[i];
      double* orow = out.data() + i * d + hb;
      for (std::size_t j = 0; j < len; ++j) {
        double p = srow[j] * inv;
        prow[j] = p;
        const double* vj = vv.data() + j * d + hb;
        for (std::size_t t = 0; t < hd; ++t) orow[t] += p * vj[t];
      }
    }
  }
  mac_counter() += 2ull * d * total;

  return make_op({m, d}, std::move(out), {q.node(), k.node(), v.node()},
                 [m, d, hd, n_heads, sc, total, offsets, probs, ends](Node& self) {
                   Node& pq = *self.parents[0];
                   Node& pk = *self.parents[1];
                   Node& pv = *self.parents[2];
                   pq.ensure_grad();
                   pk.ensure_grad();
                   pv.ensure_grad();
                   std::vector<double> dp;
                   for (std::size_t h = 0; h < n_heads; ++h) {
                     std::size_t hb = h * hd;
                     const double* pbase = probs->data() + h * total;
                     for (std::size_t i = 0; i < m; ++i) {
                       std::size_t len = (*ends)[i] + 1;
                       const double* prow = pbase + (*offsets)[i];
                       const double* g = self.grad.data() + i * d + hb;
                       dp.resize(len);
                       double sdot = 0.0;
                       for (std::size_t j = 0; j < len; ++j) {
                         const double* vj = pv.values.data() + j * d + hb;
                         double s = dot_mc(g, vj, hd);
                         dp[j] = s;
                         sdot += prow[j] * s;
                         double* dvj = pv.grad.data() + j * d + hb;
                         for (std::size_t t = 0; t < hd; ++t) dvj[t] += prow[j] * g[t];
                       }
                       const double* qi = pq.values.data() + i * d + hb;
                       double* dqi = pq.grad.data() + i * d + hb;
                       for (std::size_t j = 0; j < len; ++j) {
                         double ds = prow[j] * (dp[j] - sdot) * sc;
                         const double* kj = pk.values.data() + j * d + hb;
                         double* dkj = pk.grad.data() + j * d + hb;
                         for (std::size_t t = 0; t < hd; ++t) {
                           dqi[t] += ds * kj[t];
                           dkj[t] += ds * qi[t];
                         }
                       }
                     }
                   }
                   mac_counter() += 4ull * d * total;
                 });
}

Tensor detach(const Tensor& a) {
  return Tensor::from_values(a.shape(), a.values(), false);
}

}  // namespace ppjudge
