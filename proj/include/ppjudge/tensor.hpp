#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ppjudge {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad{false};
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad, accumulates into parents' grad. Empty for leaves.
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  }
};

}  // namespace detail

/// Counts multiply-add operations performed by the matmul, attention and
/// rotation kernels. Cheap instrumentation for cost comparisons.
std::uint64_t& mac_counter();

/// While alive, newly created tensors record no graph edges: operations
/// compute values only. Nestable.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

bool grad_enabled();

/// Dense row-major tensor of doubles with reverse-mode autodiff.
/// Copying a Tensor copies a cheap handle; storage is shared.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, double value, bool requires_grad = false);
  static Tensor scalar(double value);
  static Tensor from_values(const Shape& shape, std::vector<double> values,
                            bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t numel() const;
  std::size_t rows() const;  // shape[0] of a 2-D tensor
  std::size_t cols() const;  // shape[1] of a 2-D tensor

  const std::vector<double>& values() const;
  /// Mutable access to raw values. Only valid on leaves between graph builds
  /// (parameter updates, finite-difference probes).
  std::vector<double>& values_mut();

  double item() const;                 // requires numel() == 1
  double at(std::size_t i) const;      // flat index
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const;
  void set_requires_grad(bool v);
  bool is_leaf() const;

  /// Gradient buffer; empty vector if no gradient has been accumulated.
  const std::vector<double>& grad() const;
  void zero_grad();

  std::shared_ptr<detail::Node> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::Node> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Runs reverse-mode accumulation from a scalar loss. Gradients accumulate
/// into every node that requires grad; call zero_grad between steps. `seed`
/// scales the whole backward pass (useful for mean-over-batch weighting).
void backward(const Tensor& loss, double seed = 1.0);

/// Zeroes the gradients of every node reachable from `root`. Used when the
/// same graph must be backpropagated from several roots in turn.
void zero_graph_grads(const Tensor& root);

// ---- elementwise and structural operations ----

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor reciprocal(const Tensor& a);
Tensor square(const Tensor& a);

/// Adds a row vector [d] to every row of a matrix [n, d] (bias broadcast).
Tensor add_rowvec(const Tensor& m, const Tensor& v);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, const Shape& shape);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t count);

/// out[i, :] = a[idx[i], :]
Tensor gather_rows(const Tensor& a, const std::vector<std::size_t>& idx);

/// out = base; out[idx[i], :] += rows[i, :]. idx entries may repeat.
Tensor scatter_add_rows(const Tensor& base, const std::vector<std::size_t>& idx,
                        const Tensor& rows);

/// out[i] = a.values()[flat_idx[i]]
Tensor gather_elements(const Tensor& a, const std::vector<std::size_t>& flat_idx);

/// out[i, :] = m[i, :] * w[i]
Tensor mul_rowwise(const Tensor& m, const Tensor& w);

Tensor sum(const Tensor& a);        // -> scalar
Tensor mean(const Tensor& a);       // -> scalar
Tensor row_sum(const Tensor& m);    // [n, d] -> [n]
Tensor mean_rows(const Tensor& m);  // [n, d] -> [d]

/// Softmax along `axis`. Numerically stabilised by max subtraction.
Tensor softmax(const Tensor& a, std::size_t axis);

Tensor silu(const Tensor& a);

/// Row-wise layer normalisation with learned gain and bias, eps inside sqrt.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

/// Cosine similarity of two equal-length vectors (rank-1 or [1, d]).
/// Throws DegenerateInputError if either norm is below 1e-12.
Tensor cosine_similarity(const Tensor& a, const Tensor& b);

/// Rotates consecutive value pairs inside each attention head.
/// x: [n, h*hd], angles: [n, hd/2] (same angles applied to every head).
/// Pair (2i, 2i+1) of each head turns by angles[row][i].
Tensor rotate_pairs(const Tensor& x, const std::vector<double>& angles,
                    std::size_t n_heads);

/// Multi-head scaled dot-product attention in which row i attends to rows
/// 0..row_end[i] inclusive. q, k, v: [n, h*hd]. Scale is 1/sqrt(hd).
Tensor prefix_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                        std::size_t n_heads,
                        const std::vector<std::size_t>& row_end);

/// Value copy with no parent edges: gradients stop here.
Tensor detach(const Tensor& a);

}  // namespace ppjudge
