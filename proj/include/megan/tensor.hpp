// SPDX-License-Identifier: Apache-2.0
#ifndef MEGAN_TENSOR_HPP
#define MEGAN_TENSOR_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "megan/error.hpp"

namespace megan {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);
bool same_shape(const Shape& a, const Shape& b);

namespace detail {

/// One record in the computation graph. Interior nodes carry a backward_fn
/// that reads this node's grad and accumulates into parents; leaves have none.
struct Node {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until first touched
    bool requires_grad = false;
    std::string name;  // parameter path for named leaves
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    bool is_leaf() const { return !backward_fn; }
    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
    }
};

}  // namespace detail

/// Dense real tensor participating in a reverse-mode differentiation graph.
/// Copies are shallow handles onto the same graph node; 64-bit values in
/// row-major order throughout.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from_values(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value);

    /// Op-author factory: wraps an interior node with parents and a backward rule.
    /// backward_fn may be empty when no parent requires gradient.
    static Tensor make_op(Shape shape, std::vector<double> values,
                          std::vector<Tensor> parents,
                          std::function<void(detail::Node&)> backward_fn);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t size() const { return node_->values.size(); }
    std::size_t rows() const { return node_->shape.at(0); }
    std::size_t cols() const { return node_->shape.at(1); }
    bool is_matrix() const { return node_->shape.size() == 2; }

    std::span<const double> values() const { return node_->values; }
    /// In-place mutation is reserved for leaves (parameter updates, buffers).
    std::span<double> values_mut();

    double at(std::size_t i) const { return node_->values[i]; }
    double at(std::size_t r, std::size_t c) const { return node_->values[r * cols() + c]; }

    /// Scalar extraction; contract error unless the tensor holds one element.
    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    const std::string& name() const { return node_->name; }
    void set_name(std::string name) { node_->name = std::move(name); }

    bool has_grad() const { return node_ && node_->grad.size() == node_->values.size(); }
    std::span<const double> grad() const { return node_->grad; }
    std::span<double> grad_mut() { return node_->grad; }
    void zero_grad() {
        node_->grad.assign(node_->values.size(), 0.0);
    }

    detail::Node* node() const { return node_.get(); }
    const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
    std::shared_ptr<detail::Node> node_;
};

/// Named trainable leaf; name is unique within a model and keyed in checkpoints.
struct Parameter {
    Tensor tensor;
    std::string name;
};

/// Reverse-mode sweep from a scalar loss. Gradients of leaf tensors accumulate
/// across calls until explicitly zeroed; interior gradients are scratch that is
/// reset at the start of every sweep, so a graph may be backwarded repeatedly.
void backward(const Tensor& loss);

// --- Linear algebra ---
Tensor matmul(const Tensor& a, const Tensor& b);
/// Adds a length-q bias vector to every row of a [b x q] matrix.
Tensor add_bias(const Tensor& x, const Tensor& bias);
/// Concatenates matrices with equal row counts along columns.
Tensor concat_cols(const std::vector<Tensor>& parts);
/// Per-column mean over rows of a [b x n] matrix; result shape {n}.
Tensor column_means(const Tensor& x);

// --- Activations ---
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double negative_slope);
Tensor sigmoid(const Tensor& x);
/// Numerically stable log(1 + exp(x)).
Tensor softplus(const Tensor& x);
/// Row-stable softmax along `axis` (0 = down columns, 1 = across rows).
Tensor softmax(const Tensor& x, int axis);

// --- Elementwise / reductions ---
Tensor add(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double s);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, double s);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, double s);
Tensor neg(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

/// Same values, cut from the graph: requires_grad false, no parents.
Tensor detach(const Tensor& x);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator+(const Tensor& a, double s) { return add(a, s); }
inline Tensor operator-(const Tensor& a, double s) { return sub(a, s); }
inline Tensor operator*(const Tensor& a, double s) { return mul(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return mul(a, s); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

// --- Batch normalization ---
struct BatchNormState {
    std::vector<double> running_mean;
    std::vector<double> running_var;
};

enum class NetMode { Train, Eval };

/// Per-column batch normalization of a [b x d] matrix. Train mode normalizes
/// by batch statistics (epsilon 1e-5) and updates running stats in place with
/// momentum 0.1; eval mode applies the running statistics. Train mode needs
/// b >= 2 rows.
Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 BatchNormState& state, NetMode mode);

}  // namespace megan

#endif
