// SPDX-License-Identifier: Apache-2.0
#include "megan/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace megan {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return from_values(std::move(shape), {}, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    std::vector<double> values(shape_size(shape), value);
    return from_values(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
    auto node = std::make_shared<detail::Node>();
    const std::size_t n = shape_size(shape);
    if (values.empty()) values.assign(n, 0.0);
    if (values.size() != n)
        throw ShapeError("tensor values length " + std::to_string(values.size()) +
                         " does not match shape " + shape_str(shape));
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return from_values({1}, {value}); }

Tensor Tensor::make_op(Shape shape, std::vector<double> values,
                       std::vector<Tensor> parents,
                       std::function<void(detail::Node&)> backward_fn) {
    auto node = std::make_shared<detail::Node>();
    if (values.size() != shape_size(shape))
        throw ShapeError("op output length " + std::to_string(values.size()) +
                         " does not match shape " + shape_str(shape));
    node->shape = std::move(shape);
    node->values = std::move(values);
    bool needs_grad = false;
    for (const Tensor& p : parents) needs_grad = needs_grad || p.requires_grad();
    node->requires_grad = needs_grad;
    if (needs_grad) {
        node->parents.reserve(parents.size());
        for (const Tensor& p : parents) node->parents.push_back(p.node_ptr());
        node->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(node));
}

std::span<double> Tensor::values_mut() {
    if (!node_->is_leaf())
        throw ContractError("in-place mutation is only valid on leaf tensors");
    return node_->values;
}

double Tensor::item() const {
    if (!node_ || node_->values.size() != 1)
        throw ContractError("item() requires a scalar tensor, got shape " +
                            (node_ ? shape_str(node_->shape) : std::string("<empty>")));
    return node_->values[0];
}

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1)
        throw ContractError("backward requires a scalar loss, got shape " +
                            (loss.defined() ? shape_str(loss.shape()) : std::string("<empty>")));

    detail::Node* root = loss.node();
    if (!root->requires_grad && root->is_leaf()) {
        // A constant scalar has no gradient to propagate.
        return;
    }

    // Iterative post-order DFS; each node enters the order exactly once.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> visited;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next_child] = stack.back();
        if (next_child < node->parents.size()) {
            detail::Node* child = node->parents[next_child++].get();
            if (child->requires_grad && visited.insert(child).second)
                stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    // order is topological from leaves to root; walk it in reverse.

    // Interior gradients are per-sweep scratch; leaf gradients persist so
    // repeated sweeps accumulate into parameters only.
    for (detail::Node* node : order)
        if (!node->is_leaf()) node->grad.assign(node->values.size(), 0.0);

    root->ensure_grad();
    root->grad[0] += 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* node = *it;
        if (node->backward_fn) node->backward_fn(*node);
    }
}

}  // namespace megan
