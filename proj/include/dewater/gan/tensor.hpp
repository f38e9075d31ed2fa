#pragma once

#include "dewater/error.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace dewater::gan {

/// (batch, channels, height, width); unused leading dimensions are 1.
using Shape = std::array<int, 4>;

inline std::size_t numel(const Shape& s) {
    return static_cast<std::size_t>(s[0]) * s[1] * s[2] * s[3];
}

inline std::string shape_str(const Shape& s) {
    return "(" + std::to_string(s[0]) + "," + std::to_string(s[1]) + "," + std::to_string(s[2]) +
           "," + std::to_string(s[3]) + ")";
}

struct Node {
    Shape shape{1, 1, 1, 1};
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> parents;
    /// Pushes this node's grad into its parents' grads.
    std::function<void(Node&)> backward;

    std::vector<double>& ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
        return grad;
    }
};

/**
 * Handle to a node of the computation graph. Copies share the node.
 *
 * Gradients only flow into nodes created with requires_grad; operations on
 * constants record nothing.
 */
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    static Tensor make(const Shape& shape, std::vector<double> values, bool requires_grad) {
        if (values.size() != numel(shape)) {
            throw Error(Errc::ShapeMismatch, "tensor data length does not match shape " + shape_str(shape));
        }
        auto n = std::make_shared<Node>();
        n->shape = shape;
        n->value = std::move(values);
        n->requires_grad = requires_grad;
        return Tensor(std::move(n));
    }

    static Tensor constant(const Shape& shape, std::vector<double> values) {
        return make(shape, std::move(values), false);
    }
    static Tensor constant(const Shape& shape, double fill) {
        return make(shape, std::vector<double>(numel(shape), fill), false);
    }
    static Tensor parameter(const Shape& shape, std::vector<double> values) {
        return make(shape, std::move(values), true);
    }
    static Tensor scalar(double v) { return constant({1, 1, 1, 1}, std::vector<double>{v}); }

    [[nodiscard]] bool defined() const noexcept { return node_ != nullptr; }
    [[nodiscard]] const Shape& shape() const { return node_->shape; }
    [[nodiscard]] int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
    [[nodiscard]] std::size_t size() const { return node_->value.size(); }
    [[nodiscard]] bool requires_grad() const { return node_->requires_grad; }

    [[nodiscard]] std::span<double> value() { return node_->value; }
    [[nodiscard]] std::span<const double> value() const { return node_->value; }
    [[nodiscard]] double item() const { return node_->value.at(0); }

    /// Empty span until a backward pass has reached this node.
    [[nodiscard]] std::span<const double> grad() const { return node_->grad; }
    [[nodiscard]] std::span<double> grad_mut() { return node_->ensure_grad(); }

    void zero_grad() {
        if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
    }

    /// Same values, cut from the graph.
    [[nodiscard]] Tensor detach() const { return constant(shape(), node_->value); }

    [[nodiscard]] Node& node() const { return *node_; }
    [[nodiscard]] const std::shared_ptr<Node>& node_ptr() const { return node_; }

    /**
     * Reverse-mode sweep from a scalar. Each reachable node runs its backward
     * closure exactly once, in reverse topological order. Interior grads are
     * reset first; leaf grads accumulate.
     */
    void backward() const {
        if (size() != 1) throw Error(Errc::ShapeMismatch, "backward() needs a scalar output");
        const auto order = topological_order();
        for (Node* n : order) {
            if (!n->parents.empty()) n->grad.assign(n->value.size(), 0.0);
        }
        node_->ensure_grad()[0] += 1.0;
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            Node* n = *it;
            if (n->backward && !n->grad.empty()) n->backward(*n);
        }
    }

    /// Nodes reachable from this one that take part in differentiation, parents first.
    [[nodiscard]] std::vector<Node*> topological_order() const {
        std::vector<Node*> order;
        std::unordered_set<Node*> seen;
        std::vector<std::pair<Node*, std::size_t>> stack;
        if (!node_->requires_grad) return order;
        stack.emplace_back(node_.get(), 0);
        seen.insert(node_.get());
        while (!stack.empty()) {
            auto& [n, next] = stack.back();
            if (next < n->parents.size()) {
                Node* p = n->parents[next++].get();
                if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
            } else {
                order.push_back(n);
                stack.pop_back();
            }
        }
        return order;
    }

private:
    std::shared_ptr<Node> node_;
};

namespace detail {

/// Creates a result node; records parents and the backward closure only if any input needs grad.
inline Tensor make_result(const Shape& shape, std::vector<double> values, const char* op,
                          std::initializer_list<Tensor> inputs, std::function<void(Node&)> bw) {
    auto n = std::make_shared<Node>();
    n->shape = shape;
    n->value = std::move(values);
    n->op = op;
    for (const auto& t : inputs) {
        if (t.requires_grad()) n->requires_grad = true;
    }
    if (n->requires_grad) {
        for (const auto& t : inputs) n->parents.push_back(t.node_ptr());
        n->backward = std::move(bw);
    }
    return Tensor(std::move(n));
}

/// Parent i's grad buffer, or nullptr when it does not need one.
inline double* parent_grad(Node& self, std::size_t i) {
    Node& p = *self.parents[i];
    return p.requires_grad ? p.ensure_grad().data() : nullptr;
}

} // namespace detail

} // namespace dewater::gan
