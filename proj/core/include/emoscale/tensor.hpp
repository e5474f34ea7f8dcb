#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace emoscale {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Adds the contribution of `grad_out` into each parent's gradient buffer.
// A buffer pointer is null when that parent does not require gradients.
using BackwardFn = std::function<void(const Node& self, std::span<const double> grad_out,
                                      std::span<std::vector<double>*> parent_grads)>;

struct Node {
    std::uint64_t id = 0;
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    BackwardFn backward;
};

/// Handle to a node in a computation graph.
///
/// Copies share the underlying node. Values are treated as immutable once
/// built; the only sanctioned mutation is `mutable_data()`, used by
/// optimizers between graph constructions.
class Tensor {
public:
    Tensor();

    static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const { return node_->data.size(); }

    std::span<const double> data() const { return node_->data; }
    std::span<double> mutable_data() { return node_->data; }
    const std::vector<double>& values() const { return node_->data; }

    double item() const;
    double operator[](std::size_t flat) const { return node_->data[flat]; }
    double at(std::size_t row, std::size_t col) const;

    bool requires_grad() const { return node_->requires_grad; }
    std::uint64_t id() const { return node_->id; }

    // Same values, new leaf node with no history.
    Tensor detach(bool requires_grad = false) const;

    const NodePtr& node() const { return node_; }

    // Internal: wraps an op result and records history when gradients are enabled.
    static Tensor make_result(Shape shape, std::vector<double> data, std::vector<Tensor> parents,
                              BackwardFn backward);

private:
    explicit Tensor(NodePtr node) : node_(std::move(node)) {}
    NodePtr node_;
};

/// Gradients returned by `backward`, keyed by node id.
class GradientMap {
public:
    bool contains(const Tensor& t) const { return entries_.contains(t.id()); }
    const std::vector<double>* find(const Tensor& t) const;
    const std::vector<double>& at(const Tensor& t) const;
    std::size_t size() const { return entries_.size(); }

    std::unordered_map<std::uint64_t, std::vector<double>>& entries() { return entries_; }
    const std::unordered_map<std::uint64_t, std::vector<double>>& entries() const { return entries_; }

private:
    std::unordered_map<std::uint64_t, std::vector<double>> entries_;
};

bool grad_enabled();

// Disables graph recording on the current thread while alive.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

/// Reverse-mode sweep from a scalar loss. Every tensor in the graph with
/// requires_grad set receives an entry; contributions from multiple
/// consumers are summed.
GradientMap backward(const Tensor& loss);

// ---- operations ----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor relu(const Tensor& x);

// Adds a [d] vector to every row of a [..., d] tensor.
Tensor add_bias(const Tensor& x, const Tensor& bias);

// Mean of every element, as a scalar.
Tensor mean(const Tensor& x);
// Mean over the first axis of a rank-2 tensor: [n, d] -> [d].
Tensor mean_rows(const Tensor& x);

Tensor concat_last(std::span<const Tensor> parts);
Tensor concat_last(std::initializer_list<Tensor> parts);
// Stacks equally shaped tensors along a new leading axis.
Tensor stack(std::span<const Tensor> parts);

Tensor softmax(const Tensor& x, std::size_t axis);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);
Tensor avg_pool1d(const Tensor& x, std::size_t kernel, std::size_t stride);

}  // namespace emoscale
