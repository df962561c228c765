#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "skelact/errors.hpp"

namespace skelact {

// Dense tensor shapes are lists of positive extents; storage is row-major
// (last axis contiguous), 64-bit floats throughout.
using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::vector<std::size_t> row_major_strides(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {

// One node of the recorded computation graph. Outputs of recorded ops keep
// shared ownership of their inputs (`parents`) plus a closure that routes the
// node's accumulated gradient to them. The closure receives the node itself,
// so it never captures its own node (no ownership cycle).
struct TensorNode {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until a gradient is accumulated
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;  // empty for leaves
    const char* op = "leaf";

    std::size_t size() const { return data.size(); }
    // Allocates (zero-filled) on first use so constant subgraphs cost nothing.
    std::vector<double>& ensure_grad();
    void accumulate_grad(const std::vector<double>& g);
};

}  // namespace detail

// Value-semantics handle over a shared graph node. Copying a Tensor aliases
// the same node (parameters are shared between forward passes this way).
class Tensor {
  public:
    Tensor() = default;  // undefined handle; most ops reject it

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);  // shape {1}

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t size() const;
    std::size_t extent(std::size_t axis) const;

    const std::vector<double>& values() const;
    std::vector<double>& values();  // direct mutation (optimizer steps, init)
    bool requires_grad() const;
    void set_requires_grad(bool value);

    // Gradient buffer, zero-filled and shaped like the data. Allocates on
    // first access for nodes that never received a gradient.
    const std::vector<double>& grad() const;
    std::vector<double>& grad();
    void zero_grad();

    double item() const;  // size-1 tensors only

    std::shared_ptr<detail::TensorNode> node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::TensorNode> node)
        : node_(std::move(node)) {}

  private:
    std::shared_ptr<detail::TensorNode> node_;
};

// While alive, ops do not record the graph (outputs are plain values).
// Thread-local and nestable; used for evaluation passes.
class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    bool previous_;
};

bool grad_recording_enabled();

// Reverse-mode sweep from a scalar root: seeds d(root)/d(root) = 1, walks the
// recorded graph once in reverse topological order, and accumulates into every
// reachable node that requires gradients. Leaves not reachable from the root
// keep their (zero) gradients. Calling backward twice accumulates twice.
void backward(const Tensor& root);

}  // namespace skelact
