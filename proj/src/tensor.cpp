#include "skelact/tensor.hpp"

#include <sstream>
#include <unordered_set>

namespace skelact {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::vector<std::size_t> row_major_strides(const Shape& shape) {
    std::vector<std::size_t> strides(shape.size(), 1);
    for (std::size_t i = shape.size(); i-- > 1;) {
        strides[i - 1] = strides[i] * shape[i];
    }
    return strides;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

namespace detail {

std::vector<double>& TensorNode::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    return grad;
}

void TensorNode::accumulate_grad(const std::vector<double>& g) {
    ensure_grad();
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
}

}  // namespace detail

namespace {

void validate_shape(const Shape& shape) {
    for (std::size_t e : shape) {
        if (e == 0) {
            throw ArgumentError("tensor shape has a zero extent: " +
                                shape_to_string(shape));
        }
    }
}

std::shared_ptr<detail::TensorNode> make_node(Shape shape,
                                              std::vector<double> data,
                                              bool requires_grad) {
    auto node = std::make_shared<detail::TensorNode>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    return node;
}

thread_local bool g_grad_recording = true;

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    validate_shape(shape);
    std::size_t n = shape_size(shape);
    return Tensor(make_node(std::move(shape), std::vector<double>(n, 0.0),
                            requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    validate_shape(shape);
    std::size_t n = shape_size(shape);
    return Tensor(make_node(std::move(shape), std::vector<double>(n, value),
                            requires_grad));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> values,
                         bool requires_grad) {
    validate_shape(shape);
    if (values.size() != shape_size(shape)) {
        throw DimensionError("from_data: " + std::to_string(values.size()) +
                             " values for shape " + shape_to_string(shape));
    }
    return Tensor(make_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const {
    if (!node_) throw ArgumentError("operation on an undefined tensor");
    return node_->shape;
}

std::size_t Tensor::size() const { return shape_size(shape()); }

std::size_t Tensor::extent(std::size_t axis) const {
    const Shape& s = shape();
    if (axis >= s.size()) {
        throw ArgumentError("axis " + std::to_string(axis) +
                            " out of range for shape " + shape_to_string(s));
    }
    return s[axis];
}

const std::vector<double>& Tensor::values() const {
    if (!node_) throw ArgumentError("operation on an undefined tensor");
    return node_->data;
}

std::vector<double>& Tensor::values() {
    if (!node_) throw ArgumentError("operation on an undefined tensor");
    return node_->data;
}

bool Tensor::requires_grad() const {
    if (!node_) throw ArgumentError("operation on an undefined tensor");
    return node_->requires_grad;
}

void Tensor::set_requires_grad(bool value) {
    if (!node_) throw ArgumentError("operation on an undefined tensor");
    node_->requires_grad = value;
}

const std::vector<double>& Tensor::grad() const {
    if (!node_) throw ArgumentError("operation on an undefined tensor");
    return node_->ensure_grad();
}

std::vector<double>& Tensor::grad() {
    if (!node_) throw ArgumentError("operation on an undefined tensor");
    return node_->ensure_grad();
}

void Tensor::zero_grad() {
    if (!node_) throw ArgumentError("operation on an undefined tensor");
    if (!node_->grad.empty()) node_->grad.assign(node_->data.size(), 0.0);
}

double Tensor::item() const {
    if (size() != 1) {
        throw DimensionError("item: tensor has shape " +
                             shape_to_string(shape()) + ", expected size 1");
    }
    return values()[0];
}

NoGradGuard::NoGradGuard() : previous_(g_grad_recording) {
    g_grad_recording = false;
}

NoGradGuard::~NoGradGuard() { g_grad_recording = previous_; }

bool grad_recording_enabled() { return g_grad_recording; }

void backward(const Tensor& root) {
    if (!root.defined()) throw ArgumentError("backward: undefined root");
    if (root.size() != 1) {
        throw ArgumentError("backward: root must be a scalar, got shape " +
                            shape_to_string(root.shape()));
    }
    auto root_node = root.node();
    if (!root_node->requires_grad) {
        throw ArgumentError(
            "backward: root does not require gradients (was it recorded?)");
    }

    // Iterative post-order DFS over parents -> reverse topological order.
    std::vector<detail::TensorNode*> order;
    std::unordered_set<detail::TensorNode*> visited;
    struct Frame {
        detail::TensorNode* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({root_node.get(), 0});
    visited.insert(root_node.get());
    while (!stack.empty()) {
        Frame& top = stack.back();
        if (top.next_parent < top.node->parents.size()) {
            detail::TensorNode* parent =
                top.node->parents[top.next_parent++].get();
            if (visited.insert(parent).second) stack.push_back({parent, 0});
        } else {
            order.push_back(top.node);
            stack.pop_back();
        }
    }

    // Intermediate grads are transient per sweep: clearing them here makes a
    // repeated backward on the same tape distribute exactly one more unit of
    // root gradient (leaves keep accumulating across sweeps and tapes).
    for (detail::TensorNode* node : order) {
        if (node->backward_fn) node->grad.clear();
    }
    root_node->ensure_grad();
    root_node->grad[0] += 1.0;

    for (std::size_t i = order.size(); i-- > 0;) {
        detail::TensorNode* node = order[i];
        if (!node->backward_fn) continue;         // leaf
        if (node->grad.empty()) continue;         // no gradient reached it
        node->backward_fn(*node);
    }
}

}  // namespace skelact
