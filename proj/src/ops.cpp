#include "skelact/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace skelact {

namespace {

using detail::TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

void require_defined(const Tensor& t, const char* op) {
    if (!t.defined()) {
        throw ArgumentError(std::string(op) + ": undefined tensor argument");
    }
}

Tensor make_output(Shape shape, std::vector<double> data) {
    return Tensor::from_data(std::move(shape), std::move(data), false);
}

// Marks `out` as recorded with the given inputs and gradient route. Call only
// when recording is enabled and at least one input requires gradients.
void record(const Tensor& out, std::vector<NodePtr> parents,
            std::function<void(TensorNode&)> fn, const char* op) {
    NodePtr node = out.node();
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(fn);
    node->op = op;
}

bool recording(std::initializer_list<const Tensor*> inputs) {
    if (!grad_recording_enabled()) return false;
    for (const Tensor* t : inputs) {
        if (t->defined() && t->requires_grad()) return true;
    }
    return false;
}

// Decomposes a shape around one axis: x viewed as [outer][extent][inner] with
// the leading `lead` axes folded into outer as well when lead > 0.
struct AxisView {
    std::size_t outer;
    std::size_t extent;
    std::size_t inner;
};

AxisView axis_view(const Shape& shape, std::size_t axis) {
    AxisView v{1, shape[axis], 1};
    for (std::size_t i = 0; i < axis; ++i) v.outer *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
    return v;
}

void check_axis(const Shape& shape, std::size_t axis, const char* op) {
    if (axis >= shape.size()) {
        throw ArgumentError(std::string(op) + ": axis " + std::to_string(axis) +
                            " out of range for shape " + shape_to_string(shape));
    }
}

}  // namespace

// --- structural ---------------------------------------------------------

Tensor reshape(const Tensor& x, Shape new_shape) {
    require_defined(x, "reshape");
    for (std::size_t e : new_shape) {
        if (e == 0) {
            throw ArgumentError("reshape: zero extent in target shape " +
                                shape_to_string(new_shape));
        }
    }
    if (shape_size(new_shape) != x.size()) {
        throw DimensionError("reshape: cannot view " +
                             shape_to_string(x.shape()) + " as " +
                             shape_to_string(new_shape));
    }
    Tensor out = make_output(std::move(new_shape), x.values());
    if (recording({&x})) {
        NodePtr xn = x.node();
        record(out, {xn},
               [xn](TensorNode& self) {
                   if (xn->requires_grad) xn->accumulate_grad(self.grad);
               },
               "reshape");
    }
    return out;
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& perm) {
    require_defined(x, "permute");
    const Shape& xs = x.shape();
    if (perm.size() != xs.size()) {
        throw ArgumentError("permute: permutation has " +
                            std::to_string(perm.size()) + " entries for rank " +
                            std::to_string(xs.size()));
    }
    std::vector<bool> seen(perm.size(), false);
    for (std::size_t p : perm) {
        if (p >= perm.size() || seen[p]) {
            throw ArgumentError("permute: not a permutation of the axes");
        }
        seen[p] = true;
    }
    Shape out_shape(perm.size());
    for (std::size_t d = 0; d < perm.size(); ++d) out_shape[d] = xs[perm[d]];

    const std::vector<std::size_t> x_str = row_major_strides(xs);
    const std::vector<std::size_t> o_str = row_major_strides(out_shape);
    const std::size_t n = x.size();
    const std::size_t rank = xs.size();

    // out[(i_0,...,i_{r-1})] = x[j] with j_{perm[d]} = i_d.
    std::vector<std::size_t> map(n);  // out flat -> x flat
    for (std::size_t of = 0; of < n; ++of) {
        std::size_t rem = of, xf = 0;
        for (std::size_t d = 0; d < rank; ++d) {
            std::size_t id = rem / o_str[d];
            rem -= id * o_str[d];
            xf += id * x_str[perm[d]];
        }
        map[of] = xf;
    }

    std::vector<double> data(n);
    const std::vector<double>& xv = x.values();
    for (std::size_t of = 0; of < n; ++of) data[of] = xv[map[of]];

    Tensor out = make_output(std::move(out_shape), std::move(data));
    if (recording({&x})) {
        NodePtr xn = x.node();
        record(out, {xn},
               [xn, map](TensorNode& self) {
                   if (!xn->requires_grad) return;
                   std::vector<double>& gx = xn->ensure_grad();
                   for (std::size_t of = 0; of < self.grad.size(); ++of) {
                       gx[map[of]] += self.grad[of];
                   }
               },
               "permute");
    }
    return out;
}

Tensor transpose(const Tensor& x) {
    require_defined(x, "transpose");
    if (x.rank() != 2) {
        throw DimensionError("transpose: expected a 2-D tensor, got shape " +
                             shape_to_string(x.shape()));
    }
    return permute(x, {1, 0});
}

Tensor narrow(const Tensor& x, std::size_t axis, std::size_t start,
              std::size_t length) {
    require_defined(x, "narrow");
    const Shape& xs = x.shape();
    check_axis(xs, axis, "narrow");
    if (length == 0 || start + length > xs[axis]) {
        throw ArgumentError("narrow: window [" + std::to_string(start) + "," +
                            std::to_string(start + length) +
                            ") out of range for extent " +
                            std::to_string(xs[axis]));
    }
    AxisView v = axis_view(xs, axis);
    Shape out_shape = xs;
    out_shape[axis] = length;

    std::vector<double> data(v.outer * length * v.inner);
    const std::vector<double>& xv = x.values();
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t l = 0; l < length; ++l) {
            const double* src = &xv[(o * v.extent + start + l) * v.inner];
            double* dst = &data[(o * length + l) * v.inner];
            std::copy(src, src + v.inner, dst);
        }
    }

    Tensor out = make_output(std::move(out_shape), std::move(data));
    if (recording({&x})) {
        NodePtr xn = x.node();
        record(out, {xn},
               [xn, v, start, length](TensorNode& self) {
                   if (!xn->requires_grad) return;
                   std::vector<double>& gx = xn->ensure_grad();
                   for (std::size_t o = 0; o < v.outer; ++o) {
                       for (std::size_t l = 0; l < length; ++l) {
                           const double* g =
                               &self.grad[(o * length + l) * v.inner];
                           double* dst =
                               &gx[(o * v.extent + start + l) * v.inner];
                           for (std::size_t i = 0; i < v.inner; ++i) {
                               dst[i] += g[i];
                           }
                       }
                   }
               },
               "narrow");
    }
    return out;
}

// --- arithmetic ---------------------------------------------------------

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " +
                             shape_to_string(a.shape()) + " vs " +
                             shape_to_string(b.shape()));
    }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_defined(a, "add");
    require_defined(b, "add");
    check_same_shape(a, b, "add");
    const std::vector<double>& av = a.values();
    const std::vector<double>& bv = b.values();
    std::vector<double> data(av.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = av[i] + bv[i];
    Tensor out = make_output(a.shape(), std::move(data));
    if (recording({&a, &b})) {
        NodePtr an = a.node(), bn = b.node();
        record(out, {an, bn},
               [an, bn](TensorNode& self) {
                   if (an->requires_grad) an->accumulate_grad(self.grad);
                   if (bn->requires_grad) bn->accumulate_grad(self.grad);
               },
               "add");
    }
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_defined(a, "mul");
    require_defined(b, "mul");
    check_same_shape(a, b, "mul");
    const std::vector<double>& av = a.values();
    const std::vector<double>& bv = b.values();
    std::vector<double> data(av.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = av[i] * bv[i];
    Tensor out = make_output(a.shape(), std::move(data));
    if (recording({&a, &b})) {
        NodePtr an = a.node(), bn = b.node();
        record(out, {an, bn},
               [an, bn](TensorNode& self) {
                   if (an->requires_grad) {
                       std::vector<double>& ga = an->ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i) {
                           ga[i] += self.grad[i] * bn->data[i];
                       }
                   }
                   if (bn->requires_grad) {
                       std::vector<double>& gb = bn->ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i) {
                           gb[i] += self.grad[i] * an->data[i];
                       }
                   }
               },
               "mul");
    }
    return out;
}

Tensor add_scalar(const Tensor& x, double c) {
    require_defined(x, "add_scalar");
    std::vector<double> data(x.values());
    for (double& v : data) v += c;
    Tensor out = make_output(x.shape(), std::move(data));
    if (recording({&x})) {
        NodePtr xn = x.node();
        record(out, {xn},
               [xn](TensorNode& self) {
                   if (xn->requires_grad) xn->accumulate_grad(self.grad);
               },
               "add_scalar");
    }
    return out;
}

Tensor mul_scalar(const Tensor& x, double c) {
    require_defined(x, "mul_scalar");
    std::vector<double> data(x.values());
    for (double& v : data) v *= c;
    Tensor out = make_output(x.shape(), std::move(data));
    if (recording({&x})) {
        NodePtr xn = x.node();
        record(out, {xn},
               [xn, c](TensorNode& self) {
                   if (!xn->requires_grad) return;
                   std::vector<double>& gx = xn->ensure_grad();
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                       gx[i] += self.grad[i] * c;
                   }
               },
               "mul_scalar");
    }
    return out;
}

Tensor scale_by(const Tensor& x, const Tensor& s) {
    require_defined(x, "scale_by");
    require_defined(s, "scale_by");
    if (s.size() != 1) {
        throw DimensionError("scale_by: scale must have size 1, got shape " +
                             shape_to_string(s.shape()));
    }
    const double sv = s.values()[0];
    std::vector<double> data(x.values());
    for (double& v : data) v *= sv;
    Tensor out = make_output(x.shape(), std::move(data));
    if (recording({&x, &s})) {
        NodePtr xn = x.node(), sn = s.node();
        record(out, {xn, sn},
               [xn, sn, sv](TensorNode& self) {
                   if (xn->requires_grad) {
                       std::vector<double>& gx = xn->ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i) {
                           gx[i] += self.grad[i] * sv;
                       }
                   }
                   if (sn->requires_grad) {
                       double acc = 0.0;
                       for (std::size_t i = 0; i < self.grad.size(); ++i) {
                           acc += self.grad[i] * xn->data[i];
                       }
                       sn->ensure_grad()[0] += acc;
                   }
               },
               "scale_by");
    }
    return out;
}

Tensor mul_broadcast(const Tensor& x, const Tensor& m,
                     const std::vector<std::size_t>& axes) {
    require_defined(x, "mul_broadcast");
    require_defined(m, "mul_broadcast");
    const Shape& xs = x.shape();
    if (axes.empty()) throw ArgumentError("mul_broadcast: no axes given");
    for (std::size_t j = 0; j < axes.size(); ++j) {
        check_axis(xs, axes[j], "mul_broadcast");
        if (j > 0 && axes[j] <= axes[j - 1]) {
            throw ArgumentError("mul_broadcast: axes must be strictly ascending");
        }
    }
    if (m.rank() != axes.size()) {
        throw DimensionError("mul_broadcast: factor rank " +
                             std::to_string(m.rank()) + " does not match " +
                             std::to_string(axes.size()) + " axes");
    }
    for (std::size_t j = 0; j < axes.size(); ++j) {
        if (m.shape()[j] != xs[axes[j]]) {
            throw DimensionError(
                "mul_broadcast: factor shape " + shape_to_string(m.shape()) +
                " does not match extents at axes of " + shape_to_string(xs));
        }
    }

    const std::vector<std::size_t> x_str = row_major_strides(xs);
    const std::vector<std::size_t> m_str = row_major_strides(m.shape());
    const std::size_t n = x.size();

    // x flat -> m flat, via the selected axes of the multi-index.
    std::vector<std::size_t> map(n);
    for (std::size_t xf = 0; xf < n; ++xf) {
        std::size_t mf = 0;
        for (std::size_t j = 0; j < axes.size(); ++j) {
            std::size_t idx = (xf / x_str[axes[j]]) % xs[axes[j]];
            mf += idx * m_str[j];
        }
        map[xf] = mf;
    }

    const std::vector<double>& xv = x.values();
    const std::vector<double>& mv = m.values();
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = xv[i] * mv[map[i]];

    Tensor out = make_output(xs, std::move(data));
    if (recording({&x, &m})) {
        NodePtr xn = x.node(), mn = m.node();
        record(out, {xn, mn},
               [xn, mn, map](TensorNode& self) {
                   if (xn->requires_grad) {
                       std::vector<double>& gx = xn->ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i) {
                           gx[i] += self.grad[i] * mn->data[map[i]];
                       }
                   }
                   if (mn->requires_grad) {
                       std::vector<double>& gm = mn->ensure_grad();
                       for (std::size_t i = 0; i < self.grad.size(); ++i) {
                           gm[map[i]] += self.grad[i] * xn->data[i];
                       }
                   }
               },
               "mul_broadcast");
    }
    return out;
}

// --- reductions / normalization ----------------------------------------

Tensor sum_all(const Tensor& x) {
    require_defined(x, "sum_all");
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    Tensor out = make_output({1}, {acc});
    if (recording({&x})) {
        NodePtr xn = x.node();
        record(out, {xn},
               [xn](TensorNode& self) {
                   if (!xn->requires_grad) return;
                   std::vector<double>& gx = xn->ensure_grad();
                   const double g = self.grad[0];
                   for (double& v : gx) v += g;
               },
               "sum_all");
    }
    return out;
}

Tensor mean_pool(const Tensor& x, std::vector<std::size_t> axes) {
    require_defined(x, "mean_pool");
    const Shape& xs = x.shape();
    std::vector<bool> pooled(xs.size(), false);
    for (std::size_t a : axes) {
        check_axis(xs, a, "mean_pool");
        if (pooled[a]) {
            throw ArgumentError("mean_pool: duplicate axis " +
                                std::to_string(a));
        }
        pooled[a] = true;
    }
    if (axes.empty()) {
        // Identity (still a recorded op so gradients pass through).
        Tensor out = make_output(xs, x.values());
        if (recording({&x})) {
            NodePtr xn = x.node();
            record(out, {xn},
                   [xn](TensorNode& self) {
                       if (xn->requires_grad) xn->accumulate_grad(self.grad);
                   },
                   "mean_pool");
        }
        return out;
    }

    Shape out_shape;
    std::vector<std::size_t> kept;
    for (std::size_t d = 0; d < xs.size(); ++d) {
        if (!pooled[d]) {
            out_shape.push_back(xs[d]);
            kept.push_back(d);
        }
    }
    if (out_shape.empty()) out_shape = {1};

    const std::vector<std::size_t> x_str = row_major_strides(xs);
    const std::vector<std::size_t> o_str = row_major_strides(out_shape);
    const std::size_t n = x.size();
    const std::size_t out_n = shape_size(out_shape);
    const double inv_count = static_cast<double>(out_n) / static_cast<double>(n);

    std::vector<std::size_t> map(n);  // x flat -> out flat
    for (std::size_t xf = 0; xf < n; ++xf) {
        std::size_t of = 0;
        for (std::size_t j = 0; j < kept.size(); ++j) {
            std::size_t idx = (xf / x_str[kept[j]]) % xs[kept[j]];
            of += idx * o_str[j];
        }
        map[xf] = of;
    }

    std::vector<double> data(out_n, 0.0);
    const std::vector<double>& xv = x.values();
    for (std::size_t i = 0; i < n; ++i) data[map[i]] += xv[i];
    for (double& v : data) v *= inv_count;

    Tensor out = make_output(std::move(out_shape), std::move(data));
    if (recording({&x})) {
        NodePtr xn = x.node();
        record(out, {xn},
               [xn, map, inv_count](TensorNode& self) {
                   if (!xn->requires_grad) return;
                   std::vector<double>& gx = xn->ensure_grad();
                   for (std::size_t i = 0; i < gx.size(); ++i) {
                       gx[i] += self.grad[map[i]] * inv_count;
                   }
               },
               "mean_pool");
    }
    return out;
}

Tensor softmax(const Tensor& x, std::size_t axis) {
    require_defined(x, "softmax");
    const Shape& xs = x.shape();
    check_axis(xs, axis, "softmax");
    AxisView v = axis_view(xs, axis);

    const std::vector<double>& xv = x.values();
    std::vector<double> data(xv.size());
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t i = 0; i < v.inner; ++i) {
            const std::size_t base = o * v.extent * v.inner + i;
            double mx = xv[base];
            for (std::size_t e = 1; e < v.extent; ++e) {
                mx = std::max(mx, xv[base + e * v.inner]);
            }
            double denom = 0.0;
            for (std::size_t e = 0; e < v.extent; ++e) {
                const double ev = std::exp(xv[base + e * v.inner] - mx);
                data[base + e * v.inner] = ev;
                denom += ev;
            }
            for (std::size_t e = 0; e < v.extent; ++e) {
                data[base + e * v.inner] /= denom;
            }
        }
    }

    Tensor out = make_output(xs, std::move(data));
    if (recording({&x})) {
        NodePtr xn = x.node();
        NodePtr on = out.node();
        record(out, {xn},
               [xn, on, v](TensorNode& self) {
                   if (!xn->requires_grad) return;
                   std::vector<double>& gx = xn->ensure_grad();
                   const std::vector<double>& y = on->data;
                   for (std::size_t o = 0; o < v.outer; ++o) {
                       for (std::size_t i = 0; i < v.inner; ++i) {
                           const std::size_t base = o * v.extent * v.inner + i;
                           double dot = 0.0;
                           for (std::size_t e = 0; e < v.extent; ++e) {
                               const std::size_t k = base + e * v.inner;
                               dot += self.grad[k] * y[k];
                           }
                           for (std::size_t e = 0; e < v.extent; ++e) {
                               const std::size_t k = base + e * v.inner;
                               gx[k] += y[k] * (self.grad[k] - dot);
                           }
                       }
                   }
               },
               "softmax");
    }
    return out;
}

// --- activations --------------------------------------------------------

Tensor relu(const Tensor& x) {
    require_defined(x, "relu");
    const std::vector<double>& xv = x.values();
    std::vector<double> data(xv.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    }
    Tensor out = make_output(x.shape(), std::move(data));
    if (recording({&x})) {
        NodePtr xn = x.node();
        record(out, {xn},
               [xn](TensorNode& self) {
                   if (!xn->requires_grad) return;
                   std::vector<double>& gx = xn->ensure_grad();
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                       if (xn->data[i] > 0.0) gx[i] += self.grad[i];
                   }
               },
               "relu");
    }
    return out;
}

Tensor sigmoid(const Tensor& x) {
    require_defined(x, "sigmoid");
    const std::vector<double>& xv = x.values();
    std::vector<double> data(xv.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = 1.0 / (1.0 + std::exp(-xv[i]));
    }
    Tensor out = make_output(x.shape(), std::move(data));
    if (recording({&x})) {
        NodePtr xn = x.node();
        NodePtr on = out.node();
        record(out, {xn},
               [xn, on](TensorNode& self) {
                   if (!xn->requires_grad) return;
                   std::vector<double>& gx = xn->ensure_grad();
                   const std::vector<double>& y = on->data;
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                       gx[i] += self.grad[i] * y[i] * (1.0 - y[i]);
                   }
               },
               "sigmoid");
    }
    return out;
}

Tensor activation(Activation kind, const Tensor& x) {
    switch (kind) {
        case Activation::relu: return relu(x);
        case Activation::sigmoid: return sigmoid(x);
    }
    throw ArgumentError("activation: unknown kind");
}

// --- linear maps --------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_defined(a, "matmul");
    require_defined(b, "matmul");
    if (a.rank() != 2 || b.rank() != 2) {
        throw DimensionError("matmul: expected 2-D tensors, got " +
                             shape_to_string(a.shape()) + " and " +
                             shape_to_string(b.shape()));
    }
    const std::size_t m = a.shape()[0], k = a.shape()[1];
    const std::size_t k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2) {
        throw DimensionError("matmul: inner extents differ, " +
                             shape_to_string(a.shape()) + " x " +
                             shape_to_string(b.shape()));
    }

    const std::vector<double>& av = a.values();
    const std::vector<double>& bv = b.values();
    std::vector<double> data(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = av[i * k + kk];
            const double* brow = &bv[kk * n];
            double* orow = &data[i * n];
            for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
        }
    }

    Tensor out = make_output({m, n}, std::move(data));
    if (recording({&a, &b})) {
        NodePtr an = a.node(), bn = b.node();
        record(out, {an, bn},
               [an, bn, m, k, n](TensorNode& self) {
                   const std::vector<double>& g = self.grad;
                   if (an->requires_grad) {
                       std::vector<double>& ga = an->ensure_grad();
                       for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t kk = 0; kk < k; ++kk) {
                               double acc = 0.0;
                               const double* brow = &bn->data[kk * n];
                               const double* grow = &g[i * n];
                               for (std::size_t j = 0; j < n; ++j) {
                                   acc += grow[j] * brow[j];
                               }
                               ga[i * k + kk] += acc;
                           }
                       }
                   }
                   if (bn->requires_grad) {
                       std::vector<double>& gb = bn->ensure_grad();
                       for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t kk = 0; kk < k; ++kk) {
                               const double aik = an->data[i * k + kk];
                               const double* grow = &g[i * n];
                               double* gbrow = &gb[kk * n];
                               for (std::size_t j = 0; j < n; ++j) {
                                   gbrow[j] += aik * grow[j];
                               }
                           }
                       }
                   }
               },
               "matmul");
    }
    return out;
}

// --- convolutions -------------------------------------------------------

namespace {

// x viewed as [C][O][L][I] around a convolution axis.
struct ConvView {
    std::size_t channels;
    std::size_t outer;
    std::size_t length;
    std::size_t inner;
};

ConvView conv_view(const Shape& shape, std::size_t axis, const char* op) {
    if (shape.size() < 2) {
        throw DimensionError(std::string(op) +
                             ": input must have a channel axis plus data axes, "
                             "got shape " + shape_to_string(shape));
    }
    if (axis == 0 || axis >= shape.size()) {
        throw ArgumentError(std::string(op) + ": convolution axis " +
                            std::to_string(axis) +
                            " must name a data axis of " +
                            shape_to_string(shape));
    }
    ConvView v{shape[0], 1, shape[axis], 1};
    for (std::size_t i = 1; i < axis; ++i) v.outer *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
    return v;
}

std::size_t conv_out_length(std::size_t length, std::size_t k, long stride,
                            long padding, const char* op) {
    if (stride <= 0) {
        throw ArgumentError(std::string(op) + ": stride must be positive, got " +
                            std::to_string(stride));
    }
    if (padding < 0) {
        throw ArgumentError(std::string(op) +
                            ": padding must be non-negative, got " +
                            std::to_string(padding));
    }
    const std::size_t padded = length + 2 * static_cast<std::size_t>(padding);
    if (k > padded) {
        throw DimensionError(std::string(op) + ": kernel " + std::to_string(k) +
                             " exceeds padded length " + std::to_string(padded) +
                             " (empty output)");
    }
    return (padded - k) / static_cast<std::size_t>(stride) + 1;
}

}  // namespace

Tensor conv1d(const Tensor& x, std::size_t axis, const Tensor& weights,
              const Tensor& bias, long stride, long padding) {
    require_defined(x, "conv1d");
    require_defined(weights, "conv1d");
    ConvView v = conv_view(x.shape(), axis, "conv1d");
    if (weights.rank() != 3) {
        throw DimensionError("conv1d: weights must be [C_out, C_in, k], got " +
                             shape_to_string(weights.shape()));
    }
    const std::size_t c_out = weights.shape()[0];
    const std::size_t c_in = weights.shape()[1];
    const std::size_t k = weights.shape()[2];
    if (c_in != v.channels) {
        throw DimensionError("conv1d: weights expect " + std::to_string(c_in) +
                             " input channels, input has " +
                             std::to_string(v.channels));
    }
    if (bias.defined() &&
        (bias.rank() != 1 || bias.shape()[0] != c_out)) {
        throw DimensionError("conv1d: bias must be [" + std::to_string(c_out) +
                             "], got " + shape_to_string(bias.shape()));
    }
    const std::size_t l_out =
        conv_out_length(v.length, k, stride, padding, "conv1d");
    const std::size_t s = static_cast<std::size_t>(stride);
    const long p = padding;

    Shape out_shape = x.shape();
    out_shape[0] = c_out;
    out_shape[axis] = l_out;

    const std::vector<double>& xv = x.values();
    const std::vector<double>& wv = weights.values();
    std::vector<double> data(c_out * v.outer * l_out * v.inner, 0.0);
    if (bias.defined()) {
        const std::vector<double>& bv = bias.values();
        for (std::size_t co = 0; co < c_out; ++co) {
            const double b = bv[co];
            double* block = &data[co * v.outer * l_out * v.inner];
            for (std::size_t i = 0; i < v.outer * l_out * v.inner; ++i) {
                block[i] = b;
            }
        }
    }
    for (std::size_t co = 0; co < c_out; ++co) {
        for (std::size_t o = 0; o < v.outer; ++o) {
            double* oplane = &data[(co * v.outer + o) * l_out * v.inner];
            for (std::size_t ci = 0; ci < c_in; ++ci) {
                const double* xplane =
                    &xv[(ci * v.outer + o) * v.length * v.inner];
                const double* wrow = &wv[(co * c_in + ci) * k];
                for (std::size_t t = 0; t < k; ++t) {
                    const double w = wrow[t];
                    for (std::size_t lo = 0; lo < l_out; ++lo) {
                        const long l = static_cast<long>(lo * s + t) - p;
                        if (l < 0 || l >= static_cast<long>(v.length)) continue;
                        const double* src =
                            &xplane[static_cast<std::size_t>(l) * v.inner];
                        double* dst = &oplane[lo * v.inner];
                        for (std::size_t ii = 0; ii < v.inner; ++ii) {
                            dst[ii] += w * src[ii];
                        }
                    }
                }
            }
        }
    }

    Tensor out = make_output(std::move(out_shape), std::move(data));
    const bool has_bias = bias.defined();
    if (recording(has_bias
                      ? std::initializer_list<const Tensor*>{&x, &weights, &bias}
                      : std::initializer_list<const Tensor*>{&x, &weights})) {
        NodePtr xn = x.node(), wn = weights.node();
        NodePtr bn = has_bias ? bias.node() : nullptr;
        std::vector<NodePtr> parents{xn, wn};
        if (bn) parents.push_back(bn);
        record(out, std::move(parents),
               [xn, wn, bn, v, c_out, c_in, k, s, p, l_out](TensorNode& self) {
                   const std::vector<double>& g = self.grad;
                   if (bn && bn->requires_grad) {
                       std::vector<double>& gb = bn->ensure_grad();
                       for (std::size_t co = 0; co < c_out; ++co) {
                           double acc = 0.0;
                           const double* block =
                               &g[co * v.outer * l_out * v.inner];
                           for (std::size_t i = 0;
                                i < v.outer * l_out * v.inner; ++i) {
                               acc += block[i];
                           }
                           gb[co] += acc;
                       }
                   }
                   if (wn->requires_grad) {
                       std::vector<double>& gw = wn->ensure_grad();
                       for (std::size_t co = 0; co < c_out; ++co) {
                           for (std::size_t ci = 0; ci < c_in; ++ci) {
                               for (std::size_t t = 0; t < k; ++t) {
                                   double acc = 0.0;
                                   for (std::size_t o = 0; o < v.outer; ++o) {
                                       const double* gplane =
                                           &g[(co * v.outer + o) * l_out *
                                              v.inner];
                                       const double* xplane =
                                           &xn->data[(ci * v.outer + o) *
                                                     v.length * v.inner];
                                       for (std::size_t lo = 0; lo < l_out;
                                            ++lo) {
                                           const long l =
                                               static_cast<long>(lo * s + t) -
                                               p;
                                           if (l < 0 ||
                                               l >= static_cast<long>(
                                                        v.length)) {
                                               continue;
                                           }
                                           const double* src =
                                               &xplane[static_cast<std::size_t>(
                                                           l) *
                                                       v.inner];
                                           const double* gr =
                                               &gplane[lo * v.inner];
                                           for (std::size_t ii = 0;
                                                ii < v.inner; ++ii) {
                                               acc += gr[ii] * src[ii];
                                           }
                                       }
                                   }
                                   gw[(co * c_in + ci) * k + t] += acc;
                               }
                           }
                       }
                   }
                   if (xn->requires_grad) {
                       std::vector<double>& gx = xn->ensure_grad();
                       for (std::size_t co = 0; co < c_out; ++co) {
                           for (std::size_t o = 0; o < v.outer; ++o) {
                               const double* gplane =
                                   &g[(co * v.outer + o) * l_out * v.inner];
                               for (std::size_t ci = 0; ci < c_in; ++ci) {
                                   double* xgplane =
                                       &gx[(ci * v.outer + o) * v.length *
                                           v.inner];
                                   const double* wrow =
                                       &wn->data[(co * c_in + ci) * k];
                                   for (std::size_t t = 0; t < k; ++t) {
                                       const double w = wrow[t];
                                       for (std::size_t lo = 0; lo < l_out;
                                            ++lo) {
                                           const long l =
                                               static_cast<long>(lo * s + t) -
                                               p;
                                           if (l < 0 ||
                                               l >= static_cast<long>(
                                                        v.length)) {
                                               continue;
                                           }
                                           const double* gr =
                                               &gplane[lo * v.inner];
                                           double* dst =
                                               &xgplane[static_cast<
                                                            std::size_t>(l) *
                                                        v.inner];
                                           for (std::size_t ii = 0;
                                                ii < v.inner; ++ii) {
                                               dst[ii] += w * gr[ii];
                                           }
                                       }
                                   }
                               }
                           }
                       }
                   }
               },
               "conv1d");
    }
    return out;
}

Tensor conv_pointwise(const Tensor& x, const Tensor& weights,
                      const Tensor& bias) {
    require_defined(x, "conv_pointwise");
    require_defined(weights, "conv_pointwise");
    if (x.rank() < 1) {
        throw DimensionError("conv_pointwise: input needs a channel axis");
    }
    if (weights.rank() != 2) {
        throw DimensionError("conv_pointwise: weights must be [C_out, C_in], got " +
                             shape_to_string(weights.shape()));
    }
    const std::size_t c_in = x.shape()[0];
    const std::size_t c_out = weights.shape()[0];
    if (weights.shape()[1] != c_in) {
        throw DimensionError("conv_pointwise: weights expect " +
                             std::to_string(weights.shape()[1]) +
                             " input channels, input has " +
                             std::to_string(c_in));
    }
    if (bias.defined() &&
        (bias.rank() != 1 || bias.shape()[0] != c_out)) {
        throw DimensionError("conv_pointwise: bias must be [" +
                             std::to_string(c_out) + "], got " +
                             shape_to_string(bias.shape()));
    }
    const std::size_t positions = x.size() / c_in;

    const std::vector<double>& xv = x.values();
    const std::vector<double>& wv = weights.values();
    std::vector<double> data(c_out * positions, 0.0);
    if (bias.defined()) {
        const std::vector<double>& bv = bias.values();
        for (std::size_t co = 0; co < c_out; ++co) {
            double* row = &data[co * positions];
            for (std::size_t pp = 0; pp < positions; ++pp) row[pp] = bv[co];
        }
    }
    for (std::size_t co = 0; co < c_out; ++co) {
        double* row = &data[co * positions];
        for (std::size_t ci = 0; ci < c_in; ++ci) {
            const double w = wv[co * c_in + ci];
            const double* src = &xv[ci * positions];
            for (std::size_t pp = 0; pp < positions; ++pp) {
                row[pp] += w * src[pp];
            }
        }
    }

    Shape out_shape = x.shape();
    out_shape[0] = c_out;
    Tensor out = make_output(std::move(out_shape), std::move(data));
    const bool has_bias = bias.defined();
    if (recording(has_bias
                      ? std::initializer_list<const Tensor*>{&x, &weights, &bias}
                      : std::initializer_list<const Tensor*>{&x, &weights})) {
        NodePtr xn = x.node(), wn = weights.node();
        NodePtr bn = has_bias ? bias.node() : nullptr;
        std::vector<NodePtr> parents{xn, wn};
        if (bn) parents.push_back(bn);
        record(out, std::move(parents),
               [xn, wn, bn, c_in, c_out, positions](TensorNode& self) {
                   const std::vector<double>& g = self.grad;
                   if (bn && bn->requires_grad) {
                       std::vector<double>& gb = bn->ensure_grad();
                       for (std::size_t co = 0; co < c_out; ++co) {
                           double acc = 0.0;
                           const double* row = &g[co * positions];
                           for (std::size_t pp = 0; pp < positions; ++pp) {
                               acc += row[pp];
                           }
                           gb[co] += acc;
                       }
                   }
                   if (wn->requires_grad) {
                       std::vector<double>& gw = wn->ensure_grad();
                       for (std::size_t co = 0; co < c_out; ++co) {
                           const double* grow = &g[co * positions];
                           for (std::size_t ci = 0; ci < c_in; ++ci) {
                               double acc = 0.0;
                               const double* src = &xn->data[ci * positions];
                               for (std::size_t pp = 0; pp < positions; ++pp) {
                                   acc += grow[pp] * src[pp];
                               }
                               gw[co * c_in + ci] += acc;
                           }
                       }
                   }
                   if (xn->requires_grad) {
                       std::vector<double>& gx = xn->ensure_grad();
                       for (std::size_t co = 0; co < c_out; ++co) {
                           const double* grow = &g[co * positions];
                           for (std::size_t ci = 0; ci < c_in; ++ci) {
                               const double w = wn->data[co * c_in + ci];
                               double* dst = &gx[ci * positions];
                               for (std::size_t pp = 0; pp < positions; ++pp) {
                                   dst[pp] += w * grow[pp];
                               }
                           }
                       }
                   }
               },
               "conv_pointwise");
    }
    return out;
}

Tensor depthwise_conv1d(const Tensor& x, std::size_t axis,
                        const Tensor& kernels, long padding) {
    require_defined(x, "depthwise_conv1d");
    require_defined(kernels, "depthwise_conv1d");
    ConvView v = conv_view(x.shape(), axis, "depthwise_conv1d");
    if (kernels.rank() != 2 || kernels.shape()[0] != v.channels) {
        throw DimensionError("depthwise_conv1d: kernels must be [" +
                             std::to_string(v.channels) + ", k], got " +
                             shape_to_string(kernels.shape()));
    }
    const std::size_t k = kernels.shape()[1];
    const std::size_t l_out =
        conv_out_length(v.length, k, 1, padding, "depthwise_conv1d");
    const long p = padding;

    Shape out_shape = x.shape();
    out_shape[axis] = l_out;

    const std::vector<double>& xv = x.values();
    const std::vector<double>& kv = kernels.values();
    std::vector<double> data(v.channels * v.outer * l_out * v.inner, 0.0);
    for (std::size_t c = 0; c < v.channels; ++c) {
        const double* krow = &kv[c * k];
        for (std::size_t o = 0; o < v.outer; ++o) {
            const double* xplane = &xv[(c * v.outer + o) * v.length * v.inner];
            double* oplane = &data[(c * v.outer + o) * l_out * v.inner];
            for (std::size_t t = 0; t < k; ++t) {
                const double w = krow[t];
                for (std::size_t lo = 0; lo < l_out; ++lo) {
                    const long l = static_cast<long>(lo + t) - p;
                    if (l < 0 || l >= static_cast<long>(v.length)) continue;
                    const double* src =
                        &xplane[static_cast<std::size_t>(l) * v.inner];
                    double* dst = &oplane[lo * v.inner];
                    for (std::size_t ii = 0; ii < v.inner; ++ii) {
                        dst[ii] += w * src[ii];
                    }
                }
            }
        }
    }

    Tensor out = make_output(std::move(out_shape), std::move(data));
    if (recording({&x, &kernels})) {
        NodePtr xn = x.node(), kn = kernels.node();
        record(out, {xn, kn},
               [xn, kn, v, k, p, l_out](TensorNode& self) {
                   const std::vector<double>& g = self.grad;
                   if (kn->requires_grad) {
                       std::vector<double>& gk = kn->ensure_grad();
                       for (std::size_t c = 0; c < v.channels; ++c) {
                           for (std::size_t t = 0; t < k; ++t) {
                               double acc = 0.0;
                               for (std::size_t o = 0; o < v.outer; ++o) {
                                   const double* xplane =
                                       &xn->data[(c * v.outer + o) * v.length *
                                                 v.inner];
                                   const double* gplane =
                                       &g[(c * v.outer + o) * l_out * v.inner];
                                   for (std::size_t lo = 0; lo < l_out; ++lo) {
                                       const long l =
                                           static_cast<long>(lo + t) - p;
                                       if (l < 0 ||
                                           l >= static_cast<long>(v.length)) {
                                           continue;
                                       }
                                       const double* src =
                                           &xplane[static_cast<std::size_t>(l) *
                                                   v.inner];
                                       const double* gr = &gplane[lo * v.inner];
                                       for (std::size_t ii = 0; ii < v.inner;
                                            ++ii) {
                                           acc += gr[ii] * src[ii];
                                       }
                                   }
                               }
                               gk[c * k + t] += acc;
                           }
                       }
                   }
                   if (xn->requires_grad) {
                       std::vector<double>& gx = xn->ensure_grad();
                       for (std::size_t c = 0; c < v.channels; ++c) {
                           const double* krow = &kn->data[c * k];
                           for (std::size_t o = 0; o < v.outer; ++o) {
                               const double* gplane =
                                   &g[(c * v.outer + o) * l_out * v.inner];
                               double* xgplane =
                                   &gx[(c * v.outer + o) * v.length * v.inner];
                               for (std::size_t t = 0; t < k; ++t) {
                                   const double w = krow[t];
                                   for (std::size_t lo = 0; lo < l_out; ++lo) {
                                       const long l =
                                           static_cast<long>(lo + t) - p;
                                       if (l < 0 ||
                                           l >= static_cast<long>(v.length)) {
                                           continue;
                                       }
                                       const double* gr = &gplane[lo * v.inner];
                                       double* dst =
                                           &xgplane[static_cast<std::size_t>(l) *
                                                    v.inner];
                                       for (std::size_t ii = 0; ii < v.inner;
                                            ++ii) {
                                           dst[ii] += w * gr[ii];
                                       }
                                   }
                               }
                           }
                       }
                   }
               },
               "depthwise_conv1d");
    }
    return out;
}

// --- batch normalization ------------------------------------------------

BatchNormState BatchNormState::make(std::size_t features) {
    BatchNormState state;
    state.gamma = Tensor::full({features}, 1.0, true);
    state.beta = Tensor::zeros({features}, true);
    state.running_mean.assign(features, 0.0);
    state.running_var.assign(features, 1.0);
    return state;
}

Tensor batch_norm(const Tensor& x, std::size_t feature_axis,
                  BatchNormState& state, bool training, double momentum,
                  double eps) {
    require_defined(x, "batch_norm");
    const Shape& xs = x.shape();
    check_axis(xs, feature_axis, "batch_norm");
    const std::size_t f_count = xs[feature_axis];
    if (state.features() != f_count || state.gamma.size() != f_count ||
        state.beta.size() != f_count) {
        throw DimensionError("batch_norm: state has " +
                             std::to_string(state.features()) +
                             " features, input axis has " +
                             std::to_string(f_count));
    }
    AxisView v = axis_view(xs, feature_axis);
    const std::size_t count = v.outer * v.inner;  // positions per feature
    const double inv_count = 1.0 / static_cast<double>(count);

    const std::vector<double>& xv = x.values();
    std::vector<double> mean(f_count, 0.0), var(f_count, 0.0);
    if (training) {
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t f = 0; f < f_count; ++f) {
                const double* src = &xv[(o * f_count + f) * v.inner];
                double acc = 0.0;
                for (std::size_t i = 0; i < v.inner; ++i) acc += src[i];
                mean[f] += acc;
            }
        }
        for (double& m : mean) m *= inv_count;
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t f = 0; f < f_count; ++f) {
                const double* src = &xv[(o * f_count + f) * v.inner];
                double acc = 0.0;
                for (std::size_t i = 0; i < v.inner; ++i) {
                    const double d = src[i] - mean[f];
                    acc += d * d;
                }
                var[f] += acc;
            }
        }
        for (double& s : var) s *= inv_count;
        for (std::size_t f = 0; f < f_count; ++f) {
            state.running_mean[f] =
                (1.0 - momentum) * state.running_mean[f] + momentum * mean[f];
            state.running_var[f] =
                (1.0 - momentum) * state.running_var[f] + momentum * var[f];
        }
    } else {
        mean = state.running_mean;
        var = state.running_var;
    }

    std::vector<double> invstd(f_count);
    for (std::size_t f = 0; f < f_count; ++f) {
        invstd[f] = 1.0 / std::sqrt(var[f] + eps);
    }

    const std::vector<double>& gv = state.gamma.values();
    const std::vector<double>& bv = state.beta.values();
    std::vector<double> xhat(xv.size());
    std::vector<double> data(xv.size());
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t f = 0; f < f_count; ++f) {
            const double m = mean[f], is = invstd[f];
            const double ga = gv[f], be = bv[f];
            const double* src = &xv[(o * f_count + f) * v.inner];
            double* xh = &xhat[(o * f_count + f) * v.inner];
            double* dst = &data[(o * f_count + f) * v.inner];
            for (std::size_t i = 0; i < v.inner; ++i) {
                xh[i] = (src[i] - m) * is;
                dst[i] = ga * xh[i] + be;
            }
        }
    }

    Tensor out = make_output(xs, std::move(data));
    if (recording({&x, &state.gamma, &state.beta})) {
        NodePtr xn = x.node();
        NodePtr gn = state.gamma.node();
        NodePtr bn = state.beta.node();
        record(out, {xn, gn, bn},
               [xn, gn, bn, v, f_count, inv_count, training,
                xhat = std::move(xhat), invstd = std::move(invstd)](
                   TensorNode& self) {
                   const std::vector<double>& g = self.grad;
                   // Per-feature sums of g and g*xhat feed every input rule.
                   std::vector<double> sum_g(f_count, 0.0);
                   std::vector<double> sum_gx(f_count, 0.0);
                   for (std::size_t o = 0; o < v.outer; ++o) {
                       for (std::size_t f = 0; f < f_count; ++f) {
                           const double* gr = &g[(o * f_count + f) * v.inner];
                           const double* xh =
                               &xhat[(o * f_count + f) * v.inner];
                           double a = 0.0, b = 0.0;
                           for (std::size_t i = 0; i < v.inner; ++i) {
                               a += gr[i];
                               b += gr[i] * xh[i];
                           }
                           sum_g[f] += a;
                           sum_gx[f] += b;
                       }
                   }
                   if (gn->requires_grad) {
                       std::vector<double>& gg = gn->ensure_grad();
                       for (std::size_t f = 0; f < f_count; ++f) {
                           gg[f] += sum_gx[f];
                       }
                   }
                   if (bn->requires_grad) {
                       std::vector<double>& gb = bn->ensure_grad();
                       for (std::size_t f = 0; f < f_count; ++f) {
                           gb[f] += sum_g[f];
                       }
                   }
                   if (xn->requires_grad) {
                       std::vector<double>& gx = xn->ensure_grad();
                       const std::vector<double>& ga = gn->data;
                       if (training) {
                           // Batch statistics depend on x: full rule.
                           for (std::size_t o = 0; o < v.outer; ++o) {
                               for (std::size_t f = 0; f < f_count; ++f) {
                                   const double scale = ga[f] * invstd[f];
                                   const double mg = sum_g[f] * inv_count;
                                   const double mgx = sum_gx[f] * inv_count;
                                   const double* gr =
                                       &g[(o * f_count + f) * v.inner];
                                   const double* xh =
                                       &xhat[(o * f_count + f) * v.inner];
                                   double* dst =
                                       &gx[(o * f_count + f) * v.inner];
                                   for (std::size_t i = 0; i < v.inner; ++i) {
                                       dst[i] += scale *
                                                 (gr[i] - mg - xh[i] * mgx);
                                   }
                               }
                           }
                       } else {
                           // Running stats are constants.
                           for (std::size_t o = 0; o < v.outer; ++o) {
                               for (std::size_t f = 0; f < f_count; ++f) {
                                   const double scale = ga[f] * invstd[f];
                                   const double* gr =
                                       &g[(o * f_count + f) * v.inner];
                                   double* dst =
                                       &gx[(o * f_count + f) * v.inner];
                                   for (std::size_t i = 0; i < v.inner; ++i) {
                                       dst[i] += scale * gr[i];
                                   }
                               }
                           }
                       }
                   }
               },
               "batch_norm");
    }
    return out;
}

// --- numeric gradient oracle -------------------------------------------

Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f,
                            const Tensor& x, double eps) {
    require_defined(x, "finite_diff_gradient");
    if (!(eps > 0.0)) {
        throw ArgumentError("finite_diff_gradient: eps must be positive");
    }
    Tensor probe = Tensor::from_data(x.shape(), x.values(), false);
    std::vector<double> grad(x.size());
    NoGradGuard no_grad;
    std::vector<double>& pv = probe.values();
    for (std::size_t i = 0; i < pv.size(); ++i) {
        const double saved = pv[i];
        pv[i] = saved + eps;
        const double up = f(probe);
        pv[i] = saved - eps;
        const double down = f(probe);
        pv[i] = saved;
        grad[i] = (up - down) / (2.0 * eps);
    }
    return Tensor::from_data(x.shape(), std::move(grad), false);
}

}  // namespace skelact
