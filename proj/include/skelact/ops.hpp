#pragma once

#include <functional>
#include <vector>

#include "skelact/tensor.hpp"

namespace skelact {

// All ops allocate a fresh output, record the graph while recording is
// enabled, and never mutate their inputs. Accumulation orders inside every
// kernel are fixed (plain ascending loops), so replaying a tape on identical
// inputs is bitwise reproducible.

enum class Activation { relu, sigmoid };

// --- structural ---------------------------------------------------------
Tensor reshape(const Tensor& x, Shape new_shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& perm);
Tensor transpose(const Tensor& x);  // 2-D
Tensor narrow(const Tensor& x, std::size_t axis, std::size_t start,
              std::size_t length);

// --- arithmetic ---------------------------------------------------------
Tensor add(const Tensor& a, const Tensor& b);       // same shape
Tensor mul(const Tensor& a, const Tensor& b);       // elementwise, same shape
Tensor add_scalar(const Tensor& x, double c);
Tensor mul_scalar(const Tensor& x, double c);
// y = s * x where s is a size-1 tensor (a learnable gate); both get gradients.
Tensor scale_by(const Tensor& x, const Tensor& s);
// Multiply x by m, where m's shape equals x's extents at `axes` (strictly
// ascending). Broadcasts m across the remaining axes; both get gradients.
Tensor mul_broadcast(const Tensor& x, const Tensor& m,
                     const std::vector<std::size_t>& axes);

// --- reductions / normalization ----------------------------------------
Tensor sum_all(const Tensor& x);  // shape {1}
// Mean over the given axes (distinct, in-range); pooled axes are removed.
// No axes -> identity (gradient passes through). All axes -> shape {1}.
Tensor mean_pool(const Tensor& x, std::vector<std::size_t> axes);
Tensor softmax(const Tensor& x, std::size_t axis);

// --- activations --------------------------------------------------------
Tensor activation(Activation kind, const Tensor& x);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

// --- linear maps --------------------------------------------------------
Tensor matmul(const Tensor& a, const Tensor& b);  // [m,k] x [k,n] -> [m,n]

// 1-D convolution along `axis` of x = [C_in, d1, ..., dn] (axis >= 1),
// cross-correlation form: out[co, ..., l, ...] =
//   bias[co] + sum_ci sum_t w[co, ci, t] * x[ci, ..., l*stride + t - padding, ...]
// weights: [C_out, C_in, k]; bias: [C_out] or an undefined handle for none.
// Out-of-range taps read zero. Output extent (L + 2*padding - k)/stride + 1
// must be positive.
Tensor conv1d(const Tensor& x, std::size_t axis, const Tensor& weights,
              const Tensor& bias, long stride, long padding);

// 1x...x1 convolution over the leading channel axis: weights [C_out, C_in],
// applied at every remaining position. Equals matmul(weights, flatten(x)).
Tensor conv_pointwise(const Tensor& x, const Tensor& weights,
                      const Tensor& bias);

// Per-channel 1-D convolution along `axis` with one kernel per channel
// (kernels [C, k], also differentiable), stride 1, zero padding `padding`.
Tensor depthwise_conv1d(const Tensor& x, std::size_t axis,
                        const Tensor& kernels, long padding);

// --- batch normalization ------------------------------------------------
// gamma/beta are learnable [F]; running stats are plain buffers updated only
// in training mode (new = (1-momentum)*old + momentum*batch, biased variance).
struct BatchNormState {
    Tensor gamma;
    Tensor beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;

    static BatchNormState make(std::size_t features);
    std::size_t features() const { return running_mean.size(); }
};

// Normalizes along every axis except `feature_axis`. Training mode uses batch
// statistics (biased variance) and updates the running buffers; eval mode uses
// the running buffers. A batch whose variance is zero is guarded by eps.
Tensor batch_norm(const Tensor& x, std::size_t feature_axis,
                  BatchNormState& state, bool training,
                  double momentum = 0.1, double eps = 1e-5);

// --- numeric gradient oracle -------------------------------------------
// Central finite differences of a scalar-valued function at x:
//   g_i = (f(x + eps*e_i) - f(x - eps*e_i)) / (2*eps)
// f must be a pure function of the tensor's values. Returns a plain tensor
// shaped like x; nothing is recorded.
Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f,
                            const Tensor& x, double eps = 1e-4);

}  // namespace skelact
