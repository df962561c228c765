#pragma once

#include <cstddef>

#include "skelact/ops.hpp"
#include "skelact/params.hpp"
#include "skelact/tensor.hpp"

namespace skelact {

// Attention hyperparameters. Every attention parameter is zero-initialized,
// so a fresh stack applies benign transforms (sigmoid gates at 0.5, uniform
// temporal kernels) rather than mangling the signal.
struct StcConfig {
    std::size_t sam_kernel = 9;  // joint-axis kernel, odd
    std::size_t reduction = 4;   // channel reduction ratio r
    std::size_t tam_kernel = 5;  // aggregation kernel K, odd
};

// Spatial attention: one joint-axis convolution over time-pooled features
// yields a per-joint gate in (0,1); the input is scaled by (1 + gate).
struct SamModule {
    std::size_t kernel = 9;
    Tensor weight;  // [1, C, k_s]
    Tensor bias;    // [1]
};

SamModule make_sam(std::size_t channels, std::size_t kernel);
// The per-joint map [N], strictly inside (0,1).
Tensor sam_attention(const SamModule& sam, const Tensor& f_in);
Tensor sam_forward(const SamModule& sam, const Tensor& f_in);

// Temporal attention, two branches sharing the joint-pooled features
// F_S [C, T]. Short branch: channel-reduced temporal convolution, sigmoid
// gate per (channel, frame), applied multiplicatively. Long branch: two
// stacked FC layers per channel produce a softmax-normalized K-tap kernel,
// applied as a depthwise temporal convolution (channels never mix).
struct TamModule {
    std::size_t kernel = 5;     // K
    std::size_t reduction = 4;  // r
    Tensor reduce_weight;       // [C/r, C, 5]
    Tensor reduce_bias;         // [C/r]
    Tensor expand_weight;       // [C, C/r, 1]
    Tensor expand_bias;         // [C]
    Tensor fc1_weight;          // [T/4, T]
    Tensor fc1_bias;            // [T/4]
    Tensor fc2_weight;          // [K, T/4]
    Tensor fc2_bias;            // [K]
};

TamModule make_tam(std::size_t channels, std::size_t frames,
                   std::size_t reduction, std::size_t kernel);
// Joint-pooled features [C, T] feeding both branches.
Tensor tam_spatial_pool(const Tensor& f_in);
// The sigmoid gate [C, T] of the short branch, strictly inside (0,1).
Tensor tam_short_gate(const TamModule& tam, const Tensor& pooled);
Tensor tam_short_branch(const TamModule& tam, const Tensor& f_in);
// Per-channel kernels [C, K]; each row softmax-normalized to sum 1.
Tensor tam_long_kernels(const TamModule& tam, const Tensor& pooled);
Tensor tam_long_branch(const TamModule& tam, const Tensor& f0,
                       const Tensor& pooled);
Tensor tam_forward(const TamModule& tam, const Tensor& f_in);

// Channel attention: squeeze to per-channel means, two FC layers, sigmoid
// gate in (0,1), input scaled by (1 + gate).
struct CamModule {
    Tensor w1;  // [C/r, C]
    Tensor b1;  // [C/r]
    Tensor w2;  // [C, C/r]
    Tensor b2;  // [C]
};

CamModule make_cam(std::size_t channels, std::size_t reduction);
Tensor cam_attention(const CamModule& cam, const Tensor& f_in);  // [C]
Tensor cam_forward(const CamModule& cam, const Tensor& f_in);

// The sequential stack: spatial, then temporal, then channel attention.
struct StcModule {
    SamModule sam;
    TamModule tam;
    CamModule cam;
};

StcModule make_stc(std::size_t channels, std::size_t frames,
                   const StcConfig& cfg);
Tensor stc_forward(const StcModule& stc, const Tensor& f_in);

void append_parameters(StcModule& stc, const std::string& prefix,
                       std::vector<NamedParam>& out);

}  // namespace skelact
