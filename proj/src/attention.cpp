#include "skelact/attention.hpp"

namespace skelact {

namespace {

void check_odd(std::size_t kernel, const char* what) {
    if (kernel == 0 || kernel % 2 == 0) {
        throw ConfigError(std::string(what) + " must be odd, got " +
                          std::to_string(kernel));
    }
}

void check_rank3(const Tensor& f_in, const char* op) {
    if (f_in.rank() != 3) {
        throw DimensionError(std::string(op) + ": input must be [C, T, N], "
                             "got " + shape_to_string(f_in.shape()));
    }
}

// Rows of x [R, in] through a shared affine map w [out, in] + b -> [R, out].
Tensor linear_rows(const Tensor& x, const Tensor& w, const Tensor& b) {
    return transpose(conv_pointwise(transpose(x), w, b));
}

}  // namespace

SamModule make_sam(std::size_t channels, std::size_t kernel) {
    check_odd(kernel, "SAM kernel");
    SamModule sam;
    sam.kernel = kernel;
    sam.weight = Tensor::zeros({1, channels, kernel}, true);
    sam.bias = Tensor::zeros({1}, true);
    return sam;
}

Tensor sam_attention(const SamModule& sam, const Tensor& f_in) {
    check_rank3(f_in, "sam_attention");
    const std::size_t n = f_in.extent(2);
    const Tensor pooled = mean_pool(f_in, {1});  // [C, N]
    const Tensor logits =
        conv1d(pooled, 1, sam.weight, sam.bias, 1,
               static_cast<long>((sam.kernel - 1) / 2));  // [1, N]
    return reshape(sigmoid(logits), {n});
}

Tensor sam_forward(const SamModule& sam, const Tensor& f_in) {
    const Tensor map = sam_attention(sam, f_in);
    return mul_broadcast(f_in, add_scalar(map, 1.0), {2});
}

TamModule make_tam(std::size_t channels, std::size_t frames,
                   std::size_t reduction, std::size_t kernel) {
    check_odd(kernel, "TAM kernel");
    if (reduction == 0 || channels < reduction) {
        throw ConfigError("TAM needs channels >= reduction, got " +
                          std::to_string(channels) + " < " +
                          std::to_string(reduction));
    }
    if (frames < 4) {
        throw ConfigError("TAM needs at least 4 frames, got " +
                          std::to_string(frames));
    }
    TamModule tam;
    tam.kernel = kernel;
    tam.reduction = reduction;
    const std::size_t reduced = channels / reduction;
    const std::size_t hidden = frames / 4;
    tam.reduce_weight = Tensor::zeros({reduced, channels, 5}, true);
    tam.reduce_bias = Tensor::zeros({reduced}, true);
    tam.expand_weight = Tensor::zeros({channels, reduced, 1}, true);
    tam.expand_bias = Tensor::zeros({channels}, true);
    tam.fc1_weight = Tensor::zeros({hidden, frames}, true);
    tam.fc1_bias = Tensor::zeros({hidden}, true);
    tam.fc2_weight = Tensor::zeros({kernel, hidden}, true);
    tam.fc2_bias = Tensor::zeros({kernel}, true);
    return tam;
}

Tensor tam_spatial_pool(const Tensor& f_in) {
    check_rank3(f_in, "tam_spatial_pool");
    return mean_pool(f_in, {2});
}

Tensor tam_short_gate(const TamModule& tam, const Tensor& pooled) {
    const Tensor reduced =
        conv1d(pooled, 1, tam.reduce_weight, tam.reduce_bias, 1, 2);
    return sigmoid(conv1d(reduced, 1, tam.expand_weight, tam.expand_bias, 1, 0));
}

Tensor tam_short_branch(const TamModule& tam, const Tensor& f_in) {
    check_rank3(f_in, "tam_short_branch");
    const Tensor gate = tam_short_gate(tam, tam_spatial_pool(f_in));
    return mul_broadcast(f_in, gate, {0, 1});
}

Tensor tam_long_kernels(const TamModule& tam, const Tensor& pooled) {
    const Tensor hidden =
        relu(linear_rows(pooled, tam.fc1_weight, tam.fc1_bias));  // [C, T/4]
    return softmax(linear_rows(hidden, tam.fc2_weight, tam.fc2_bias), 1);
}

Tensor tam_long_branch(const TamModule& tam, const Tensor& f0,
                       const Tensor& pooled) {
    check_rank3(f0, "tam_long_branch");
    const Tensor kernels = tam_long_kernels(tam, pooled);  // [C, K]
    return depthwise_conv1d(f0, 1, kernels,
                            static_cast<long>((tam.kernel - 1) / 2));
}

Tensor tam_forward(const TamModule& tam, const Tensor& f_in) {
    check_rank3(f_in, "tam_forward");
    const Tensor pooled = tam_spatial_pool(f_in);
    const Tensor f0 = mul_broadcast(f_in, tam_short_gate(tam, pooled), {0, 1});
    return tam_long_branch(tam, f0, pooled);
}

CamModule make_cam(std::size_t channels, std::size_t reduction) {
    if (reduction == 0 || channels < reduction) {
        throw ConfigError("CAM needs channels >= reduction, got " +
                          std::to_string(channels) + " < " +
                          std::to_string(reduction));
    }
    CamModule cam;
    const std::size_t reduced = channels / reduction;
    cam.w1 = Tensor::zeros({reduced, channels}, true);
    cam.b1 = Tensor::zeros({reduced}, true);
    cam.w2 = Tensor::zeros({channels, reduced}, true);
    cam.b2 = Tensor::zeros({channels}, true);
    return cam;
}

Tensor cam_attention(const CamModule& cam, const Tensor& f_in) {
    check_rank3(f_in, "cam_attention");
    const std::size_t c = f_in.extent(0);
    const Tensor pooled = reshape(mean_pool(f_in, {1, 2}), {c, 1});
    const Tensor hidden = relu(conv_pointwise(pooled, cam.w1, cam.b1));
    return reshape(sigmoid(conv_pointwise(hidden, cam.w2, cam.b2)), {c});
}

Tensor cam_forward(const CamModule& cam, const Tensor& f_in) {
    const Tensor map = cam_attention(cam, f_in);
    return mul_broadcast(f_in, add_scalar(map, 1.0), {0});
}

StcModule make_stc(std::size_t channels, std::size_t frames,
                   const StcConfig& cfg) {
    StcModule stc;
    stc.sam = make_sam(channels, cfg.sam_kernel);
    stc.tam = make_tam(channels, frames, cfg.reduction, cfg.tam_kernel);
    stc.cam = make_cam(channels, cfg.reduction);
    return stc;
}

Tensor stc_forward(const StcModule& stc, const Tensor& f_in) {
    return cam_forward(stc.cam,
                       tam_forward(stc.tam, sam_forward(stc.sam, f_in)));
}

void append_parameters(StcModule& stc, const std::string& prefix,
                       std::vector<NamedParam>& out) {
    out.push_back({prefix + ".sam.weight", stc.sam.weight});
    out.push_back({prefix + ".sam.bias", stc.sam.bias});
    out.push_back({prefix + ".tam.reduce_weight", stc.tam.reduce_weight});
    out.push_back({prefix + ".tam.reduce_bias", stc.tam.reduce_bias});
    out.push_back({prefix + ".tam.expand_weight", stc.tam.expand_weight});
    out.push_back({prefix + ".tam.expand_bias", stc.tam.expand_bias});
    out.push_back({prefix + ".tam.fc1_weight", stc.tam.fc1_weight});
    out.push_back({prefix + ".tam.fc1_bias", stc.tam.fc1_bias});
    out.push_back({prefix + ".tam.fc2_weight", stc.tam.fc2_weight});
    out.push_back({prefix + ".tam.fc2_bias", stc.tam.fc2_bias});
    out.push_back({prefix + ".cam.w1", stc.cam.w1});
    out.push_back({prefix + ".cam.b1", stc.cam.b1});
    out.push_back({prefix + ".cam.w2", stc.cam.w2});
    out.push_back({prefix + ".cam.b2", stc.cam.b2});
}

}  // namespace skelact
