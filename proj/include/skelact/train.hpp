#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "skelact/network.hpp"
#include "skelact/sequence.hpp"
#include "skelact/streams.hpp"

namespace skelact {

// -log softmax(logits)[label], computed via the log-sum-exp identity so
// huge logits cannot overflow. Differentiable: the logits gradient is the
// softmax minus the one-hot target.
Tensor cross_entropy(const Tensor& logits, std::size_t label);

// Momentum buffers (parallel to the parameter list, lazily sized) plus an
// optional per-parameter weight-decay multiplier (empty = decay everything).
struct SgdState {
    std::vector<std::vector<double>> buffers;
    std::vector<double> decay_scale;
};

// One Nesterov-momentum step. Per parameter, with value v and gradient dv:
//   g   <- dv + weight_decay * v
//   buf <- momentum * buf + g
//   v   <- v - lr * (g + momentum * buf)
// This recurrence is the normative update rule. A parameter that never
// received a gradient contributes dv = 0. Gradients are cleared afterwards.
void sgd_nesterov_step(std::vector<NamedParam>& params, SgdState& state,
                       double lr, double momentum = 0.9,
                       double weight_decay = 1e-4);

struct TrainConfig {
    double base_lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::size_t batch_size = 32;
    std::vector<std::size_t> milestones = {30, 40};  // epochs where lr /= 10
    std::size_t total_epochs = 50;
    std::uint64_t seed = 1;
    // Augmentation: crop_len 0 means "the model window". The remaining
    // fields are the random-rotation/translation magnitudes (0 = off).
    AugmentParams augment;
    bool center_coords = false;  // subtract the center joint before deriving
    // When false, BN scales/shifts and the graph gates are exempt from
    // weight decay.
    bool decay_norm_and_gates = true;
    // Epochs during which warm-started learned graphs stay frozen (only
    // consulted when the model was built with graph_warm_start).
    std::size_t graph_freeze_epochs = 5;
};

// Milestones must be strictly increasing and below total_epochs; batch_size
// must be positive. Violations throw ConfigError.
void validate_train_config(const TrainConfig& cfg);

// base_lr / 10^(number of milestones at or before `epoch`).
double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch);

struct EpochStats {
    double mean_loss = 0.0;
    double train_top1 = 0.0;
};

// One pass over the dataset: shuffles by (cfg.seed, epoch), derives the
// requested stream, pads to the model window, augments (per-sample generator
// seeded from the epoch seed XOR the sample's dataset index, so the draw is
// independent of visit order), and runs forward/backward in batches with one
// optimizer step per batch (losses scaled by the actual batch size).
// Returns the mean per-sample loss and the running-model top-1 accuracy.
EpochStats train_epoch(Network& net, SgdState& sgd, const Dataset& data,
                       StreamKind stream, const TrainConfig& cfg,
                       std::size_t epoch);

// Post-softmax class scores for every sample of one evaluated stream.
struct ScoreSet {
    std::string stream;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> scores;  // parallel to ids
};

struct EvalResult {
    std::vector<std::size_t> ks;
    std::vector<double> accuracies;  // parallel to ks
    ScoreSet scores;
};

// Deterministic evaluation pass: no augmentation, center temporal crop after
// padding, BN running statistics. A sample counts as a top-k hit when its
// label ranks within the k best scores, ties broken toward the lower class
// index. `threads` shards samples across workers; every thread count
// produces identical results (samples are independent and merged by index).
EvalResult evaluate_topk(Network& net, const Dataset& data, StreamKind stream,
                         std::vector<std::size_t> ks, std::size_t threads = 1,
                         bool center_coords = false);

// Weighted per-sample score sum across streams (default weight 1),
// renormalized to sum 1. All sets must cover exactly the same sample ids.
ScoreSet ensemble_fuse(const std::vector<ScoreSet>& sets,
                       const std::vector<double>& weights = {});

// Top-k accuracies for per-sample score rows against labels, one value per
// entry of `ks`, with the same tie rule as evaluate_topk. Negative or
// out-of-range labels throw ArgumentError.
std::vector<double> topk_from_scores(
    const std::vector<std::vector<double>>& scores,
    const std::vector<int>& labels, const std::vector<std::size_t>& ks);

// The shared gradient-comparison criterion: max over entries of
// |analytic - reference| / max(1, |reference|) — relative above magnitude 1,
// absolute below it (finite-difference noise swamps tiny true gradients).
double gradient_mismatch(const std::vector<double>& analytic,
                         const std::vector<double>& reference);

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    std::size_t skipped = 0;  // probes excluded as non-smooth
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;  // one per parameter
    double tol = 1e-5;
    double worst = 0.0;
    std::size_t skipped = 0;  // total non-smooth probes across parameters
    bool passed = false;
};

// Backward-vs-central-finite-difference comparison of every parameter on a
// random batch of two samples. All parameters are first moved off their
// initialization: the zero-initialized attention weights park relu inputs
// exactly on their kinks and silence the second projection's gradient, so a
// finite-difference probe of the stock init would compare noise against
// structural zeros. Probes whose difference quotient is inconsistent across
// step sizes straddle a relu kink — the loss has no derivative to compare
// there — and are counted in `skipped` instead of the error.
// Deterministic per seed; configs above 3 blocks are rejected (ConfigError)
// to keep the probe count sane.
GradCheckReport grad_check_model(const ModelConfig& cfg, double tol,
                                 std::uint64_t seed);

}  // namespace skelact
