#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "skelact/checkpoint.hpp"
#include "skelact/network.hpp"
#include "skelact/sequence.hpp"
#include "skelact/train.hpp"

namespace skelact {

// One full training run: data location, model/optimizer settings, and where
// the checkpoint and metrics log land.
struct RunOptions {
    ModelConfig model;
    TrainConfig train;
    StreamKind stream = StreamKind::joint;
    std::filesystem::path data_dir;
    std::filesystem::path out_dir;
    // Optional second dataset evaluated after every epoch; its top-1/top-5
    // join the metrics lines. Empty = train-only metrics.
    std::filesystem::path eval_data_dir;
    bool resume = false;        // continue from <out_dir>/model
    std::size_t threads = 1;    // evaluation workers
    bool echo_stdout = false;   // mirror each metrics line to stdout
    // Harness-only bound: end the run once the running-model training top-1
    // reaches this value (0 disables). Not a tuning feature — it exists so a
    // bounded "reaches X% within N epochs" check does not have to keep
    // training past its own success.
    double stop_at_train_top1 = 0.0;
};

// What one epoch contributed to the metrics log.
struct EpochRecord {
    std::size_t epoch = 0;
    double lr = 0.0;
    double mean_loss = 0.0;
    double train_top1 = 0.0;
    bool has_eval = false;
    double eval_top1 = 0.0;
    double eval_top5 = 0.0;
};

struct RunResult {
    std::vector<EpochRecord> records;  // epochs run by this call only
    std::size_t epochs_completed = 0;  // total, including resumed-over ones
};

// Runs (or resumes) training to train.total_epochs: one JSON metrics line
// per epoch appended to <out_dir>/metrics.jsonl (truncated first unless
// resuming), a reloadable checkpoint kept up to date in <out_dir>/model.
// A resume must find a checkpoint whose stored config matches
// options.model (FormatError names the first differing field). Identical
// options always produce byte-identical metrics and checkpoint files.
RunResult run_training(const RunOptions& options);

}  // namespace skelact
