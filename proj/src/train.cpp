#include "skelact/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "skelact/ops.hpp"

namespace skelact {

namespace {

// splitmix64 over the combined words; decorrelates (seed, epoch) pairs so
// neighbouring epochs draw unrelated shuffles.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Index of the largest value; equal values resolve to the lower index.
std::size_t argmax_lowest(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

// How many classes strictly outrank `label`: higher score, or equal score at
// a lower index (the tie rule). The label is a top-k hit iff this is < k.
std::size_t label_rank(const std::vector<double>& scores, std::size_t label) {
    const double ref = scores[label];
    std::size_t rank = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
        if (scores[j] > ref || (scores[j] == ref && j < label)) ++rank;
    }
    return rank;
}

Tensor sequence_tensor(const SkeletonSequence& s) {
    return Tensor::from_data({s.channels, s.frames, s.joints, s.bodies},
                             s.data);
}

// Shared shape checks for a (dataset, model, stream) triple.
void check_compatible(const Network& net, const Dataset& data,
                      StreamKind stream, const char* where) {
    const std::size_t c = stream_channels(stream);
    if (c != net.config.in_channels) {
        throw ConfigError(std::string(where) + ": stream " +
                          to_string(stream) + " carries " + std::to_string(c) +
                          " channels, model expects " +
                          std::to_string(net.config.in_channels));
    }
    if (data.topology.num_joints != net.topology.num_joints) {
        throw ConfigError(std::string(where) + ": dataset has " +
                          std::to_string(data.topology.num_joints) +
                          " joints, model expects " +
                          std::to_string(net.topology.num_joints));
    }
}

}  // namespace

Tensor cross_entropy(const Tensor& logits, std::size_t label) {
    if (!logits.defined()) {
        throw ArgumentError("cross_entropy: undefined tensor");
    }
    if (logits.rank() != 1) {
        throw DimensionError("cross_entropy: logits must be rank 1, got " +
                             shape_to_string(logits.shape()));
    }
    const std::size_t classes = logits.extent(0);
    if (label >= classes) {
        throw ArgumentError("cross_entropy: label " + std::to_string(label) +
                            " out of range for " + std::to_string(classes) +
                            " classes");
    }
    const std::vector<double>& z = logits.values();
    const double m = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double v : z) total += std::exp(v - m);
    const double loss = m + std::log(total) - z[label];
    Tensor out = Tensor::from_data({1}, {loss});
    if (grad_recording_enabled() && logits.requires_grad()) {
        auto parent = logits.node();
        std::vector<double> probs(classes);
        for (std::size_t i = 0; i < classes; ++i) {
            probs[i] = std::exp(z[i] - m) / total;
        }
        auto node = out.node();
        node->requires_grad = true;
        node->parents = {parent};
        node->op = "cross_entropy";
        node->backward_fn = [parent, probs,
                             label](detail::TensorNode& self) {
            if (!parent->requires_grad) return;
            std::vector<double>& g = parent->ensure_grad();
            const double up = self.grad[0];
            for (std::size_t i = 0; i < probs.size(); ++i) {
                g[i] += up * (probs[i] - (i == label ? 1.0 : 0.0));
            }
        };
    }
    return out;
}

void sgd_nesterov_step(std::vector<NamedParam>& params, SgdState& state,
                       double lr, double momentum, double weight_decay) {
    if (state.buffers.empty()) {
        state.buffers.resize(params.size());
    } else if (state.buffers.size() != params.size()) {
        throw ArgumentError("sgd step: state tracks " +
                            std::to_string(state.buffers.size()) +
                            " parameters, got " +
                            std::to_string(params.size()));
    }
    if (!state.decay_scale.empty() &&
        state.decay_scale.size() != params.size()) {
        throw ArgumentError("sgd step: " +
                            std::to_string(state.decay_scale.size()) +
                            " decay scales for " +
                            std::to_string(params.size()) + " parameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& t = params[i].tensor;
        std::vector<double>& value = t.values();
        std::vector<double>& buf = state.buffers[i];
        if (buf.empty()) {
            buf.assign(value.size(), 0.0);
        } else if (buf.size() != value.size()) {
            throw ArgumentError("sgd step: buffer " + std::to_string(i) +
                                " holds " + std::to_string(buf.size()) +
                                " values, parameter " + params[i].name +
                                " has " + std::to_string(value.size()));
        }
        const std::vector<double>& dv = t.grad();  // zero-filled when absent
        const double wd =
            weight_decay *
            (state.decay_scale.empty() ? 1.0 : state.decay_scale[i]);
        for (std::size_t j = 0; j < value.size(); ++j) {
            const double g = dv[j] + wd * value[j];
            buf[j] = momentum * buf[j] + g;
            value[j] -= lr * (g + momentum * buf[j]);
        }
        t.zero_grad();
    }
}

void validate_train_config(const TrainConfig& cfg) {
    if (cfg.batch_size == 0) {
        throw ConfigError("train config: batch_size must be positive");
    }
    if (cfg.total_epochs == 0) {
        throw ConfigError("train config: total_epochs must be positive");
    }
    if (!(cfg.base_lr >= 0.0)) {
        throw ConfigError("train config: base_lr must be non-negative");
    }
    for (std::size_t i = 0; i < cfg.milestones.size(); ++i) {
        if (i > 0 && cfg.milestones[i] <= cfg.milestones[i - 1]) {
            throw ConfigError(
                "train config: milestones must be strictly increasing");
        }
        if (cfg.milestones[i] >= cfg.total_epochs) {
            throw ConfigError("train config: milestone " +
                              std::to_string(cfg.milestones[i]) +
                              " is past the last epoch");
        }
    }
}

double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch) {
    double lr = cfg.base_lr;
    for (std::size_t m : cfg.milestones) {
        if (m <= epoch) lr /= 10.0;
    }
    return lr;
}

EpochStats train_epoch(Network& net, SgdState& sgd, const Dataset& data,
                       StreamKind stream, const TrainConfig& cfg,
                       std::size_t epoch) {
    validate_train_config(cfg);
    if (data.samples.empty()) {
        throw ArgumentError("train_epoch: dataset is empty");
    }
    check_compatible(net, data, stream, "train_epoch");

    const std::size_t window = net.config.window;
    AugmentParams aug = cfg.augment;
    if (aug.crop_len == 0) aug.crop_len = window;

    std::vector<std::size_t> order(data.samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    // Augmentation draws key off the sample's dataset index, not its
    // shuffled position, so reordering cannot change any sample's crop.
    const std::uint64_t aug_base =
        mix_seed(cfg.seed, epoch ^ 0x9e3779b97f4a7c15ULL);

    auto params = named_parameters(net);
    const double lr = lr_at_epoch(cfg, epoch);
    const bool freeze_graphs =
        net.config.graph_warm_start && epoch < cfg.graph_freeze_epochs;
    // Frozen graphs must not move at all, so they are also shielded from
    // weight decay (decay alone would shrink them despite the zeroed
    // gradients).
    sgd.decay_scale.clear();
    if (!cfg.decay_norm_and_gates || freeze_graphs) {
        sgd.decay_scale.assign(params.size(), 1.0);
        for (std::size_t i = 0; i < params.size(); ++i) {
            const std::string& name = params[i].name;
            if (!cfg.decay_norm_and_gates &&
                (ends_with(name, ".gamma") || ends_with(name, ".beta") ||
                 ends_with(name, ".alpha"))) {
                sgd.decay_scale[i] = 0.0;
            }
            if (freeze_graphs && name.find(".B.") != std::string::npos) {
                sgd.decay_scale[i] = 0.0;
            }
        }
    }

    double loss_sum = 0.0;
    std::size_t hits = 0;
    const std::size_t n = order.size();
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
        const std::size_t stop = std::min(n, start + cfg.batch_size);
        const double inv_batch = 1.0 / static_cast<double>(stop - start);
        for (std::size_t pos = start; pos < stop; ++pos) {
            const std::size_t idx = order[pos];
            const SkeletonSequence& raw = data.samples[idx];
            if (raw.label < 0) {
                throw ArgumentError("train_epoch: sample " + raw.id +
                                    " has no label");
            }
            SkeletonSequence s =
                derive_stream(raw, data.topology, stream, cfg.center_coords);
            s = pad_repeat(s, static_cast<long>(window));
            std::mt19937_64 aug_rng(aug_base ^
                                    static_cast<std::uint64_t>(idx));
            s = augment(s, aug_rng, aug);
            Tensor logits = network_forward(net, sequence_tensor(s), true);
            const std::size_t label = static_cast<std::size_t>(raw.label);
            Tensor loss = cross_entropy(logits, label);
            loss_sum += loss.item();
            if (argmax_lowest(logits.values()) == label) ++hits;
            // Per-sample sweeps; leaf gradients accumulate across the batch.
            backward(mul_scalar(loss, inv_batch));
        }
        if (freeze_graphs) {
            for (NamedParam& p : params) {
                if (p.name.find(".B.") != std::string::npos) {
                    p.tensor.zero_grad();
                }
            }
        }
        sgd_nesterov_step(params, sgd, lr, cfg.momentum, cfg.weight_decay);
    }
    EpochStats stats;
    stats.mean_loss = loss_sum / static_cast<double>(n);
    stats.train_top1 = static_cast<double>(hits) / static_cast<double>(n);
    return stats;
}

EvalResult evaluate_topk(Network& net, const Dataset& data, StreamKind stream,
                         std::vector<std::size_t> ks, std::size_t threads,
                         bool center_coords) {
    if (data.samples.empty()) {
        throw ArgumentError("evaluate_topk: dataset is empty");
    }
    if (ks.empty()) {
        throw ArgumentError("evaluate_topk: no k values");
    }
    for (std::size_t k : ks) {
        if (k == 0) throw ArgumentError("evaluate_topk: k must be positive");
    }
    check_compatible(net, data, stream, "evaluate_topk");
    for (const SkeletonSequence& s : data.samples) {
        if (s.label < 0 ||
            static_cast<std::size_t>(s.label) >= net.config.num_classes) {
            throw ArgumentError("evaluate_topk: sample " + s.id +
                                " label out of range");
        }
    }

    const std::size_t n = data.samples.size();
    EvalResult result;
    result.ks = ks;
    result.scores.stream = to_string(stream);
    result.scores.ids.resize(n);
    result.scores.scores.resize(n);

    auto eval_range = [&](std::size_t begin, std::size_t end) {
        NoGradGuard guard;
        for (std::size_t i = begin; i < end; ++i) {
            const SkeletonSequence& raw = data.samples[i];
            SkeletonSequence s =
                derive_stream(raw, data.topology, stream, center_coords);
            s = pad_repeat(s, static_cast<long>(net.config.window));
            s = center_crop(s, net.config.window);
            Tensor probs = class_probabilities(
                network_forward(net, sequence_tensor(s), false));
            result.scores.ids[i] = raw.id;
            result.scores.scores[i] = probs.values();
        }
    };
    const std::size_t workers = std::min(threads, n);
    if (workers <= 1) {
        eval_range(0, n);
    } else {
        // Contiguous shards; each worker writes disjoint rows, so results
        // are independent of the thread count.
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            pool.emplace_back([&, w, begin, end] {
                try {
                    eval_range(begin, end);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (std::thread& t : pool) t.join();
        for (const std::exception_ptr& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    std::vector<int> labels;
    labels.reserve(n);
    for (const SkeletonSequence& s : data.samples) labels.push_back(s.label);
    result.accuracies = topk_from_scores(result.scores.scores, labels, ks);
    return result;
}

std::vector<double> topk_from_scores(
    const std::vector<std::vector<double>>& scores,
    const std::vector<int>& labels, const std::vector<std::size_t>& ks) {
    if (scores.empty() || scores.size() != labels.size()) {
        throw ArgumentError("topk_from_scores: " +
                            std::to_string(labels.size()) + " labels for " +
                            std::to_string(scores.size()) + " score rows");
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] < 0 ||
            static_cast<std::size_t>(labels[i]) >= scores[i].size()) {
            throw ArgumentError("topk_from_scores: label " +
                                std::to_string(labels[i]) +
                                " out of range for row " + std::to_string(i));
        }
    }
    std::vector<double> out;
    for (std::size_t k : ks) {
        if (k == 0) {
            throw ArgumentError("topk_from_scores: k must be positive");
        }
        std::size_t correct = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (label_rank(scores[i],
                           static_cast<std::size_t>(labels[i])) < k) {
                ++correct;
            }
        }
        out.push_back(static_cast<double>(correct) /
                      static_cast<double>(scores.size()));
    }
    return out;
}

ScoreSet ensemble_fuse(const std::vector<ScoreSet>& sets,
                       const std::vector<double>& weights) {
    if (sets.empty()) {
        throw ArgumentError("ensemble_fuse: no score sets");
    }
    if (!weights.empty() && weights.size() != sets.size()) {
        throw ArgumentError("ensemble_fuse: " +
                            std::to_string(weights.size()) + " weights for " +
                            std::to_string(sets.size()) + " score sets");
    }
    const ScoreSet& base = sets.front();
    const std::size_t n = base.ids.size();
    if (n == 0 || base.scores.size() != n) {
        throw ArgumentError("ensemble_fuse: malformed score set");
    }
    const std::size_t classes = base.scores.front().size();

    // Later sets may order samples differently; match rows by id.
    std::vector<std::vector<std::size_t>> rows(sets.size());
    for (std::size_t s = 1; s < sets.size(); ++s) {
        if (sets[s].ids.size() != n || sets[s].scores.size() != n) {
            throw ArgumentError(
                "ensemble_fuse: score sets cover different sample counts");
        }
        std::vector<std::size_t> lookup(n);
        std::vector<std::pair<std::string, std::size_t>> index;
        index.reserve(n);
        for (std::size_t i = 0; i < n; ++i) index.emplace_back(sets[s].ids[i], i);
        std::sort(index.begin(), index.end());
        for (std::size_t i = 1; i < n; ++i) {
            if (index[i].first == index[i - 1].first) {
                throw ArgumentError("ensemble_fuse: duplicate sample id " +
                                    index[i].first);
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            auto it = std::lower_bound(
                index.begin(), index.end(),
                std::make_pair(base.ids[i], std::size_t{0}));
            if (it == index.end() || it->first != base.ids[i]) {
                throw ArgumentError("ensemble_fuse: sample " + base.ids[i] +
                                    " missing from set " + sets[s].stream);
            }
            lookup[i] = it->second;
        }
        rows[s] = std::move(lookup);
    }

    ScoreSet fused;
    fused.stream = "fused";
    fused.ids = base.ids;
    fused.scores.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> acc(classes, 0.0);
        for (std::size_t s = 0; s < sets.size(); ++s) {
            const std::size_t row = (s == 0) ? i : rows[s][i];
            const std::vector<double>& sc = sets[s].scores[row];
            if (sc.size() != classes) {
                throw ArgumentError(
                    "ensemble_fuse: class counts differ between sets");
            }
            const double w = weights.empty() ? 1.0 : weights[s];
            for (std::size_t c = 0; c < classes; ++c) acc[c] += w * sc[c];
        }
        double total = 0.0;
        for (double v : acc) total += v;
        if (!(total > 0.0)) {
            throw ArgumentError("ensemble_fuse: scores for sample " +
                                base.ids[i] + " sum to " +
                                std::to_string(total));
        }
        for (double& v : acc) v /= total;
        fused.scores[i] = std::move(acc);
    }
    return fused;
}

double gradient_mismatch(const std::vector<double>& analytic,
                         const std::vector<double>& reference) {
    if (analytic.size() != reference.size()) {
        throw ArgumentError("gradient_mismatch: lengths differ");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max(1.0, std::fabs(reference[i]));
        worst = std::max(worst, std::fabs(analytic[i] - reference[i]) / denom);
    }
    return worst;
}

GradCheckReport grad_check_model(const ModelConfig& cfg, double tol,
                                 std::uint64_t seed) {
    if (cfg.blocks.size() > 3) {
        throw ConfigError(
            "grad check: use at most 3 blocks (every parameter is probed "
            "twice per finite difference)");
    }
    Network net = make_network(cfg, seed);
    auto params = named_parameters(net);
    std::mt19937_64 rng(mix_seed(seed, 0x67726164));
    std::uniform_real_distribution<double> unit(-0.5, 0.5);
    for (NamedParam& p : params) {
        for (double& v : p.tensor.values()) v = unit(rng);
    }

    const std::size_t batch = 2;
    std::vector<Tensor> xs;
    std::vector<std::size_t> labels;
    std::uniform_int_distribution<std::size_t> pick(0, cfg.num_classes - 1);
    const std::size_t count = cfg.in_channels * cfg.window *
                              net.topology.num_joints * cfg.bodies;
    for (std::size_t b = 0; b < batch; ++b) {
        std::vector<double> data(count);
        for (double& v : data) v = unit(rng);
        xs.push_back(Tensor::from_data({cfg.in_channels, cfg.window,
                                        net.topology.num_joints, cfg.bodies},
                                       std::move(data)));
        labels.push_back(pick(rng));
    }

    // Mean batch loss as a plain value (BN batch statistics make the value
    // independent of the running stats the probes keep nudging).
    auto loss_value = [&]() {
        NoGradGuard guard;
        double total = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            total +=
                cross_entropy(network_forward(net, xs[b], true), labels[b])
                    .item();
        }
        return total / static_cast<double>(batch);
    };

    for (NamedParam& p : params) p.tensor.zero_grad();
    for (std::size_t b = 0; b < batch; ++b) {
        Tensor loss = cross_entropy(network_forward(net, xs[b], true),
                                    labels[b]);
        backward(mul_scalar(loss, 1.0 / static_cast<double>(batch)));
    }

    GradCheckReport report;
    report.tol = tol;
    const double eps = 1e-4;
    // A central difference across a relu kink measures the kink, not the
    // derivative, so every probe is repeated at half the step: a smooth
    // probe agrees to O(eps^2) (far below this gate), a contaminated one
    // disagrees by the same order as the contamination itself.
    const double consistency_tol = 1e-6;
    auto probe = [&](std::vector<double>& value, std::size_t j, double step) {
        const double saved = value[j];
        value[j] = saved + step;
        const double up = loss_value();
        value[j] = saved - step;
        const double down = loss_value();
        value[j] = saved;
        return (up - down) / (2.0 * step);
    };
    for (NamedParam& p : params) {
        const std::vector<double> analytic = p.tensor.grad();
        std::vector<double>& value = p.tensor.values();
        GradCheckEntry entry;
        entry.name = p.name;
        for (std::size_t j = 0; j < value.size(); ++j) {
            const double full = probe(value, j, eps);
            const double half = probe(value, j, eps / 2.0);
            const double scale = std::max(1.0, std::abs(full));
            if (std::abs(full - half) / scale > consistency_tol) {
                ++entry.skipped;
                continue;
            }
            entry.max_rel_err = std::max(
                entry.max_rel_err, std::abs(analytic[j] - full) / scale);
        }
        report.worst = std::max(report.worst, entry.max_rel_err);
        report.skipped += entry.skipped;
        report.entries.push_back(std::move(entry));
    }
    report.passed = report.worst < tol;
    for (NamedParam& p : params) p.tensor.zero_grad();
    return report;
}

}  // namespace skelact
