// Acceptance harness: one line per criterion, PASS/FAIL with the measured
// numbers, exit nonzero when any blocking criterion fails. Criteria cover
// gradient fidelity, the sample-graph and degenerate-equivalence oracles,
// structural invariances, small-scale learning (overfit + ensemble),
// schedule exactness, data-pipeline oracles, determinism of full runs, and
// the parameter-count report (report-only).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "skelact/adjacency.hpp"
#include "skelact/agcl.hpp"
#include "skelact/checkpoint.hpp"
#include "skelact/dataset_io.hpp"
#include "skelact/network.hpp"
#include "skelact/runner.hpp"
#include "skelact/sequence.hpp"
#include "skelact/streams.hpp"
#include "skelact/synth.hpp"
#include "skelact/topology.hpp"
#include "skelact/train.hpp"

using namespace skelact;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("skelact-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Tensor rand_tensor(const Shape& shape, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor t = Tensor::zeros(shape);
    for (double& v : t.values()) v = dist(rng);
    return t;
}

double max_abs_diff(const std::vector<double>& a,
                    const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::fabs(a[i] - b[i]));
    }
    return worst;
}

bool bitwise_equal(const std::vector<double>& a,
                   const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return false;
    }
    return true;
}

int failures = 0;

void report(int criterion, bool pass, const std::string& detail,
            bool blocking = true) {
    std::cout << "criterion " << criterion << ": "
              << (pass ? "PASS" : "FAIL") << " - " << detail << "\n";
    if (!pass && blocking) ++failures;
}

// ---------------------------------------------------------------------
// shared fixtures for the learning criteria

// Reduced backbone over the 11-joint chain the synthetic corpus uses.
ModelConfig overfit_model() {
    ModelConfig cfg;
    cfg.topology = "chain11";
    cfg.strategy = PartitionStrategy::spatial;
    cfg.subsets = 3;
    cfg.in_channels = 3;
    cfg.blocks = {{16, 1}, {16, 1}, {32, 2}};
    cfg.window = 32;
    cfg.bodies = 1;
    cfg.num_classes = 4;
    return cfg;
}

TrainConfig overfit_train(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.base_lr = 0.05;
    cfg.momentum = 0.9;
    cfg.weight_decay = 1e-4;
    cfg.batch_size = 16;
    cfg.milestones = {};
    cfg.total_epochs = 300;
    cfg.seed = seed;
    return cfg;
}

SynthSpec synth_spec(std::size_t per_class) {
    SynthSpec spec;
    spec.num_classes = 4;
    spec.per_class = per_class;
    spec.joints = 11;
    spec.frames = 32;
    spec.noise_std = 0.01;
    return spec;
}

// ---------------------------------------------------------------------

void criterion_1() {
    const auto start = Clock::now();
    std::vector<ModelConfig> configs;
    {
        // Widest case allowed: C=8, T=12, N=5, three subsets.
        ModelConfig cfg;
        cfg.topology = "chain5";
        cfg.blocks = {{8, 1}};
        cfg.stc = StcConfig{3, 2, 3};
        cfg.temporal_kernel = 3;
        cfg.window = 12;
        cfg.bodies = 1;
        cfg.num_classes = 3;
        configs.push_back(cfg);
    }
    {
        // Two blocks with a stride, distance partition, N=7.
        ModelConfig cfg;
        cfg.topology = "chain7";
        cfg.strategy = PartitionStrategy::distance;
        cfg.subsets = 2;
        cfg.in_channels = 2;
        cfg.blocks = {{4, 1}, {6, 2}};
        cfg.stc = StcConfig{3, 2, 5};
        cfg.temporal_kernel = 3;
        cfg.window = 10;
        cfg.bodies = 1;
        cfg.num_classes = 4;
        configs.push_back(cfg);
    }
    {
        // Two bodies, single subset.
        ModelConfig cfg;
        cfg.topology = "chain4";
        cfg.strategy = PartitionStrategy::uniform;
        cfg.subsets = 1;
        cfg.in_channels = 3;
        cfg.blocks = {{5, 1}};
        cfg.stc = StcConfig{1, 2, 3};
        cfg.temporal_kernel = 5;
        cfg.window = 8;
        cfg.bodies = 2;
        cfg.num_classes = 2;
        configs.push_back(cfg);
    }

    double worst = 0.0;
    bool all_passed = true;
    std::size_t skipped = 0;
    std::vector<std::string> families = {
        ".agcl.",     ".stc.sam.", ".stc.tam.reduce", ".stc.tam.fc",
        ".stc.cam.", ".tconv",    ".bn1.",           ".bn2.",
        "input_bn.", "fc."};
    std::vector<bool> seen(families.size(), false);
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const GradCheckReport rep =
            grad_check_model(configs[i], 1e-5, 1000 + i);
        worst = std::max(worst, rep.worst);
        skipped += rep.skipped;
        all_passed = all_passed && rep.passed;
        for (const GradCheckEntry& entry : rep.entries) {
            for (std::size_t f = 0; f < families.size(); ++f) {
                if (entry.name.find(families[f]) != std::string::npos) {
                    seen[f] = true;
                }
            }
        }
    }
    bool covered = true;
    std::string missing;
    for (std::size_t f = 0; f < families.size(); ++f) {
        if (!seen[f]) {
            covered = false;
            missing += " " + families[f];
        }
    }
    const double elapsed = seconds_since(start);
    std::ostringstream detail;
    detail << "gradient fidelity: worst rel err " << worst << " over "
           << configs.size() << " configs (tol 1e-5, " << skipped
           << " kink probes screened), " << elapsed << " s";
    if (!covered) detail << "; MISSING families:" << missing;
    report(1, all_passed && covered && elapsed < 60.0, detail.str());
}

void criterion_2() {
    std::mt19937_64 rng(22025);
    std::uniform_real_distribution<double> dist(-0.8, 0.8);
    double worst_row = 0.0;
    bool in_range = true;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + trial % 6;
        const std::size_t c_in = 1 + trial % 4;
        const std::size_t c_e = 1 + trial % 3;
        const std::size_t t = 1 + trial % 6;
        Tensor f = rand_tensor({c_in, t, n}, 3000 + trial);
        Tensor wt = Tensor::zeros({c_e, c_in});
        Tensor bt = Tensor::zeros({c_e});
        Tensor wp = Tensor::zeros({c_e, c_in});
        Tensor bp = Tensor::zeros({c_e});
        for (double& v : wt.values()) v = dist(rng);
        for (double& v : bt.values()) v = dist(rng);
        for (double& v : wp.values()) v = dist(rng);
        for (double& v : bp.values()) v = dist(rng);
        const Tensor graph = compute_sample_graph(f, wt, bt, wp, bp);
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double v = graph.values()[i * n + j];
                if (!(v > 0.0 && v < 1.0)) in_range = false;
                row += v;
            }
            worst_row = std::max(worst_row, std::fabs(row - 1.0));
        }
    }
    std::ostringstream detail;
    detail << "sample graphs row-stochastic: worst |row sum - 1| = "
           << worst_row << " over 100 inputs, entries in (0,1): "
           << (in_range ? "yes" : "NO");
    report(2, worst_row < 1e-12 && in_range, detail.str());
}

void criterion_3() {
    std::mt19937_64 rng(32025);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + trial % 6;
        const SkeletonTopology topo =
            build_topology("chain" + std::to_string(n));
        PartitionStrategy strategy = PartitionStrategy::uniform;
        std::size_t subsets = 1 + trial % 3;
        if (trial % 3 == 1) strategy = PartitionStrategy::distance;
        if (trial % 3 == 2) {
            strategy = PartitionStrategy::spatial;
            subsets = 3;
        }
        const AdjacencySet adj = build_adjacency(topo, strategy, subsets);
        const std::size_t c_in = 1 + trial % 3;
        const std::size_t c_out = 2 + trial % 3;
        const std::size_t t = 1 + trial % 5;
        AgclLayer layer =
            make_agcl(c_in, c_out, adj, AgclResidual::none, rng);
        const Tensor f = rand_tensor({c_in, t, n}, 4000 + trial);
        const Tensor adaptive = agcl_forward(layer, f);
        std::vector<Tensor> masks(adj.subsets(),
                                  Tensor::full({n, n}, 1.0));
        std::vector<Tensor> weights(layer.weight.begin(),
                                    layer.weight.end());
        std::vector<Tensor> biases(layer.weight_bias.begin(),
                                   layer.weight_bias.end());
        const Tensor baseline =
            gcn_baseline_forward(f, adj, masks, weights, biases);
        worst = std::max(
            worst, max_abs_diff(adaptive.values(), baseline.values()));
    }
    std::ostringstream detail;
    detail << "degenerate equivalence: max |adaptive - baseline| = " << worst
           << " over 50 instances (tol 1e-12)";
    report(3, worst < 1e-12, detail.str());
}

void criterion_4() {
    // (a) joint relabeling of input + topology.
    ModelConfig cfg;
    cfg.topology = "chain6";
    cfg.in_channels = 2;
    cfg.blocks = {{4, 1}, {6, 2}};
    cfg.stc = StcConfig{3, 2, 3};
    cfg.temporal_kernel = 3;
    cfg.window = 8;
    cfg.bodies = 1;
    cfg.num_classes = 3;

    const SkeletonTopology topo = build_topology("chain6");
    const std::vector<std::size_t> sigma = {3, 0, 5, 2, 1, 4};
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& [p, d] : topo.edges) edges.push_back({sigma[p], sigma[d]});
    const SkeletonTopology relabeled = build_custom_topology(
        "chain6-relabeled", topo.num_joints, edges, sigma[topo.center_joint]);

    Network net = make_network(cfg, topo, 4001);
    Network net_relabeled = make_network(cfg, relabeled, 4001);
    auto params = named_parameters(net);
    auto params_relabeled = named_parameters(net_relabeled);
    std::mt19937_64 rng(4002);
    std::uniform_real_distribution<double> dist(-0.3, 0.3);
    for (std::size_t i = 0; i < params.size(); ++i) {
        // Joint-indexed tensors (learned graphs, input BN over C*N) must
        // stay at their joint-symmetric defaults for the comparison.
        if (params[i].name.find(".B.") != std::string::npos ||
            params[i].name.rfind("input_bn", 0) == 0) {
            continue;
        }
        for (double& v : params[i].tensor.values()) v = dist(rng);
        params_relabeled[i].tensor.values() = params[i].tensor.values();
    }
    const std::size_t c = cfg.in_channels, t = cfg.window, n = topo.num_joints;
    const Tensor x = rand_tensor({c, t, n, 1}, 4003);
    std::vector<double> permuted(x.size());
    for (std::size_t ci = 0; ci < c; ++ci) {
        for (std::size_t ti = 0; ti < t; ++ti) {
            for (std::size_t ni = 0; ni < n; ++ni) {
                permuted[(ci * t + ti) * n + sigma[ni]] =
                    x.values()[(ci * t + ti) * n + ni];
            }
        }
    }
    const Tensor logits = network_forward(net, x, false);
    const Tensor logits_relabeled = network_forward(
        net_relabeled, Tensor::from_data({c, t, n, 1}, permuted), false);
    const double relabel_diff =
        max_abs_diff(logits.values(), logits_relabeled.values());

    // (b) body swap.
    ModelConfig cfg2 = cfg;
    cfg2.topology = "chain4";
    cfg2.bodies = 2;
    Network net2 = make_network(cfg2, 4004);
    auto params2 = named_parameters(net2);
    std::mt19937_64 rng2(4005);
    for (NamedParam& p : params2) {
        for (double& v : p.tensor.values()) v = dist(rng2);
    }
    const Tensor x2 = rand_tensor({2, 8, 4, 2}, 4006);
    std::vector<double> swapped(x2.size());
    for (std::size_t i = 0; i < x2.size(); i += 2) {
        swapped[i] = x2.values()[i + 1];
        swapped[i + 1] = x2.values()[i];
    }
    const Tensor a = network_forward(net2, x2, false);
    const Tensor b = network_forward(
        net2, Tensor::from_data({2, 8, 4, 2}, swapped), false);
    const double swap_diff = max_abs_diff(a.values(), b.values());

    // (c) softmax shift invariance.
    const Tensor z = rand_tensor({7}, 4007);
    std::vector<double> shifted = z.values();
    for (double& v : shifted) v += 3.75;
    const Tensor pz = class_probabilities(z);
    const Tensor ps = class_probabilities(Tensor::from_data({7}, shifted));
    const double shift_diff = max_abs_diff(pz.values(), ps.values());

    std::ostringstream detail;
    detail << "structural invariance: relabel diff " << relabel_diff
           << ", body swap diff " << swap_diff << " (tol 1e-9); softmax "
           << "shift diff " << shift_diff << " (tol 1e-12)";
    report(4,
           relabel_diff < 1e-9 && swap_diff < 1e-9 && shift_diff < 1e-12,
           detail.str());
}

// Shared state between criteria 5 and 9 (9 reruns 5's exact run).
struct OverfitOutcome {
    bool reached = false;
    std::size_t epoch_at_full = 0;
    double heldout_top1 = 0.0;
    double elapsed = 0.0;
    fs::path run_dir;
};

OverfitOutcome run_overfit(const std::string& tag) {
    const fs::path train_dir = fresh_dir("accept-train-data");
    const fs::path held_dir = fresh_dir("accept-held-data");
    dataset_write(synth_generate(synth_spec(16), 42), train_dir);
    dataset_write(synth_generate(synth_spec(8), 4242), held_dir);

    OverfitOutcome outcome;
    outcome.run_dir = fresh_dir("accept-overfit-" + tag);
    RunOptions options;
    options.model = overfit_model();
    options.train = overfit_train(42);
    options.stream = StreamKind::joint;
    options.data_dir = train_dir;
    options.out_dir = outcome.run_dir;
    options.stop_at_train_top1 = 1.0;

    const auto start = Clock::now();
    const RunResult result = run_training(options);
    if (!result.records.empty() &&
        result.records.back().train_top1 == 1.0) {
        outcome.reached = true;
        outcome.epoch_at_full = result.records.back().epoch;
    }
    Checkpoint ckpt = checkpoint_load(outcome.run_dir / "model");
    const Dataset held = dataset_read(held_dir);
    const EvalResult ev =
        evaluate_topk(ckpt.net, held, StreamKind::joint, {1});
    outcome.heldout_top1 = ev.accuracies[0];
    outcome.elapsed = seconds_since(start);
    return outcome;
}

OverfitOutcome criterion_5() {
    const OverfitOutcome outcome = run_overfit("run1");
    std::ostringstream detail;
    detail << "overfit: train top-1 "
           << (outcome.reached ? "reached 100%" : "DID NOT reach 100%")
           << " at epoch " << outcome.epoch_at_full << " (limit 300), "
           << "heldout top-1 " << outcome.heldout_top1 * 100.0
           << "% (need >= 90%), " << outcome.elapsed << " s (limit 300)";
    report(5,
           outcome.reached && outcome.heldout_top1 >= 0.90 &&
               outcome.elapsed <= 300.0,
           detail.str());
    return outcome;
}

void criterion_6() {
    const fs::path train_dir = fresh_dir("accept-ens-train");
    const fs::path held_dir = fresh_dir("accept-ens-held");
    dataset_write(synth_generate(synth_spec(16), 42), train_dir);
    dataset_write(synth_generate(synth_spec(8), 4242), held_dir);
    const Dataset held = dataset_read(held_dir);
    std::vector<int> labels;
    for (const SkeletonSequence& s : held.samples) labels.push_back(s.label);

    const std::vector<StreamKind> streams = {
        StreamKind::joint, StreamKind::bone, StreamKind::joint_motion,
        StreamKind::bone_motion};
    double fused_sum = 0.0;
    double best_sum = 0.0;
    const std::vector<std::uint64_t> seeds = {201, 202, 203, 204, 205};
    for (std::uint64_t seed : seeds) {
        std::vector<ScoreSet> sets;
        double best = 0.0;
        for (StreamKind stream : streams) {
            RunOptions options;
            options.model = overfit_model();
            options.train = overfit_train(seed);
            options.train.total_epochs = 40;
            options.stream = stream;
            options.data_dir = train_dir;
            options.out_dir = fresh_dir(
                "accept-ens-" + std::to_string(seed) + "-" +
                to_string(stream));
            options.stop_at_train_top1 = 1.0;
            run_training(options);
            Checkpoint ckpt = checkpoint_load(options.out_dir / "model");
            EvalResult ev = evaluate_topk(ckpt.net, held, stream, {1});
            best = std::max(best, ev.accuracies[0]);
            sets.push_back(std::move(ev.scores));
        }
        const ScoreSet fused = ensemble_fuse(sets);
        const std::vector<double> acc =
            topk_from_scores(fused.scores, labels, {1});
        fused_sum += acc[0];
        best_sum += best;
    }
    const double mean_fused = fused_sum / static_cast<double>(seeds.size());
    const double mean_best = best_sum / static_cast<double>(seeds.size());
    std::ostringstream detail;
    detail << "ensemble: mean fused top-1 " << mean_fused * 100.0
           << "% vs mean best single-stream " << mean_best * 100.0
           << "% over 5 seeds (fused must be >= best - 2pp)";
    report(6, mean_fused >= mean_best - 0.02, detail.str());
}

void criterion_7() {
    TrainConfig cfg;
    cfg.base_lr = 0.01;
    cfg.milestones = {30, 40};
    cfg.total_epochs = 50;
    const bool ok = lr_at_epoch(cfg, 0) == 0.01 &&
                    lr_at_epoch(cfg, 29) == 0.01 &&
                    lr_at_epoch(cfg, 30) == 0.001 &&
                    lr_at_epoch(cfg, 39) == 0.001 &&
                    lr_at_epoch(cfg, 40) == 0.0001 &&
                    lr_at_epoch(cfg, 49) == 0.0001;
    report(7, ok,
           "schedule exactness: lr(29)=0.01, lr(30)=0.001, lr(40)=0.0001, "
           "all exact");
}

void criterion_8() {
    std::mt19937_64 rng(82025);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    bool streams_ok = true;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 7;
        const std::size_t t = 1 + trial % 10;
        const std::size_t m = 1 + trial % 2;
        const SkeletonTopology topo =
            build_topology("chain" + std::to_string(n));
        SkeletonSequence seq = SkeletonSequence::zeros(3, t, n, m);
        for (double& v : seq.data) v = dist(rng);

        // Naive bone: distal minus proximal per edge, untouched slots zero.
        SkeletonSequence bone_ref = seq;
        std::fill(bone_ref.data.begin(), bone_ref.data.end(), 0.0);
        for (const auto& [p, d] : topo.edges) {
            for (std::size_t c = 0; c < 3; ++c) {
                for (std::size_t f = 0; f < t; ++f) {
                    for (std::size_t b = 0; b < m; ++b) {
                        bone_ref.at(c, f, d, b) =
                            seq.at(c, f, d, b) - seq.at(c, f, p, b);
                    }
                }
            }
        }
        streams_ok = streams_ok &&
                     bitwise_equal(derive_bone_stream(seq, topo).data,
                                   bone_ref.data);

        // Naive motion: next minus current, zero tail.
        SkeletonSequence motion_ref = seq;
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t f = 0; f < t; ++f) {
                for (std::size_t j = 0; j < n; ++j) {
                    for (std::size_t b = 0; b < m; ++b) {
                        motion_ref.at(c, f, j, b) =
                            (f + 1 < t) ? seq.at(c, f + 1, j, b) -
                                              seq.at(c, f, j, b)
                                        : 0.0;
                    }
                }
            }
        }
        streams_ok = streams_ok &&
                     bitwise_equal(derive_motion_stream(seq).data,
                                   motion_ref.data);

        // Naive lengths: Euclidean norms accumulated in channel order.
        SkeletonSequence bone_len_ref =
            SkeletonSequence::zeros(1, t, n, m);
        SkeletonSequence joint_len_ref =
            SkeletonSequence::zeros(1, t, n, m);
        for (std::size_t f = 0; f < t; ++f) {
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t b = 0; b < m; ++b) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < 3; ++c) {
                        const double v = bone_ref.at(c, f, j, b);
                        acc += v * v;
                    }
                    bone_len_ref.at(0, f, j, b) = std::sqrt(acc);
                    acc = 0.0;
                    for (std::size_t c = 0; c < 3; ++c) {
                        const double v =
                            seq.at(c, f, j, b) -
                            seq.at(c, f, topo.center_joint, b);
                        acc += v * v;
                    }
                    joint_len_ref.at(0, f, j, b) = std::sqrt(acc);
                }
            }
        }
        streams_ok =
            streams_ok &&
            bitwise_equal(
                derive_length_stream(seq, topo, LengthKind::bone).data,
                bone_len_ref.data) &&
            bitwise_equal(
                derive_length_stream(seq, topo, LengthKind::joint).data,
                joint_len_ref.data);

        // Naive cyclic padding.
        const std::size_t target = t + 1 + trial % 8;
        SkeletonSequence pad_ref =
            SkeletonSequence::zeros(3, target, n, m);
        pad_ref.label = seq.label;
        pad_ref.id = seq.id;
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t f = 0; f < target; ++f) {
                for (std::size_t j = 0; j < n; ++j) {
                    for (std::size_t b = 0; b < m; ++b) {
                        pad_ref.at(c, f, j, b) = seq.at(c, f % t, j, b);
                    }
                }
            }
        }
        streams_ok =
            streams_ok &&
            bitwise_equal(
                pad_repeat(seq, static_cast<long>(target)).data,
                pad_ref.data) &&
            bitwise_equal(pad_repeat(seq, static_cast<long>(t)).data,
                          seq.data);
    }

    // Dataset round-trip, bitwise.
    const Dataset ds = synth_generate(synth_spec(3), 7);
    const fs::path ds_dir = fresh_dir("accept-ds-roundtrip");
    dataset_write(ds, ds_dir);
    const Dataset back = dataset_read(ds_dir);
    bool ds_ok = back.samples.size() == ds.samples.size() &&
                 back.topology.name == ds.topology.name &&
                 back.class_names == ds.class_names;
    for (std::size_t i = 0; ds_ok && i < ds.samples.size(); ++i) {
        ds_ok = back.samples[i].id == ds.samples[i].id &&
                back.samples[i].label == ds.samples[i].label &&
                bitwise_equal(back.samples[i].data, ds.samples[i].data);
    }

    // Checkpoint round-trip, bitwise.
    ModelConfig small = overfit_model();
    small.blocks = {{8, 1}};
    Network net = make_network(small, 9);
    auto params = named_parameters(net);
    std::mt19937_64 prng(10);
    for (NamedParam& p : params) {
        for (double& v : p.tensor.values()) v = dist(prng);
    }
    const fs::path ck_dir = fresh_dir("accept-ckpt-roundtrip");
    SgdState sgd;
    checkpoint_save(net, sgd, 3, ck_dir);
    Checkpoint loaded = checkpoint_load(ck_dir);
    auto loaded_params = named_parameters(loaded.net);
    bool ck_ok = loaded.epochs_completed == 3 &&
                 loaded_params.size() == params.size();
    for (std::size_t i = 0; ck_ok && i < params.size(); ++i) {
        ck_ok = bitwise_equal(loaded_params[i].tensor.values(),
                              params[i].tensor.values());
    }

    // Resume equivalence: 2 epochs + 2 resumed vs 4 straight.
    const fs::path rs_data = fresh_dir("accept-resume-data");
    dataset_write(synth_generate(synth_spec(3), 11), rs_data);
    RunOptions options;
    options.model = small;
    options.train = overfit_train(5);
    options.train.batch_size = 4;
    options.train.total_epochs = 4;
    options.data_dir = rs_data;
    options.out_dir = fresh_dir("accept-resume-straight");
    run_training(options);
    Checkpoint straight = checkpoint_load(options.out_dir / "model");

    options.out_dir = fresh_dir("accept-resume-split");
    options.train.total_epochs = 2;
    run_training(options);
    options.train.total_epochs = 4;
    options.resume = true;
    run_training(options);
    Checkpoint split = checkpoint_load(options.out_dir / "model");

    double resume_diff = 0.0;
    auto sp = named_parameters(straight.net);
    auto pp = named_parameters(split.net);
    for (std::size_t i = 0; i < sp.size(); ++i) {
        resume_diff = std::max(
            resume_diff,
            max_abs_diff(sp[i].tensor.values(), pp[i].tensor.values()));
    }

    std::ostringstream detail;
    detail << "data-pipeline oracles: 200 random sequences "
           << (streams_ok ? "bitwise-match" : "MISMATCH")
           << " naive references; dataset round-trip "
           << (ds_ok ? "bitwise" : "LOSSY") << "; checkpoint round-trip "
           << (ck_ok ? "bitwise" : "LOSSY") << "; resume diff "
           << resume_diff << " (tol 1e-12)";
    report(8, streams_ok && ds_ok && ck_ok && resume_diff <= 1e-12,
           detail.str());
}

void criterion_9(const OverfitOutcome& first) {
    const OverfitOutcome second = run_overfit("run2");
    const std::string a = slurp(first.run_dir / "metrics.jsonl");
    const std::string b = slurp(second.run_dir / "metrics.jsonl");
    const bool ok = !a.empty() && a == b;
    std::ostringstream detail;
    detail << "determinism: two identical overfit runs produced "
           << (ok ? "byte-identical" : "DIFFERING") << " metrics.jsonl ("
           << a.size() << " bytes)";
    report(9, ok, detail.str());
}

void criterion_10() {
    Network net = make_network(default_model_config(), 1);
    const ParamCount count = count_parameters(net);
    for (const ParamCountRow& row : count.rows) {
        std::cout << "    " << row.module << ": " << row.count << "\n";
    }
    const double reference = 24.3e6;
    const double delta =
        (static_cast<double>(count.total) - reference) / 1e6;
    std::ostringstream detail;
    detail << "parameter report (non-blocking): total " << count.total
           << " for the stock backbone; headline reference 24.3M, delta "
           << delta << "M (single-stream network; see README)";
    report(10, true, detail.str(), /*blocking=*/false);
}

}  // namespace

int main() {
    const auto start = Clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    const OverfitOutcome overfit = criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9(overfit);
    criterion_10();
    std::cout << (failures == 0 ? "acceptance: all blocking criteria passed"
                                : "acceptance: " + std::to_string(failures) +
                                      " blocking criteria FAILED")
              << " (" << seconds_since(start) << " s total)\n";
    return failures == 0 ? 0 : 1;
}
