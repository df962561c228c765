#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "skelact/checkpoint.hpp"
#include "skelact/config_json.hpp"
#include "skelact/dataset_io.hpp"
#include "skelact/errors.hpp"
#include "skelact/export_csv.hpp"
#include "skelact/network.hpp"
#include "skelact/runner.hpp"
#include "skelact/scores_io.hpp"
#include "skelact/streams.hpp"
#include "skelact/synth.hpp"
#include "skelact/topology.hpp"
#include "skelact/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace skelact;

namespace {

// Everything a run is governed by, merged from built-in defaults, then the
// config file, then command-line flags (later layers win). The merged result
// is echoed beside every command's outputs so a run can be reproduced from
// its own artifacts.
struct Settings {
    ModelConfig model = default_model_config();
    TrainConfig train;
    SynthSpec synth;
    std::uint64_t synth_seed = 42;
    std::string data;
    std::string eval_data;
    std::string out;
    std::string stream = "joint";
    std::vector<std::string> streams;  // preprocess targets
    std::size_t threads = 1;
    bool model_given = false;  // config file carried a "model" section
};

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

template <typename T>
void read_key(const json& doc, const char* key, T& out,
              const std::string& where) {
    if (!doc.contains(key)) return;
    try {
        out = doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for '" + std::string(key) + "' in " +
                          where);
    }
}

void reject_unknown(const json& doc, const std::set<std::string>& known,
                    const std::string& where) {
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (!known.count(key)) {
            throw ConfigError("unknown config key '" + key + "' in " + where);
        }
    }
}

Settings settings_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw FormatError("malformed config " + path + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("config root must be an object in " + path);
    }
    reject_unknown(doc,
                   {"model", "train", "synth", "data", "eval_data", "out",
                    "stream", "streams", "threads"},
                   path);

    Settings s;
    if (doc.contains("model")) {
        s.model = model_config_from_json(doc.at("model"), s.model);
        s.model_given = true;
    }
    if (doc.contains("train")) {
        s.train = train_config_from_json(doc.at("train"), s.train);
    }
    if (doc.contains("synth")) {
        const json& sy = doc.at("synth");
        const std::string where = path + " (synth)";
        if (!sy.is_object()) {
            throw ConfigError("'synth' must be an object in " + path);
        }
        reject_unknown(
            sy, {"classes", "per_class", "joints", "frames", "noise", "seed"},
            where);
        read_key(sy, "classes", s.synth.num_classes, where);
        read_key(sy, "per_class", s.synth.per_class, where);
        read_key(sy, "joints", s.synth.joints, where);
        read_key(sy, "frames", s.synth.frames, where);
        read_key(sy, "noise", s.synth.noise_std, where);
        read_key(sy, "seed", s.synth_seed, where);
    }
    read_key(doc, "data", s.data, path);
    read_key(doc, "eval_data", s.eval_data, path);
    read_key(doc, "out", s.out, path);
    read_key(doc, "stream", s.stream, path);
    read_key(doc, "streams", s.streams, path);
    read_key(doc, "threads", s.threads, path);
    return s;
}

json effective_config(const Settings& s) {
    json doc;
    doc["model"] = model_config_to_json(s.model);
    doc["train"] = train_config_to_json(s.train);
    doc["synth"] = {{"classes", s.synth.num_classes},
                    {"per_class", s.synth.per_class},
                    {"joints", s.synth.joints},
                    {"frames", s.synth.frames},
                    {"noise", s.synth.noise_std},
                    {"seed", s.synth_seed}};
    doc["data"] = s.data;
    doc["eval_data"] = s.eval_data;
    doc["out"] = s.out;
    doc["stream"] = s.stream;
    doc["streams"] = s.streams;
    doc["threads"] = s.threads;
    return doc;
}

// Persists the merged config next to a command's outputs; feeding the file
// back via --config reproduces the run.
void write_effective_config(const Settings& s, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
    const fs::path path = dir / "effective_config.json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot create " + path.string());
    out << effective_config(s).dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : text) {
        if (c == ',') {
            parts.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    parts.push_back(current);
    return parts;
}

std::vector<std::size_t> parse_topk(const std::string& text) {
    std::vector<std::size_t> ks;
    for (const std::string& part : split_list(text)) {
        std::size_t used = 0;
        unsigned long value = 0;
        try {
            value = std::stoul(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != part.size() || part.empty() || value == 0) {
            throw ConfigError("bad --topk entry '" + part +
                              "' (expected positive integers like 1,5)");
        }
        ks.push_back(static_cast<std::size_t>(value));
    }
    return ks;
}

std::vector<double> parse_weights(const std::string& text) {
    std::vector<double> weights;
    for (const std::string& part : split_list(text)) {
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != part.size() || part.empty()) {
            throw ConfigError("bad --weights entry '" + part +
                              "' (expected numbers like 1,0.5)");
        }
        weights.push_back(value);
    }
    return weights;
}

json topk_report(const std::vector<std::size_t>& ks,
                 const std::vector<double>& accuracies) {
    json rows = json::array();
    for (std::size_t i = 0; i < ks.size(); ++i) {
        rows.push_back({{"k", ks[i]}, {"accuracy", accuracies[i]}});
    }
    return rows;
}

int do_synth(const Settings& s) {
    require(!s.out.empty(), "synth: --out is required");
    const Dataset ds = synth_generate(s.synth, s.synth_seed);
    dataset_write(ds, s.out);
    write_effective_config(s, s.out);
    std::cerr << "wrote " << ds.samples.size() << " samples to " << s.out
              << "\n";
    return 0;
}

int do_preprocess(const Settings& s) {
    require(!s.data.empty(), "preprocess: --data is required");
    require(!s.out.empty(), "preprocess: --out is required");
    require(!s.streams.empty(),
            "preprocess: --streams must name at least one stream");
    const Dataset ds = dataset_read(s.data);
    for (const std::string& name : s.streams) {
        const StreamKind kind = stream_kind_from_string(name);
        Dataset derived;
        // Derived streams keep the input's skeleton and label space.
        derived.topology = ds.topology;
        derived.class_names = ds.class_names;
        derived.samples.reserve(ds.samples.size());
        for (const SkeletonSequence& seq : ds.samples) {
            derived.samples.push_back(
                derive_stream(seq, ds.topology, kind, s.train.center_coords));
        }
        dataset_write(derived, fs::path(s.out) / name);
        std::cerr << "wrote " << derived.samples.size() << " " << name
                  << " samples to " << (fs::path(s.out) / name).string()
                  << "\n";
    }
    write_effective_config(s, s.out);
    return 0;
}

int do_train(const Settings& s, bool resume) {
    require(!s.data.empty(), "train: --data is required");
    require(!s.out.empty(), "train: --out is required");
    RunOptions options;
    options.model = s.model;
    options.train = s.train;
    options.stream = stream_kind_from_string(s.stream);
    options.data_dir = s.data;
    options.out_dir = s.out;
    options.eval_data_dir = s.eval_data;
    options.resume = resume;
    options.threads = s.threads;
    options.echo_stdout = true;
    write_effective_config(s, s.out);
    const RunResult result = run_training(options);
    std::cerr << "run complete: " << result.epochs_completed
              << " epochs, checkpoint in "
              << (fs::path(s.out) / "model").string() << "\n";
    return 0;
}

int do_eval(const Settings& s, const std::string& ckpt,
            const std::string& topk, const std::string& scores_out) {
    require(!ckpt.empty(), "eval: --ckpt is required");
    require(!s.data.empty(), "eval: --data is required");
    const std::vector<std::size_t> ks = parse_topk(topk);
    Checkpoint cp = checkpoint_load(ckpt);
    const Dataset ds = dataset_read(s.data);
    const StreamKind kind = stream_kind_from_string(s.stream);
    const EvalResult result = evaluate_topk(cp.net, ds, kind, ks, s.threads,
                                            s.train.center_coords);

    json report;
    report["samples"] = ds.samples.size();
    report["stream"] = s.stream;
    report["topk"] = topk_report(ks, result.accuracies);
    std::cout << report.dump() << "\n";

    if (!scores_out.empty()) {
        std::vector<int> labels;
        labels.reserve(ds.samples.size());
        for (const SkeletonSequence& seq : ds.samples) {
            labels.push_back(seq.label);
        }
        std::error_code ec;
        fs::create_directories(scores_out, ec);
        if (ec) {
            throw IoError("cannot create " + scores_out + ": " +
                          ec.message());
        }
        const fs::path path =
            fs::path(scores_out) / ("scores_" + s.stream + ".json");
        score_file_write(path, result.scores, labels);
        write_effective_config(s, scores_out);
        std::cerr << "wrote scores to " << path.string() << "\n";
    }
    return 0;
}

int do_fuse(const Settings& s, const std::vector<std::string>& score_paths,
            const std::string& weights_text, const std::string& topk,
            const std::string& out_file) {
    require(!score_paths.empty(), "fuse: --scores is required");
    const std::vector<std::size_t> ks = parse_topk(topk);
    std::vector<double> weights;
    if (!weights_text.empty()) weights = parse_weights(weights_text);

    std::vector<ScoreSet> sets;
    std::vector<std::string> streams;
    std::map<std::string, int> label_of;
    for (const std::string& path : score_paths) {
        ScoreFile file = score_file_read(path);
        streams.push_back(file.set.stream);
        for (std::size_t i = 0; i < file.set.ids.size(); ++i) {
            const std::string& id = file.set.ids[i];
            const auto [it, inserted] = label_of.emplace(id, file.labels[i]);
            if (!inserted && it->second != file.labels[i]) {
                throw ArgumentError("fuse: label mismatch for " + id +
                                    " between score files");
            }
        }
        sets.push_back(std::move(file.set));
    }
    const ScoreSet fused = ensemble_fuse(sets, weights);

    std::vector<int> labels;
    labels.reserve(fused.ids.size());
    for (const std::string& id : fused.ids) labels.push_back(label_of.at(id));
    const std::vector<double> accuracies =
        topk_from_scores(fused.scores, labels, ks);

    json report;
    report["samples"] = fused.ids.size();
    report["streams"] = streams;
    report["topk"] = topk_report(ks, accuracies);
    std::cout << report.dump() << "\n";

    if (!out_file.empty()) {
        const fs::path path(out_file);
        if (path.has_parent_path()) {
            std::error_code ec;
            fs::create_directories(path.parent_path(), ec);
            if (ec) {
                throw IoError("cannot create " + path.parent_path().string() +
                              ": " + ec.message());
            }
        }
        score_file_write(path, fused, labels);
        write_effective_config(
            s, path.has_parent_path() ? path.parent_path() : fs::path("."));
        std::cerr << "wrote fused scores to " << out_file << "\n";
    }
    return 0;
}

int do_gradcheck(const Settings& s, double tol) {
    // The stock backbone is far too deep to finite-difference in reasonable
    // time, so without an explicit model section the check runs on a compact
    // two-block stand-in exercising every layer type.
    ModelConfig cfg;
    if (s.model_given) {
        cfg = s.model;
    } else {
        cfg.topology = "chain5";
        cfg.blocks = {{8, 1}, {8, 2}};
        cfg.stc = {3, 2, 3};
        cfg.temporal_kernel = 3;
        cfg.window = 12;
        cfg.bodies = 1;
        cfg.num_classes = 3;
    }
    const GradCheckReport report =
        grad_check_model(cfg, tol, s.train.seed);

    std::size_t width = 0;
    for (const GradCheckEntry& entry : report.entries) {
        width = std::max(width, entry.name.size());
    }
    for (const GradCheckEntry& entry : report.entries) {
        std::cout << std::left << std::setw(static_cast<int>(width) + 2)
                  << entry.name << std::scientific << std::setprecision(3)
                  << entry.max_rel_err;
        if (entry.skipped > 0) {
            std::cout << "  (" << entry.skipped << " non-smooth probes)";
        }
        std::cout << "\n";
    }
    std::cout << "worst " << std::scientific << std::setprecision(3)
              << report.worst << " tol " << report.tol << " skipped "
              << report.skipped << " " << (report.passed ? "PASS" : "FAIL")
              << "\n";
    return report.passed ? 0 : 1;
}

int do_export(const Settings& s, const std::string& ckpt,
              const std::string& what, const std::string& sample) {
    require(!ckpt.empty(), "export: --ckpt is required");
    require(!s.out.empty(), "export: --out is required");
    Checkpoint cp = checkpoint_load(ckpt);
    if (what == "graphs") {
        export_graphs(cp.net, s.out);
    } else if (what == "attention") {
        require(!s.data.empty(),
                "export: --data is required for attention maps");
        require(!sample.empty(),
                "export: --sample is required for attention maps");
        const Dataset ds = dataset_read(s.data);
        export_attention(cp.net, ds, sample, stream_kind_from_string(s.stream),
                         s.out, s.train.center_coords);
    } else {
        throw ConfigError("export: --what must be 'graphs' or 'attention'");
    }
    write_effective_config(s, s.out);
    std::cerr << "wrote " << what << " CSV files to " << s.out << "\n";
    return 0;
}

int do_params(const Settings& s) {
    Network net = make_network(s.model, s.train.seed);
    const ParamCount count = count_parameters(net);
    std::size_t width = 0;
    for (const ParamCountRow& row : count.rows) {
        width = std::max(width, row.module.size());
    }
    for (const ParamCountRow& row : count.rows) {
        std::cout << std::left << std::setw(static_cast<int>(width) + 2)
                  << row.module << row.count << "\n";
    }
    std::cout << std::left << std::setw(static_cast<int>(width) + 2) << "total"
              << count.total << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Skeleton action recognition: synthetic data, stream "
                 "preprocessing, training, evaluation, score fusion, "
                 "gradient checking, and CSV export"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    app.add_option("--config", config_path,
                   "JSON config file (flags override its values)");
    app.add_option("--seed", seed, "Override every random seed");
    app.add_option("--threads", threads, "Evaluation worker cap (default 1)");

    std::string data, out, stream, eval_data, ckpt, sample;
    std::string topk = "1,5";
    std::string weights_text, scores_out, out_file, streams_text;
    std::string what = "graphs";
    std::vector<std::string> score_paths;
    double tol = 1e-5;
    bool resume = false;

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth->add_option("--out", out, "Output dataset directory");
    std::size_t classes = 0, per_class = 0, joints = 0, frames = 0;
    double noise = 0.0;
    synth->add_option("--classes", classes, "Number of classes");
    synth->add_option("--per-class", per_class, "Samples per class");
    synth->add_option("--joints", joints, "Joints per skeleton");
    synth->add_option("--frames", frames, "Frames per sample");
    synth->add_option("--noise", noise, "Coordinate noise std");

    CLI::App* preprocess =
        app.add_subcommand("preprocess", "Materialize derived streams");
    preprocess->add_option("--data", data, "Input dataset directory");
    preprocess->add_option("--out", out, "Output root directory");
    preprocess->add_option("--streams", streams_text,
                           "Comma-separated streams, e.g. joint,bone");

    CLI::App* train = app.add_subcommand("train", "Train one stream");
    train->add_option("--data", data, "Training dataset directory");
    train->add_option("--stream", stream, "Stream to train on");
    train->add_option("--out", out, "Run directory (checkpoint + metrics)");
    train->add_option("--eval-data", eval_data,
                      "Optional dataset evaluated every epoch");
    train->add_flag("--resume", resume, "Continue from the run's checkpoint");

    CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval->add_option("--ckpt", ckpt, "Checkpoint directory");
    eval->add_option("--data", data, "Evaluation dataset directory");
    eval->add_option("--stream", stream, "Stream the model was trained on");
    eval->add_option("--topk", topk, "Comma-separated k values");
    eval->add_option("--scores-out", scores_out,
                     "Directory for scores_<stream>.json");

    CLI::App* fuse = app.add_subcommand("fuse", "Fuse per-stream score files");
    fuse->add_option("--scores", score_paths, "Score files to fuse")
        ->expected(-1);
    fuse->add_option("--weights", weights_text,
                     "Comma-separated per-file weights (default all 1)");
    fuse->add_option("--topk", topk, "Comma-separated k values");
    fuse->add_option("--out", out_file, "Optional fused score file");

    CLI::App* gradcheck =
        app.add_subcommand("gradcheck", "Backward-vs-finite-difference check");
    gradcheck->add_option("--tol", tol, "Max relative error to pass");

    CLI::App* exportc = app.add_subcommand("export", "Write CSV diagnostics");
    exportc->add_option("--ckpt", ckpt, "Checkpoint directory");
    exportc->add_option("--what", what, "graphs or attention");
    exportc->add_option("--sample", sample, "Sample id for attention maps");
    exportc->add_option("--data", data, "Dataset holding the sample");
    exportc->add_option("--stream", stream, "Stream to derive");
    exportc->add_option("--out", out, "Output directory");

    CLI::App* params =
        app.add_subcommand("params", "Print the parameter-count table");
    (void)params;

    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        Settings s;
        if (!config_path.empty()) s = settings_from_file(config_path);
        if (app.count("--seed") > 0) {
            s.train.seed = seed;
            s.synth_seed = seed;
        }
        if (app.count("--threads") > 0) s.threads = threads;

        CLI::App* active = app.get_subcommands().front();
        auto given = [&](const char* name) {
            const CLI::Option* opt = active->get_option_no_throw(name);
            return opt != nullptr && opt->count() > 0;
        };
        if (given("--data")) s.data = data;
        if (active == train && given("--eval-data")) s.eval_data = eval_data;
        if ((active == synth || active == preprocess || active == train ||
             active == exportc) &&
            given("--out")) {
            s.out = out;
        }
        if (given("--stream")) s.stream = stream;

        if (active == synth) {
            if (given("--classes")) s.synth.num_classes = classes;
            if (given("--per-class")) s.synth.per_class = per_class;
            if (given("--joints")) s.synth.joints = joints;
            if (given("--frames")) s.synth.frames = frames;
            if (given("--noise")) s.synth.noise_std = noise;
            return do_synth(s);
        }
        if (active == preprocess) {
            if (given("--streams")) s.streams = split_list(streams_text);
            return do_preprocess(s);
        }
        if (active == train) return do_train(s, resume);
        if (active == eval) return do_eval(s, ckpt, topk, scores_out);
        if (active == fuse) {
            return do_fuse(s, score_paths, weights_text, topk, out_file);
        }
        if (active == gradcheck) return do_gradcheck(s, tol);
        if (active == exportc) return do_export(s, ckpt, what, sample);
        return do_params(s);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
