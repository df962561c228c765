#include "skelact/runner.hpp"

#include <fstream>
#include <iostream>
#include <string>
#include <utility>

#include "json.hpp"
#include "skelact/dataset_io.hpp"
#include "skelact/errors.hpp"

namespace skelact {

namespace fs = std::filesystem;

namespace {

std::string metrics_line(const EpochRecord& rec) {
    nlohmann::json j;
    j["epoch"] = rec.epoch;
    j["lr"] = rec.lr;
    j["mean_loss"] = rec.mean_loss;
    j["train_top1"] = rec.train_top1;
    if (rec.has_eval) {
        j["eval_top1"] = rec.eval_top1;
        j["eval_top5"] = rec.eval_top5;
    }
    return j.dump();
}

}  // namespace

RunResult run_training(const RunOptions& options) {
    validate_train_config(options.train);
    const Dataset data = dataset_read(options.data_dir);
    Dataset eval_data;
    const bool with_eval = !options.eval_data_dir.empty();
    if (with_eval) eval_data = dataset_read(options.eval_data_dir);

    const fs::path ckpt_dir = options.out_dir / "model";
    Network net;
    SgdState sgd;
    std::size_t start = 0;
    if (options.resume) {
        Checkpoint ckpt = checkpoint_load(ckpt_dir, &options.model);
        net = std::move(ckpt.net);
        sgd = std::move(ckpt.sgd);
        start = ckpt.epochs_completed;
    } else {
        net = make_network(options.model, options.train.seed);
    }

    RunResult result;
    result.epochs_completed = start;
    if (start >= options.train.total_epochs) return result;

    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    if (ec) {
        throw IoError("cannot create " + options.out_dir.string() + ": " +
                      ec.message());
    }
    const fs::path metrics_path = options.out_dir / "metrics.jsonl";
    std::ofstream metrics(metrics_path,
                          options.resume ? std::ios::app : std::ios::trunc);
    if (!metrics) throw IoError("cannot create " + metrics_path.string());

    for (std::size_t epoch = start; epoch < options.train.total_epochs;
         ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr_at_epoch(options.train, epoch);
        const EpochStats stats = train_epoch(net, sgd, data, options.stream,
                                             options.train, epoch);
        rec.mean_loss = stats.mean_loss;
        rec.train_top1 = stats.train_top1;
        if (with_eval) {
            const EvalResult ev =
                evaluate_topk(net, eval_data, options.stream, {1, 5},
                              options.threads, options.train.center_coords);
            rec.has_eval = true;
            rec.eval_top1 = ev.accuracies[0];
            rec.eval_top5 = ev.accuracies[1];
        }

        const std::string line = metrics_line(rec);
        metrics << line << "\n";
        if (!metrics) throw IoError("write failed: " + metrics_path.string());
        if (options.echo_stdout) std::cout << line << std::endl;

        checkpoint_save(net, sgd, epoch + 1, ckpt_dir);
        result.records.push_back(rec);
        result.epochs_completed = epoch + 1;
        if (options.stop_at_train_top1 > 0.0 &&
            stats.train_top1 >= options.stop_at_train_top1) {
            break;
        }
    }
    return result;
}

}  // namespace skelact
