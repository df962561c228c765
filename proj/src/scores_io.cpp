#include "skelact/scores_io.hpp"

#include <fstream>
#include <string>

#include "json.hpp"
#include "skelact/errors.hpp"

namespace skelact {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "skelact-scores-v1";

}  // namespace

void score_file_write(const std::filesystem::path& path, const ScoreSet& set,
                      const std::vector<int>& labels) {
    if (set.ids.size() != set.scores.size()) {
        throw ArgumentError("score file: " + std::to_string(set.ids.size()) +
                            " ids for " + std::to_string(set.scores.size()) +
                            " score rows");
    }
    if (labels.size() != set.ids.size()) {
        throw ArgumentError("score file: " + std::to_string(labels.size()) +
                            " labels for " + std::to_string(set.ids.size()) +
                            " ids");
    }
    if (set.ids.empty()) {
        throw ArgumentError("score file: nothing to write");
    }
    const std::size_t num_classes = set.scores[0].size();
    if (num_classes == 0) {
        throw ArgumentError("score file: empty score rows");
    }

    json scores = json::object();
    json label_map = json::object();
    for (std::size_t i = 0; i < set.ids.size(); ++i) {
        const std::string& id = set.ids[i];
        if (scores.contains(id)) {
            throw ArgumentError("score file: duplicate id " + id);
        }
        if (set.scores[i].size() != num_classes) {
            throw ArgumentError("score file: row for " + id + " has " +
                                std::to_string(set.scores[i].size()) +
                                " entries, expected " +
                                std::to_string(num_classes));
        }
        if (labels[i] < 0 ||
            static_cast<std::size_t>(labels[i]) >= num_classes) {
            throw ArgumentError("score file: label " +
                                std::to_string(labels[i]) +
                                " out of range for " + id);
        }
        scores[id] = set.scores[i];
        label_map[id] = labels[i];
    }

    json doc;
    doc["format"] = kFormat;
    doc["stream"] = set.stream;
    doc["num_classes"] = num_classes;
    doc["labels"] = std::move(label_map);
    doc["scores"] = std::move(scores);

    std::ofstream out(path);
    if (!out) throw IoError("cannot create " + path.string());
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

ScoreFile score_file_read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw FormatError("malformed score file " + path.string() + ": " +
                          e.what());
    }

    ScoreFile result;
    try {
        if (doc.at("format").get<std::string>() != kFormat) {
            throw FormatError("unknown score file format in " + path.string());
        }
        result.set.stream = doc.at("stream").get<std::string>();
        result.num_classes = doc.at("num_classes").get<std::size_t>();
        if (result.num_classes == 0) {
            throw FormatError("zero classes in " + path.string());
        }

        const json& scores = doc.at("scores");
        const json& labels = doc.at("labels");
        if (!scores.is_object() || !labels.is_object()) {
            throw FormatError("scores and labels must be objects in " +
                              path.string());
        }
        if (scores.size() != labels.size()) {
            throw FormatError("score file " + path.string() + " holds " +
                              std::to_string(scores.size()) +
                              " score rows but " +
                              std::to_string(labels.size()) + " labels");
        }
        // nlohmann objects iterate in sorted key order, so ids land sorted.
        for (const auto& [id, row] : scores.items()) {
            if (!labels.contains(id)) {
                throw FormatError("score file " + path.string() +
                                  " has scores but no label for " + id);
            }
            auto values = row.get<std::vector<double>>();
            if (values.size() != result.num_classes) {
                throw FormatError("row for " + id + " in " + path.string() +
                                  " has " + std::to_string(values.size()) +
                                  " entries, expected " +
                                  std::to_string(result.num_classes));
            }
            const int label = labels.at(id).get<int>();
            if (label < 0 ||
                static_cast<std::size_t>(label) >= result.num_classes) {
                throw FormatError("label " + std::to_string(label) +
                                  " out of range for " + id + " in " +
                                  path.string());
            }
            result.set.ids.push_back(id);
            result.set.scores.push_back(std::move(values));
            result.labels.push_back(label);
        }
    } catch (const json::exception& e) {
        throw FormatError("malformed score file " + path.string() + ": " +
                          e.what());
    }
    return result;
}

}  // namespace skelact
