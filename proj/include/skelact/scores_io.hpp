#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "skelact/train.hpp"

namespace skelact {

// A score set loaded back from disk, with the labels needed to measure
// accuracy and the class count every row was checked against. Ids come back
// in lexicographic order regardless of the order they were written in;
// fusion matches rows by id and accuracy is order-independent, so nothing
// downstream cares.
struct ScoreFile {
    ScoreSet set;
    std::vector<int> labels;  // parallel to set.ids
    std::size_t num_classes = 0;
};

// Writes one JSON file holding per-sample class scores and labels, keyed by
// sample id. The layout is a format tag, the stream name, the class count,
// an id -> label object, and an id -> score-row object. Keys are emitted in
// sorted order, so the same scores always produce the same bytes. Mismatched
// lengths, duplicate ids, ragged or empty rows, and out-of-range labels
// throw ArgumentError.
void score_file_write(const std::filesystem::path& path, const ScoreSet& set,
                      const std::vector<int>& labels);

// Reads a file produced by score_file_write. Unreadable files throw IoError;
// malformed JSON, a wrong format tag, rows that disagree with the stored
// class count, labels without scores (or the reverse), and out-of-range
// labels throw FormatError.
ScoreFile score_file_read(const std::filesystem::path& path);

}  // namespace skelact
