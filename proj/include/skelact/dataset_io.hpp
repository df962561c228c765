#pragma once

#include <filesystem>

#include "skelact/sequence.hpp"

namespace skelact {

// On-disk dataset layout: `manifest.json` (topology name, class names, and a
// sample table with id, label, file, C, T, N, M) next to one binary file per
// sample. Each binary file is the magic "SKL1", then C, T, N, M as 32-bit
// little-endian unsigned ints, then C*T*N*M 32-bit little-endian floats in
// [C][T][N][M] order. Storage is f32, so data kept on the f32 grid (the
// boundary convention) round-trips bitwise.
void dataset_write(const Dataset& ds, const std::filesystem::path& dir);

// Reads a dataset directory back. A missing directory or unreadable file is
// an I/O error; a bad magic, malformed manifest, dimension overflow, or a
// length/dimension mismatch between manifest and payload is a format error.
Dataset dataset_read(const std::filesystem::path& dir);

// The single-sequence binary codec behind dataset_write/dataset_read,
// exposed for tools and tests. Neither touches label or id (manifest data).
void write_sequence_file(const SkeletonSequence& seq,
                         const std::filesystem::path& file);
SkeletonSequence read_sequence_file(const std::filesystem::path& file);

}  // namespace skelact
