#pragma once

#include <filesystem>
#include <string>

#include "skelact/network.hpp"
#include "skelact/sequence.hpp"
#include "skelact/streams.hpp"

namespace skelact {

// Inspection dumps as CSV (RFC 4180: CRLF line endings, '.' decimal
// separator) with 17 significant digits, so every value round-trips to the
// exact double and re-exports are byte-identical.

// Writes adjacency_k{k}_layer{l}.csv — the N x N graph each layer actually
// multiplies by (fixed partition plus learned offset) — and gate.csv, the
// per-layer mixing gate for the sample-dependent graph. A fresh model
// exports exactly the fixed partitions and all-zero gates.
void export_graphs(Network& net, const std::filesystem::path& out_dir);

// Replays one evaluation forward pass of the identified sample and writes
// each layer's attention read-outs: sam_layer{l}_sample{id}.csv (one gate
// per joint), tam_kernels_layer{l}_sample{id}.csv (C rows of K softmax
// weights), cam_layer{l}_sample{id}.csv (one gate per channel). Multi-body
// inputs export the first body's maps.
void export_attention(Network& net, const Dataset& data,
                      const std::string& sample_id, StreamKind stream,
                      const std::filesystem::path& out_dir,
                      bool center_coords = false);

}  // namespace skelact
