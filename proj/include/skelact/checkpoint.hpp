#pragma once

#include <cstddef>
#include <filesystem>

#include "skelact/network.hpp"
#include "skelact/train.hpp"

namespace skelact {

// Everything needed to resume a run exactly: the rebuilt model (parameters
// and BN running statistics restored), the optimizer's momentum buffers,
// and how many epochs already finished.
struct Checkpoint {
    Network net;
    SgdState sgd;
    std::size_t epochs_completed = 0;
};

// Writes <dir>/model.json plus <dir>/model.bin. The JSON manifest carries
// the format tag, the epoch counter, the full model config, and the name,
// shape, and absolute byte offset of every parameter, BN buffer, and
// momentum slot; the binary file is magic "EMTW", a little-endian uint32
// version, then the 64-bit little-endian values. A run that never stepped
// the optimizer stores zero momentum.
void checkpoint_save(Network& net, const SgdState& sgd,
                     std::size_t epochs_completed,
                     const std::filesystem::path& dir);

// Rebuilds the model from the stored config and fills in every tensor.
// Malformed manifests, bad magic/version, and name/shape/offset mismatches
// throw FormatError; missing files throw IoError. When `expected` is given,
// the stored config must match it field for field — the error names the
// first field that differs (a checkpoint for 60 classes must not silently
// load into a 4-class evaluation).
Checkpoint checkpoint_load(const std::filesystem::path& dir,
                           const ModelConfig* expected = nullptr);

}  // namespace skelact
