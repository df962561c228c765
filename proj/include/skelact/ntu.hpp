#pragma once

#include <istream>
#include <string>

#include "skelact/sequence.hpp"

namespace skelact {

// Parses the NTU `.skeleton` text layout:
//   line 1: frame count
//   per frame: a body-count line; per body: one info line (body id plus nine
//   tracking fields), one line holding the joint count (must be 25), then 25
//   lines of 12 numbers whose first three are x, y, z.
// The result always has C=3, N=25, M=2; missing bodies are zero-filled.
// Frames that report more than two bodies keep the two with the highest mean
// of the per-joint tracking-state field (ties go to the earlier body), in
// their order of appearance. Values are snapped to the f32 storage grid.
// Malformed input throws FormatError naming the offending line.
SkeletonSequence parse_ntu_skeleton(std::istream& in,
                                    const std::string& id = "");
SkeletonSequence parse_ntu_skeleton(const std::string& text,
                                    const std::string& id = "");

// Reads one `.skeleton` file. The id is the filename stem; when the stem ends
// in the usual "A<number>" action tag the label is set to number - 1.
SkeletonSequence load_ntu_file(const std::string& path);

}  // namespace skelact
