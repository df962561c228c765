#include "skelact/ntu.hpp"

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace skelact {

namespace {

constexpr std::size_t kNtuJoints = 25;
constexpr std::size_t kNtuBodies = 2;
constexpr std::size_t kJointFields = 12;
constexpr std::size_t kInfoFields = 10;  // body id + 9 tracking fields
constexpr std::size_t kConfidenceField = 11;  // 12th number on a joint line

// Line-oriented reader that tracks the current line number for error
// messages.
struct LineReader {
    std::istream& in;
    std::size_t line_no = 0;

    std::vector<std::string> next_tokens() {
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::istringstream ss(line);
            std::vector<std::string> tokens;
            std::string tok;
            while (ss >> tok) tokens.push_back(tok);
            if (!tokens.empty()) return tokens;
        }
        throw FormatError("skeleton parse: unexpected end of file after line " +
                          std::to_string(line_no));
    }
};

double parse_number(const std::string& tok, std::size_t line_no) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(tok, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != tok.size()) {
        throw FormatError("skeleton parse: line " + std::to_string(line_no) +
                          ": not a number: '" + tok + "'");
    }
    return value;
}

long parse_count(LineReader& reader, const char* what) {
    const auto tokens = reader.next_tokens();
    if (tokens.size() != 1) {
        throw FormatError("skeleton parse: line " +
                          std::to_string(reader.line_no) + ": expected a " +
                          std::string(what) + ", got " +
                          std::to_string(tokens.size()) + " fields");
    }
    const double value = parse_number(tokens[0], reader.line_no);
    const long count = static_cast<long>(value);
    if (static_cast<double>(count) != value) {
        throw FormatError("skeleton parse: line " +
                          std::to_string(reader.line_no) + ": " + what +
                          " must be an integer, got '" + tokens[0] + "'");
    }
    return count;
}

struct ParsedBody {
    double coords[kNtuJoints][3];
    double mean_confidence = 0.0;
};

}  // namespace

SkeletonSequence parse_ntu_skeleton(std::istream& in, const std::string& id) {
    LineReader reader{in};
    const long frame_count = parse_count(reader, "frame count");
    if (frame_count <= 0) {
        throw FormatError("skeleton parse: line " +
                          std::to_string(reader.line_no) +
                          ": frame count must be positive, got " +
                          std::to_string(frame_count));
    }
    const std::size_t frames = static_cast<std::size_t>(frame_count);
    SkeletonSequence seq =
        SkeletonSequence::zeros(3, frames, kNtuJoints, kNtuBodies);
    seq.id = id;

    for (std::size_t t = 0; t < frames; ++t) {
        const long body_count = parse_count(reader, "body count");
        if (body_count < 0) {
            throw FormatError("skeleton parse: line " +
                              std::to_string(reader.line_no) +
                              ": body count must be non-negative, got " +
                              std::to_string(body_count));
        }
        std::vector<ParsedBody> bodies;
        bodies.reserve(static_cast<std::size_t>(body_count));
        for (long b = 0; b < body_count; ++b) {
            const auto info = reader.next_tokens();
            if (info.size() != kInfoFields) {
                throw FormatError("skeleton parse: line " +
                                  std::to_string(reader.line_no) +
                                  ": body info line needs " +
                                  std::to_string(kInfoFields) +
                                  " fields, got " +
                                  std::to_string(info.size()));
            }
            for (const auto& tok : info) parse_number(tok, reader.line_no);
            const long joint_count = parse_count(reader, "joint count");
            if (joint_count != static_cast<long>(kNtuJoints)) {
                throw FormatError("skeleton parse: line " +
                                  std::to_string(reader.line_no) +
                                  ": joint count must be " +
                                  std::to_string(kNtuJoints) + ", got " +
                                  std::to_string(joint_count));
            }
            ParsedBody body;
            double confidence_sum = 0.0;
            for (std::size_t n = 0; n < kNtuJoints; ++n) {
                const auto fields = reader.next_tokens();
                if (fields.size() != kJointFields) {
                    throw FormatError("skeleton parse: line " +
                                      std::to_string(reader.line_no) +
                                      ": joint line needs " +
                                      std::to_string(kJointFields) +
                                      " fields, got " +
                                      std::to_string(fields.size()));
                }
                std::vector<double> values(kJointFields);
                for (std::size_t i = 0; i < kJointFields; ++i) {
                    values[i] = parse_number(fields[i], reader.line_no);
                }
                body.coords[n][0] = values[0];
                body.coords[n][1] = values[1];
                body.coords[n][2] = values[2];
                confidence_sum += values[kConfidenceField];
            }
            body.mean_confidence = confidence_sum / kNtuJoints;
            bodies.push_back(body);
        }

        // More than two bodies: keep the two with the highest mean
        // tracking-state, stably so ties fall to the earlier body; the kept
        // bodies fill slots 0 and 1 in appearance order.
        std::vector<std::size_t> keep(bodies.size());
        for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
        if (bodies.size() > kNtuBodies) {
            std::stable_sort(keep.begin(), keep.end(),
                             [&](std::size_t a, std::size_t b) {
                                 return bodies[a].mean_confidence >
                                        bodies[b].mean_confidence;
                             });
            keep.resize(kNtuBodies);
            std::sort(keep.begin(), keep.end());
        }
        for (std::size_t slot = 0; slot < keep.size(); ++slot) {
            const ParsedBody& body = bodies[keep[slot]];
            for (std::size_t n = 0; n < kNtuJoints; ++n) {
                for (std::size_t c = 0; c < 3; ++c) {
                    seq.at(c, t, n, slot) = body.coords[n][c];
                }
            }
        }
    }
    quantize_to_f32(seq);
    seq.validate();
    return seq;
}

SkeletonSequence parse_ntu_skeleton(const std::string& text,
                                    const std::string& id) {
    std::istringstream ss(text);
    return parse_ntu_skeleton(ss, id);
}

SkeletonSequence load_ntu_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open skeleton file: " + path);
    }
    const std::string stem = std::filesystem::path(path).stem().string();
    SkeletonSequence seq = parse_ntu_skeleton(in, stem);
    // The usual NTU name ends in "A<action>"; translate it to a 0-based
    // label when present.
    std::size_t pos = stem.size();
    while (pos > 0 && std::isdigit(static_cast<unsigned char>(stem[pos - 1]))) {
        --pos;
    }
    if (pos > 0 && pos < stem.size() &&
        (stem[pos - 1] == 'A' || stem[pos - 1] == 'a')) {
        seq.label = std::stoi(stem.substr(pos)) - 1;
    }
    return seq;
}

}  // namespace skelact
