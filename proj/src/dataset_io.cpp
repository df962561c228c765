#include "skelact/dataset_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace skelact {

namespace {

constexpr char kMagic[4] = {'S', 'K', 'L', '1'};
// Guards corrupt headers from asking for absurd allocations.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 28;

void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char bytes[4] = {
        static_cast<unsigned char>(v & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff),
    };
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

bool get_u32(std::istream& in, std::uint32_t& v) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) return false;
    v = static_cast<std::uint32_t>(bytes[0]) |
        (static_cast<std::uint32_t>(bytes[1]) << 8) |
        (static_cast<std::uint32_t>(bytes[2]) << 16) |
        (static_cast<std::uint32_t>(bytes[3]) << 24);
    return true;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
        throw FormatError("dataset: " + std::string(what) +
                          " does not fit 32 bits: " + std::to_string(v));
    }
    return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_sequence_file(const SkeletonSequence& seq,
                         const std::filesystem::path& file) {
    seq.validate();
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot create " + file.string());
    out.write(kMagic, 4);
    put_u32(out, checked_u32(seq.channels, "C"));
    put_u32(out, checked_u32(seq.frames, "T"));
    put_u32(out, checked_u32(seq.joints, "N"));
    put_u32(out, checked_u32(seq.bodies, "M"));
    for (double value : seq.data) {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(value)));
    }
    if (!out) throw IoError("write failed: " + file.string());
}

SkeletonSequence read_sequence_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    char magic[4] = {};
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("bad magic in " + file.string());
    }
    std::uint32_t dims[4];
    for (auto& d : dims) {
        if (!get_u32(in, d)) {
            throw FormatError("truncated header in " + file.string());
        }
    }
    std::uint64_t count = 1;
    for (std::uint32_t d : dims) {
        if (d == 0) {
            throw FormatError("zero dimension in " + file.string());
        }
        count *= d;  // four u32 factors cannot overflow a u64
    }
    if (count > kMaxElements) {
        throw FormatError("dimension overflow in " + file.string() + ": " +
                          std::to_string(count) + " elements");
    }
    SkeletonSequence seq =
        SkeletonSequence::zeros(dims[0], dims[1], dims[2], dims[3]);
    for (std::size_t i = 0; i < seq.data.size(); ++i) {
        std::uint32_t bits;
        if (!get_u32(in, bits)) {
            throw FormatError("truncated payload in " + file.string());
        }
        seq.data[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    char extra;
    if (in.read(&extra, 1)) {
        throw FormatError("trailing bytes in " + file.string());
    }
    seq.validate();
    return seq;
}

void dataset_write(const Dataset& ds, const std::filesystem::path& dir) {
    ds.validate();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    nlohmann::json manifest;
    manifest["format"] = "skelact-dataset-v1";
    manifest["topology"] = ds.topology.name;
    manifest["class_names"] = ds.class_names;
    auto& table = manifest["samples"] = nlohmann::json::array();
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const SkeletonSequence& seq = ds.samples[i];
        char name[32];
        std::snprintf(name, sizeof(name), "sample-%06zu.skl", i);
        write_sequence_file(seq, dir / name);
        table.push_back({{"id", seq.id},
                         {"label", seq.label},
                         {"file", name},
                         {"C", seq.channels},
                         {"T", seq.frames},
                         {"N", seq.joints},
                         {"M", seq.bodies}});
    }
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot create " + (dir / "manifest.json").string());
    out << manifest.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + (dir / "manifest.json").string());
}

Dataset dataset_read(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open " + manifest_path.string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed manifest " + manifest_path.string() +
                          ": " + e.what());
    }

    Dataset ds;
    try {
        if (manifest.at("format").get<std::string>() != "skelact-dataset-v1") {
            throw FormatError("unknown dataset format in " +
                              manifest_path.string());
        }
        ds.topology =
            build_topology(manifest.at("topology").get<std::string>());
        ds.class_names =
            manifest.at("class_names").get<std::vector<std::string>>();
        for (const auto& row : manifest.at("samples")) {
            SkeletonSequence seq =
                read_sequence_file(dir / row.at("file").get<std::string>());
            seq.id = row.at("id").get<std::string>();
            seq.label = row.at("label").get<int>();
            if (seq.channels != row.at("C").get<std::size_t>() ||
                seq.frames != row.at("T").get<std::size_t>() ||
                seq.joints != row.at("N").get<std::size_t>() ||
                seq.bodies != row.at("M").get<std::size_t>()) {
                throw FormatError("manifest/payload dimension mismatch for " +
                                  seq.id);
            }
            ds.samples.push_back(std::move(seq));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed manifest " + manifest_path.string() +
                          ": " + e.what());
    }
    ds.validate();
    return ds;
}

}  // namespace skelact
