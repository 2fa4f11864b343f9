// SPDX-License-Identifier: Apache-2.0
#include "megan/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

namespace megan {

namespace {

constexpr char kMagic[8] = {'M', 'E', 'G', 'A', 'N', 'C', 'K', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double d) { put_u64(os, std::bit_cast<std::uint64_t>(d)); }

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    put_u64(os, entries.size());
    for (const CheckpointEntry& e : entries) {
        put_u32(os, static_cast<std::uint32_t>(e.name.size()));
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        put_u32(os, static_cast<std::uint32_t>(e.shape.size()));
        for (std::size_t d : e.shape) put_u64(os, d);
        for (double v : e.values) put_f64(os, v);
    }
    os.flush();
    if (!os) throw IoError("write failure on checkpoint: " + path);
}

std::vector<CheckpointEntry> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || !std::equal(magic, magic + 8, kMagic))
        throw IoError("not a checkpoint file (bad magic): " + path);
    const std::uint64_t count = get_u64(is);
    std::vector<CheckpointEntry> entries;
    entries.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        CheckpointEntry e;
        const std::uint32_t name_len = get_u32(is);
        e.name.resize(name_len);
        is.read(e.name.data(), name_len);
        const std::uint32_t rank = get_u32(is);
        e.shape.resize(rank);
        for (std::uint32_t i = 0; i < rank; ++i) e.shape[i] = get_u64(is);
        e.values.resize(shape_size(e.shape));
        for (double& v : e.values) v = get_f64(is);
        if (!is) throw IoError("truncated checkpoint: " + path);
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace megan
