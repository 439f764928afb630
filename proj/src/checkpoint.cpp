#include "fxlearn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "fxlearn/errors.hpp"

namespace fxl {

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff), static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

bool get_u32(std::ifstream& in, std::uint32_t& v) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
    v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
        (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    return true;
}

void put_f32(std::ofstream& out, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

bool get_f32(std::ifstream& in, float& f) {
    std::uint32_t v;
    if (!get_u32(in, v)) return false;
    std::memcpy(&f, &v, 4);
    return true;
}

}  // namespace

void write_checkpoint(const std::string& path, const std::vector<CheckpointRecord>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise_io("cannot open checkpoint for writing: " + path);
    out.write("STCK", 4);
    put_u32(out, kCheckpointVersion);
    for (const auto& r : records) {
        put_u32(out, static_cast<std::uint32_t>(r.name.size()));
        out.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
        put_u32(out, static_cast<std::uint32_t>(r.dims.size()));
        std::size_t count = 1;
        for (std::uint32_t d : r.dims) {
            put_u32(out, d);
            count *= d;
        }
        if (count != r.values.size()) raise_io("checkpoint record '" + r.name + "' dims do not match value count");
        for (float f : r.values) put_f32(out, f);
    }
    if (!out) raise_io("write failure on checkpoint: " + path);
}

std::vector<CheckpointRecord> read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise_io("cannot open checkpoint: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "STCK", 4) != 0) {
        raise_io("not a checkpoint file (bad magic): " + path);
    }
    std::uint32_t version = 0;
    if (!get_u32(in, version) || version != kCheckpointVersion) {
        raise_io("unsupported checkpoint version in " + path);
    }
    std::vector<CheckpointRecord> records;
    for (;;) {
        std::uint32_t name_len = 0;
        if (!get_u32(in, name_len)) break;  // clean EOF
        CheckpointRecord r;
        r.name.resize(name_len);
        if (!in.read(r.name.data(), name_len)) raise_io("truncated checkpoint record name in " + path);
        std::uint32_t rank = 0;
        if (!get_u32(in, rank)) raise_io("truncated checkpoint record '" + r.name + "' in " + path);
        std::size_t count = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            std::uint32_t d = 0;
            if (!get_u32(in, d)) raise_io("truncated dims in checkpoint record '" + r.name + "'");
            r.dims.push_back(d);
            count *= d;
        }
        r.values.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            if (!get_f32(in, r.values[i])) raise_io("truncated data in checkpoint record '" + r.name + "'");
        }
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace fxl
