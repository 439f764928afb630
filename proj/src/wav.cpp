#include "fxlearn/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "fxlearn/errors.hpp"

namespace fxl {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

struct Reader {
    std::ifstream in;
    std::string path;

    explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) raise_io("cannot open wav file: " + p);
    }
    void bytes(void* dst, std::size_t n) {
        if (!in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n))) {
            raise_io("truncated wav file: " + path);
        }
    }
    std::uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }
    std::uint16_t u16() {
        unsigned char b[2];
        bytes(b, 2);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    void skip(std::uint32_t n) {
        in.seekg(n, std::ios::cur);
        if (!in) raise_io("truncated wav file: " + path);
    }
};

struct Writer {
    std::ofstream out;
    std::string path;

    explicit Writer(const std::string& p) : out(p, std::ios::binary | std::ios::trunc), path(p) {
        if (!out) raise_io("cannot open wav file for writing: " + p);
    }
    void bytes(const void* src, std::size_t n) { out.write(static_cast<const char*>(src), static_cast<std::streamsize>(n)); }
    void u32(std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
        bytes(b, 4);
    }
    void u16(std::uint16_t v) {
        unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
        bytes(b, 2);
    }
};

}  // namespace

WavData read_wav(const std::string& path) {
    Reader r(path);
    char tag[4];
    r.bytes(tag, 4);
    if (std::memcmp(tag, "RIFF", 4) != 0) raise_io("not a RIFF file: " + path);
    r.u32();  // riff size; data chunk size is validated against the stream instead
    r.bytes(tag, 4);
    if (std::memcmp(tag, "WAVE", 4) != 0) raise_io("not a WAVE file: " + path);

    bool have_fmt = false;
    bool have_data = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    WavData out;

    for (;;) {
        if (!r.in.read(tag, 4)) {
            if (have_fmt && have_data) break;
            raise_io("wav file missing " + std::string(have_fmt ? "data" : "fmt") + " chunk: " + path);
        }
        std::uint32_t chunk_size = r.u32();
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (chunk_size < 16) raise_io("malformed fmt chunk in " + path);
            format = r.u16();
            channels = r.u16();
            sample_rate = r.u32();
            r.u32();  // byte rate
            r.u16();  // block align
            bits = r.u16();
            if (chunk_size > 16) r.skip(chunk_size - 16);
            if (channels != 1) raise_io("wav file is not mono (" + std::to_string(channels) + " channels): " + path);
            if (!((format == kFormatPcm && bits == 16) || (format == kFormatFloat && bits == 32))) {
                raise_io("unsupported wav codec (format " + std::to_string(format) + ", " +
                         std::to_string(bits) + " bits) in " + path);
            }
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (!have_fmt) raise_io("wav data chunk precedes fmt chunk: " + path);
            const std::size_t bytes_per = bits / 8;
            if (chunk_size % bytes_per != 0) raise_io("data chunk size not sample-aligned in " + path);
            const std::size_t n = chunk_size / bytes_per;
            out.samples.resize(n);
            if (format == kFormatPcm) {
                std::vector<unsigned char> raw(chunk_size);
                r.bytes(raw.data(), chunk_size);
                for (std::size_t i = 0; i < n; ++i) {
                    const std::int16_t v = static_cast<std::int16_t>(raw[2 * i] | (raw[2 * i + 1] << 8));
                    out.samples[i] = static_cast<float>(v) / 32767.0f;
                }
            } else {
                std::vector<unsigned char> raw(chunk_size);
                r.bytes(raw.data(), chunk_size);
                for (std::size_t i = 0; i < n; ++i) {
                    std::uint32_t bitsv = static_cast<std::uint32_t>(raw[4 * i]) |
                                          (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                                          (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                                          (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
                    std::memcpy(&out.samples[i], &bitsv, 4);
                }
            }
            have_data = true;
            if (chunk_size % 2 == 1 && r.in.peek() != EOF) r.skip(1);
        } else {
            r.skip(chunk_size + (chunk_size % 2));
        }
    }
    out.sample_rate = static_cast<int>(sample_rate);
    return out;
}

void write_wav(const std::string& path, const std::vector<float>& samples, int sample_rate, WavFormat format) {
    if (sample_rate <= 0) raise_config("write_wav: sample rate must be positive");
    Writer w(path);
    const bool is_float = format == WavFormat::float32;
    const std::uint16_t bits = is_float ? 32 : 16;
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * (bits / 8));
    const std::uint32_t fact_bytes = is_float ? 12 : 0;  // float wavs carry a fact chunk
    w.bytes("RIFF", 4);
    w.u32(4 + 24 + fact_bytes + 8 + data_bytes + (data_bytes % 2));
    w.bytes("WAVE", 4);
    w.bytes("fmt ", 4);
    w.u32(16);
    w.u16(is_float ? kFormatFloat : kFormatPcm);
    w.u16(1);
    w.u32(static_cast<std::uint32_t>(sample_rate));
    w.u32(static_cast<std::uint32_t>(sample_rate) * (bits / 8));
    w.u16(bits / 8);
    w.u16(bits);
    if (is_float) {
        w.bytes("fact", 4);
        w.u32(4);
        w.u32(static_cast<std::uint32_t>(samples.size()));
    }
    w.bytes("data", 4);
    w.u32(data_bytes);
    if (is_float) {
        for (float s : samples) {
            std::uint32_t bitsv;
            std::memcpy(&bitsv, &s, 4);
            w.u32(bitsv);
        }
    } else {
        for (float s : samples) {
            double scaled = std::rint(static_cast<double>(s) * 32767.0);
            if (scaled > 32767.0) scaled = 32767.0;
            if (scaled < -32768.0) scaled = -32768.0;
            w.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
        }
    }
    if (data_bytes % 2 == 1) {
        const char pad = 0;
        w.bytes(&pad, 1);
    }
    if (!w.out) raise_io("write failure on wav file: " + path);
}

}  // namespace fxl
