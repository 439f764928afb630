#include "fxlearn/forge.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fxlearn/errors.hpp"
#include "fxlearn/wav.hpp"

namespace fxl::forge {

namespace {

constexpr double kTwoPi = 6.283185307179586477;

std::vector<float> gen_decaying_sine(const SynthSpec& s) {
    std::vector<float> y(s.length);
    for (std::size_t i = 0; i < s.length; ++i) {
        const double t = static_cast<double>(i) / s.fs;
        const double a = s.amp_start * std::exp(-s.decay_rate * t);
        y[i] = static_cast<float>(a * std::sin(kTwoPi * s.freq_start * t + s.phase));
    }
    return y;
}

std::vector<float> gen_swept_sine(const SynthSpec& s) {
    std::vector<float> y(s.length);
    const double dur = static_cast<double>(s.length) / s.fs;
    const double k = std::log(s.freq_end / s.freq_start);
    for (std::size_t i = 0; i < s.length; ++i) {
        const double t = static_cast<double>(i) / s.fs;
        const double a = s.amp_start + (s.amp_end - s.amp_start) * t / dur;
        double ph;
        if (std::abs(k) < 1e-9) {
            ph = kTwoPi * s.freq_start * t;
        } else {
            ph = kTwoPi * s.freq_start * dur / k * (std::exp(k * t / dur) - 1.0);
        }
        y[i] = static_cast<float>(a * std::sin(ph + s.phase));
    }
    return y;
}

std::vector<float> gen_noise_burst(const SynthSpec& s, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> y(s.length);
    for (std::size_t i = 0; i < s.length; ++i) {
        const double t = static_cast<double>(i) / s.fs;
        const double gate = (t >= s.onset && t < s.cutoff) ? 1.0 : 0.0;
        y[i] = static_cast<float>(gate * s.noise_level * rng.uniform(-1.0, 1.0));
    }
    return y;
}

std::vector<float> gen_amplitude_ramp(const SynthSpec& s) {
    std::vector<float> y(s.length);
    const double dur = static_cast<double>(s.length) / s.fs;
    for (std::size_t i = 0; i < s.length; ++i) {
        const double t = static_cast<double>(i) / s.fs;
        const double a = s.amp_start + (s.amp_end - s.amp_start) * t / dur;
        y[i] = static_cast<float>(a * std::sin(kTwoPi * s.freq_start * t + s.phase));
    }
    return y;
}

// carrier alternating between a low and a high amplitude; the hard edges are
// the point (compressors train on transients)
std::vector<float> gen_step_gate(const SynthSpec& s) {
    std::vector<float> y(s.length);
    const double period = s.onset + s.cutoff;
    for (std::size_t i = 0; i < s.length; ++i) {
        const double t = static_cast<double>(i) / s.fs;
        const double tp = period > 0.0 ? std::fmod(t, period) : 0.0;
        const double a = tp < s.onset ? s.amp_start : s.amp_end;
        y[i] = static_cast<float>(a * std::sin(kTwoPi * s.freq_start * t + s.phase));
    }
    return y;
}

// Voss-McCartney: sum of 16 octave-spaced held white sources, normalized by
// the row count so |y| <= noise_level
std::vector<float> gen_pink_noise(const SynthSpec& s, std::uint64_t seed) {
    constexpr int kRows = 16;
    Rng rng(seed);
    double rows[kRows];
    for (double& r : rows) r = rng.uniform(-1.0, 1.0);
    std::vector<float> y(s.length);
    for (std::size_t i = 0; i < s.length; ++i) {
        if (i > 0) {
            const std::uint64_t change = i & (~i + 1);  // lowest set bit selects the row
            int row = 0;
            std::uint64_t c = change;
            while (c > 1 && row < kRows - 1) {
                c >>= 1;
                ++row;
            }
            rows[row] = rng.uniform(-1.0, 1.0);
        }
        double acc = 0.0;
        for (double r : rows) acc += r;
        y[i] = static_cast<float>(s.noise_level * acc / kRows);
    }
    return y;
}

}  // namespace

const char* synth_kind_name(SynthKind k) {
    switch (k) {
        case SynthKind::decaying_sine: return "decaying-sine";
        case SynthKind::swept_sine: return "swept-sine";
        case SynthKind::noise_burst: return "noise-burst";
        case SynthKind::amplitude_ramp: return "amplitude-ramp";
        case SynthKind::step_gate: return "step-gate";
        case SynthKind::pink_noise: return "pink-noise-segment";
    }
    return "unknown";
}

std::vector<float> gen_signal(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.length == 0) raise_config("gen_signal: length must be positive");
    if (spec.fs <= 0) raise_config("gen_signal: sample rate must be positive");
    switch (spec.kind) {
        case SynthKind::decaying_sine: return gen_decaying_sine(spec);
        case SynthKind::swept_sine: return gen_swept_sine(spec);
        case SynthKind::noise_burst: return gen_noise_burst(spec, seed);
        case SynthKind::amplitude_ramp: return gen_amplitude_ramp(spec);
        case SynthKind::step_gate: return gen_step_gate(spec);
        case SynthKind::pink_noise: return gen_pink_noise(spec, seed);
    }
    raise_config("gen_signal: unknown synth kind");
}

void normalize_peak(std::vector<float>& samples, float target) {
    float peak = 0.0f;
    for (float v : samples) peak = std::max(peak, std::abs(v));
    if (peak > 1e-3f) {
        const float g = target / peak;
        for (float& v : samples) v *= g;
    }
}

SynthSpec random_synth_spec(Rng& rng, std::size_t length, double fs) {
    SynthSpec s;
    s.kind = static_cast<SynthKind>(rng.below(kSynthKindCount));
    s.length = length;
    s.fs = fs;
    const double dur = static_cast<double>(length) / fs;
    const double f_hi = std::min(20000.0, 0.45 * fs);
    auto log_uniform = [&](double lo, double hi) { return std::exp(rng.uniform(std::log(lo), std::log(hi))); };
    s.amp_start = log_uniform(0.01, 1.0);  // 40 dB of peak variation
    s.amp_end = log_uniform(0.01, 1.0);
    s.freq_start = log_uniform(20.0, f_hi);
    s.freq_end = log_uniform(20.0, f_hi);
    s.decay_rate = rng.uniform(5.0, 100.0);  // 10 ms .. 200 ms tails
    s.noise_level = log_uniform(0.01, 1.0);
    s.phase = rng.uniform(0.0, kTwoPi);
    switch (s.kind) {
        case SynthKind::noise_burst:
            s.onset = rng.uniform(0.0, 0.5 * dur);
            s.cutoff = rng.uniform(s.onset + 0.05 * dur, dur);
            break;
        case SynthKind::step_gate:
            s.onset = rng.uniform(0.02, 0.2);   // low-level dwell, s
            s.cutoff = rng.uniform(0.02, 0.2);  // high-level dwell, s
            s.amp_start = rng.uniform(0.0, 0.1);
            s.amp_end = log_uniform(0.1, 1.0);
            break;
        default:
            s.onset = 0.0;
            s.cutoff = dur;
            break;
    }
    return s;
}

std::string sha256_hex(const void* data, std::size_t bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data, bytes) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        raise_io("sha256 computation failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

CorpusResult assemble_corpus(const std::vector<std::string>& source_wavs, std::size_t synth_count,
                             Rng& rng, const std::string& out_dir, double file_seconds,
                             double fs_if_no_sources) {
    if (file_seconds <= 0) raise_config("assemble_corpus: file duration must be positive");
    if (source_wavs.empty() && synth_count == 0) raise_config("assemble_corpus: no material given");

    struct Block {
        std::vector<float> samples;
        bool music;
    };
    std::vector<Block> blocks;
    double fs = 0.0;
    for (const auto& path : source_wavs) {
        WavData w = read_wav(path);
        if (fs == 0.0) {
            fs = w.sample_rate;
        } else if (static_cast<double>(w.sample_rate) != fs) {
            raise_data("assemble_corpus: sample rate mismatch, " + path + " has " +
                       std::to_string(w.sample_rate) + " Hz, expected " + std::to_string(fs));
        }
        blocks.push_back({std::move(w.samples), true});
    }
    if (fs == 0.0) fs = fs_if_no_sources;

    for (std::size_t i = 0; i < synth_count; ++i) {
        // 2..6 seconds per synthesized sound
        const std::size_t len = static_cast<std::size_t>(rng.uniform(2.0, 6.0) * fs);
        const SynthSpec spec = random_synth_spec(rng, len, fs);
        blocks.push_back({gen_signal(spec, rng.next_u64()), false});
    }

    // Fisher-Yates over the block order
    for (std::size_t i = blocks.size(); i > 1; --i) {
        std::swap(blocks[i - 1], blocks[rng.below(i)]);
    }

    std::size_t total = 0;
    for (const auto& b : blocks) total += b.samples.size();
    const std::size_t per_file = static_cast<std::size_t>(std::llround(file_seconds * fs));
    const std::size_t n_files = total / per_file;
    if (n_files == 0) {
        raise_data("assemble_corpus: only " + std::to_string(total) + " samples of material, need " +
                   std::to_string(per_file) + " per file");
    }

    std::filesystem::create_directories(out_dir);
    CorpusResult result;
    std::size_t block_idx = 0, block_off = 0;
    for (std::size_t fi = 0; fi < n_files; ++fi) {
        std::vector<float> samples;
        samples.reserve(per_file);
        std::size_t music_samples = 0;
        while (samples.size() < per_file) {
            const auto& b = blocks[block_idx];
            const std::size_t take = std::min(per_file - samples.size(), b.samples.size() - block_off);
            samples.insert(samples.end(), b.samples.begin() + static_cast<std::ptrdiff_t>(block_off),
                           b.samples.begin() + static_cast<std::ptrdiff_t>(block_off + take));
            if (b.music) music_samples += take;
            block_off += take;
            if (block_off == b.samples.size()) {
                ++block_idx;
                block_off = 0;
            }
        }
        char name[32];
        std::snprintf(name, sizeof(name), "corpus_%03zu.wav", fi);
        const std::string path = (std::filesystem::path(out_dir) / name).string();
        write_wav(path, samples, static_cast<int>(fs), WavFormat::float32);
        CorpusFile cf;
        cf.path = path;
        cf.duration_s = static_cast<double>(samples.size()) / fs;
        cf.fs = fs;
        cf.provenance = music_samples * 2 >= samples.size() ? "music" : "synthetic";
        cf.sha256 = sha256_hex(samples.data(), samples.size() * sizeof(float));
        result.files.push_back(std::move(cf));
    }
    result.remainder_samples = total - n_files * per_file;
    return result;
}

void write_manifest(const std::string& path, const std::vector<CorpusFile>& files) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise_io("cannot write manifest: " + path);
    for (const auto& f : files) {
        out << f.path << '\t' << f.duration_s << '\t' << f.fs << '\t' << f.provenance << '\t'
            << f.sha256 << '\n';
    }
    if (!out) raise_io("write failure on manifest: " + path);
}

std::vector<CorpusFile> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise_io("cannot open manifest: " + path);
    std::vector<CorpusFile> files;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        CorpusFile f;
        if (!(std::getline(ss, f.path, '\t') && (ss >> f.duration_s) && ss.ignore(1) && (ss >> f.fs))) {
            raise_io("malformed manifest line: " + line);
        }
        ss.ignore(1);
        std::getline(ss, f.provenance, '\t');
        std::getline(ss, f.sha256);
        files.push_back(std::move(f));
    }
    return files;
}

}  // namespace fxl::forge
