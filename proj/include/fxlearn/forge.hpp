#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fxlearn/rng.hpp"

namespace fxl::forge {

// Randomized probe-signal catalog: transient-heavy and broadband material
// for capturing dynamics processors. Every generator is a pure function of
// (spec, seed) and emits samples in [-1, 1].
enum class SynthKind {
    decaying_sine,
    swept_sine,
    noise_burst,
    amplitude_ramp,
    step_gate,
    pink_noise,
};

constexpr int kSynthKindCount = 6;

const char* synth_kind_name(SynthKind k);

struct SynthSpec {
    SynthKind kind = SynthKind::decaying_sine;
    std::size_t length = 0;
    double fs = 44100.0;
    double amp_start = 0.5;   // [0,1]
    double amp_end = 0.5;     // [0,1]
    double freq_start = 440;  // Hz
    double freq_end = 440;    // Hz
    double decay_rate = 0.0;  // 1/s exponential amplitude decay
    double onset = 0.0;       // s, kind-dependent gate timing
    double cutoff = 0.0;      // s
    double noise_level = 0.5; // [0,1]
    double phase = 0.0;       // rad
};

std::vector<float> gen_signal(const SynthSpec& spec, std::uint64_t seed);

// scale so the peak magnitude sits at `target`; near-silent clips are left alone
void normalize_peak(std::vector<float>& samples, float target = 0.9f);

// Kind uniform over the catalog; parameters from the documented ranges
// (amplitudes and noise levels log-uniform over 40 dB, frequencies
// log-uniform 20 Hz .. min(20 kHz, 0.45*fs)).
SynthSpec random_synth_spec(Rng& rng, std::size_t length, double fs);

struct CorpusFile {
    std::string path;
    double duration_s = 0.0;
    double fs = 0.0;
    std::string provenance;  // "music" or "synthetic"
    std::string sha256;
};

struct CorpusResult {
    std::vector<CorpusFile> files;
    std::size_t remainder_samples = 0;  // tail too short for a full file, discarded
};

// Concatenate the source recordings with synth_count freshly generated
// signals (order shuffled by rng) and split the result into equal-duration
// files under out_dir. Source sample rates must agree; nothing is resampled.
CorpusResult assemble_corpus(const std::vector<std::string>& source_wavs, std::size_t synth_count,
                             Rng& rng, const std::string& out_dir, double file_seconds = 900.0,
                             double fs_if_no_sources = 44100.0);

void write_manifest(const std::string& path, const std::vector<CorpusFile>& files);
std::vector<CorpusFile> read_manifest(const std::string& path);

std::string sha256_hex(const void* data, std::size_t bytes);

}  // namespace fxl::forge
