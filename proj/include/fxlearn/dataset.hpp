#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fxlearn/effects.hpp"
#include "fxlearn/rng.hpp"

namespace fxl::data {

using effects::ControlVector;
using effects::EffectSpec;

// ST applies the effect across the whole stream and slices the window's tail;
// WT re-runs the effect on the window alone with fresh state.
enum class TargetMode { streamed, windowed };

enum class KnobSampling { uniform, grid, fixed };

struct DatasetSpec {
    std::size_t l_in = 16384;
    std::size_t l_out = 4096;  // last quarter of the input
    TargetMode target_mode = TargetMode::windowed;
    KnobSampling knob_sampling = KnobSampling::uniform;
    int grid_points = 10;
    std::vector<double> fixed_controls;  // raw units, used by KnobSampling::fixed
    double fs = 44100.0;
    bool phase_flip = false;

    std::size_t lookback() const { return l_in - l_out; }
    void validate(const EffectSpec& effect) const;
};

struct WindowPair {
    std::vector<float> input;      // l_in samples
    std::vector<float> target;     // l_out samples
    std::vector<double> controls;  // normalized to [-0.5, 0.5]; the exact key of the pair
};

struct DrawRecord {
    std::size_t clip;
    std::size_t start;
};

class WindowSource {
public:
    virtual ~WindowSource() = default;
    virtual WindowPair sample(Rng& rng) = 0;
    virtual std::size_t n_knobs() const = 0;
    virtual const DatasetSpec& spec() const = 0;
};

// Windows cut from in-memory clips, targets computed by a software effect.
class EffectWindowSource final : public WindowSource {
public:
    EffectWindowSource(const EffectSpec& effect, std::vector<std::vector<float>> clips, DatasetSpec spec);

    WindowPair sample(Rng& rng) override;
    std::size_t n_knobs() const override { return effect_.knobs.size(); }
    const DatasetSpec& spec() const override { return spec_; }

    // One knob draw, one clip, consecutive windows: the training regime the
    // shuffling ablation compares against.
    std::vector<WindowPair> sample_sequential_fixed(Rng& rng, std::size_t count);

    void enable_draw_log(bool on) { log_enabled_ = on; }
    const std::vector<DrawRecord>& draw_log() const { return draw_log_; }

    ControlVector draw_controls(Rng& rng) const;

private:
    WindowPair cut_pair(std::size_t clip, std::size_t start, const ControlVector& controls);
    const std::vector<float>& streamed_cache(std::size_t clip, const ControlVector& controls);

    const EffectSpec& effect_;
    std::vector<std::vector<float>> clips_;
    DatasetSpec spec_;
    std::vector<std::size_t> valid_starts_;  // per clip
    std::size_t total_starts_ = 0;
    bool log_enabled_ = false;
    std::vector<DrawRecord> draw_log_;
    // ST outputs per clip, populated lazily; only valid for fixed knobs
    std::vector<std::vector<float>> st_cache_;
};

// Recorded input/output file pairs (the analog-unit path). Targets are
// streamed by construction.
struct PairedCapture {
    std::string input_path;
    std::string output_path;
    ControlVector controls;
    std::ptrdiff_t alignment_offset = 0;  // output lags input by this many samples
};

class PairedCaptureSource final : public WindowSource {
public:
    PairedCaptureSource(std::vector<PairedCapture> captures, const EffectSpec& effect, DatasetSpec spec);

    WindowPair sample(Rng& rng) override;
    std::size_t n_knobs() const override { return n_knobs_; }
    const DatasetSpec& spec() const override { return spec_; }

private:
    struct Loaded {
        std::vector<float> input;
        std::vector<float> output;
        std::vector<double> controls;
        std::ptrdiff_t offset;
    };
    std::vector<Loaded> captures_;
    DatasetSpec spec_;
    std::size_t n_knobs_;
    std::vector<std::size_t> valid_starts_;
    std::size_t total_starts_ = 0;
};

// Every pair drawn independently: fresh location and fresh controls.
std::vector<WindowPair> make_batch(WindowSource& source, std::size_t batch_size, Rng& rng);

// with probability 1/2 negate input and target, controls untouched
WindowPair phase_flip_augment(WindowPair pair, Rng& rng);
WindowPair phase_flip(WindowPair pair);

// Cartesian product of equally spaced raw values, endpoints included.
std::vector<ControlVector> knob_grid(const EffectSpec& spec, int n_per_knob);
std::vector<ControlVector> knob_grid(const EffectSpec& spec, const std::vector<int>& per_knob);

struct LookbackPoint {
    std::size_t lookback;
    double mae;
};

// MAE between windowed-target tiling and the streamed output, one point per
// lookback value. Lookbacks must be sorted ascending.
std::vector<LookbackPoint> lookback_error_curve(const EffectSpec& effect, const ControlVector& controls,
                                                std::span<const float> signal, double fs,
                                                const std::vector<std::size_t>& lookbacks,
                                                std::size_t l_out);

void write_lookback_csv(const std::string& path, const std::vector<LookbackPoint>& curve);

// Least-squares fit of log(mae) = log(c) - k*lookback over points above
// `floor`; returns {c, k}.
struct ExpFit {
    double c;
    double k;
};
ExpFit fit_exponential(const std::vector<LookbackPoint>& curve, double floor = 1e-12);

// capture filename convention: <stem>__<knob>=<value>__...wav
ControlVector parse_capture_controls(const std::string& filename, const EffectSpec& spec);
std::string capture_filename(const std::string& stem, const ControlVector& controls, const EffectSpec& spec);

// argmax of cross-correlation over lags in [-max_lag, max_lag]
std::ptrdiff_t estimate_alignment_offset(std::span<const float> input, std::span<const float> output,
                                         std::size_t max_lag);

}  // namespace fxl::data
