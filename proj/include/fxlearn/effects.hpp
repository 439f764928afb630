#pragma once

#include <span>
#include <string>
#include <vector>

namespace fxl::effects {

struct KnobSpec {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    std::string unit;
};

struct EffectSpec {
    std::string name;
    std::vector<KnobSpec> knobs;
    bool invocable = true;  // LA-2A exists only as recorded file pairs
};

// registry
const EffectSpec& comp4c();
const EffectSpec& comp4c_large();
const EffectSpec& la2a();
const EffectSpec& gain();  // single-knob static gain, the trivial trainable effect
const EffectSpec& find_effect(const std::string& name);

// Raw knob values plus their [-0.5, 0.5] rescaling.
struct ControlVector {
    std::vector<double> raw;
    std::vector<double> normalized;
};

ControlVector normalize_controls(const std::vector<double>& raw, const EffectSpec& spec);
std::vector<double> denormalize_controls(const std::vector<double>& normalized, const EffectSpec& spec);

// Canonical form keyed by the normalized values: raw is recomputed from
// them, so any holder of the normalized vector reproduces the exact same
// effect invocation bit for bit.
ControlVector controls_from_normalized(const std::vector<double>& normalized, const EffectSpec& spec);

// Smoothed gain reduction in dB carried between process calls. 0 dB means no
// reduction; the value never goes positive.
struct CompressorState {
    double gain_smooth_db = 0.0;
};

// Hard-knee feed-forward compressor, one sample at a time:
//   level   x_db = 20*log10(max(|x|, 1e-6))
//   static  g_sc = x_db > T ? T + (x_db - T)/R : x_db
//   reduction    g_r = g_sc - x_db            (<= 0)
//   smoothing    one-pole toward g_r; attack coefficient when the reduction
//                is deepening, release otherwise; alpha = exp(-ln9/(fs*t))
//   output  y = x * 10^(g_s/20)
// Controls are (threshold dB, ratio, attack s, release s).
std::vector<double> comp4c_process(std::span<const double> x, const ControlVector& controls, double fs,
                                   CompressorState& state);

// Whole-stream application: fresh state threaded across the full signal.
std::vector<double> apply_streamed(const EffectSpec& effect, std::span<const double> x,
                                   const ControlVector& controls, double fs);

// Per-window application: state reset at the window start, only the final
// l_out samples returned (the leading lookback portion is discarded).
std::vector<double> apply_windowed(const EffectSpec& effect, std::span<const double> window,
                                   const ControlVector& controls, double fs, std::size_t l_out);

void validate_controls(const ControlVector& controls, const EffectSpec& spec);

}  // namespace fxl::effects
