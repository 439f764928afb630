#include "fxlearn/effects.hpp"

#include <cmath>

#include "fxlearn/errors.hpp"

namespace fxl::effects {

namespace {

constexpr double kDbFloorAmplitude = 1e-6;  // -120 dB, keeps log10 off zero

double to_db(double amplitude) { return 20.0 * std::log10(std::max(amplitude, kDbFloorAmplitude)); }

double from_db(double db) { return std::pow(10.0, db / 20.0); }

}  // namespace

const EffectSpec& comp4c() {
    static const EffectSpec spec{
        "comp4c",
        {{"threshold", -30.0, 0.0, "dB"},
         {"ratio", 1.0, 5.0, ""},
         {"attack", 0.001, 0.040, "s"},
         {"release", 0.001, 0.040, "s"}},
        true,
    };
    return spec;
}

const EffectSpec& comp4c_large() {
    static const EffectSpec spec{
        "comp4c-large",
        {{"threshold", -50.0, 0.0, "dB"},
         {"ratio", 1.5, 10.0, ""},
         {"attack", 0.001, 1.0, "s"},
         {"release", 0.001, 1.0, "s"}},
        true,
    };
    return spec;
}

const EffectSpec& la2a() {
    static const EffectSpec spec{
        "la2a",
        {{"peak_reduction", 0.0, 100.0, ""}, {"comp_lim", 0.0, 1.0, "switch"}},
        false,
    };
    return spec;
}

const EffectSpec& gain() {
    static const EffectSpec spec{
        "gain",
        {{"gain", 0.0, 1.0, ""}},
        true,
    };
    return spec;
}

const EffectSpec& find_effect(const std::string& name) {
    if (name == comp4c().name) return comp4c();
    if (name == comp4c_large().name) return comp4c_large();
    if (name == la2a().name) return la2a();
    if (name == gain().name) return gain();
    raise_config("unknown effect '" + name + "'");
}

void validate_controls(const ControlVector& controls, const EffectSpec& spec) {
    if (controls.raw.size() != spec.knobs.size()) {
        raise_data("effect '" + spec.name + "' expects " + std::to_string(spec.knobs.size()) +
                   " controls, got " + std::to_string(controls.raw.size()));
    }
    for (std::size_t i = 0; i < spec.knobs.size(); ++i) {
        const auto& k = spec.knobs[i];
        if (!(controls.raw[i] >= k.lo && controls.raw[i] <= k.hi)) {
            raise_data("control '" + k.name + "' = " + std::to_string(controls.raw[i]) +
                       " outside [" + std::to_string(k.lo) + "," + std::to_string(k.hi) + "]");
        }
    }
}

ControlVector normalize_controls(const std::vector<double>& raw, const EffectSpec& spec) {
    ControlVector cv;
    cv.raw = raw;
    cv.normalized.resize(raw.size());
    if (raw.size() != spec.knobs.size()) {
        raise_data("effect '" + spec.name + "' expects " + std::to_string(spec.knobs.size()) +
                   " controls, got " + std::to_string(raw.size()));
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto& k = spec.knobs[i];
        if (!(raw[i] >= k.lo && raw[i] <= k.hi)) {
            raise_data("control '" + k.name + "' = " + std::to_string(raw[i]) + " outside [" +
                       std::to_string(k.lo) + "," + std::to_string(k.hi) + "]");
        }
        cv.normalized[i] = (raw[i] - k.lo) / (k.hi - k.lo) - 0.5;
    }
    return cv;
}

std::vector<double> denormalize_controls(const std::vector<double>& normalized, const EffectSpec& spec) {
    if (normalized.size() != spec.knobs.size()) {
        raise_data("effect '" + spec.name + "' expects " + std::to_string(spec.knobs.size()) +
                   " normalized controls, got " + std::to_string(normalized.size()));
    }
    std::vector<double> raw(normalized.size());
    for (std::size_t i = 0; i < normalized.size(); ++i) {
        const auto& k = spec.knobs[i];
        if (!(normalized[i] >= -0.5 && normalized[i] <= 0.5)) {
            raise_data("normalized control '" + k.name + "' = " + std::to_string(normalized[i]) +
                       " outside [-0.5,0.5]");
        }
        raw[i] = k.lo + (normalized[i] + 0.5) * (k.hi - k.lo);
    }
    return raw;
}

ControlVector controls_from_normalized(const std::vector<double>& normalized, const EffectSpec& spec) {
    ControlVector cv;
    cv.raw = denormalize_controls(normalized, spec);
    cv.normalized = normalized;
    return cv;
}

std::vector<double> comp4c_process(std::span<const double> x, const ControlVector& controls, double fs,
                                   CompressorState& state) {
    if (fs <= 0.0) raise_config("comp4c_process: sample rate must be positive");
    if (controls.raw.size() != 4) raise_data("comp4c_process: expected 4 controls");
    const double threshold = controls.raw[0];
    const double ratio = controls.raw[1];
    const double attack_s = controls.raw[2];
    const double release_s = controls.raw[3];
    if (attack_s <= 0.0 || release_s <= 0.0) raise_data("comp4c_process: attack and release must be positive");

    const double ln9 = 2.1972245773362196;
    const double alpha_a = std::exp(-ln9 / (fs * attack_s));
    const double alpha_r = std::exp(-ln9 / (fs * release_s));

    std::vector<double> y(x.size());
    double g_s = state.gain_smooth_db;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        if (!std::isfinite(xi)) raise_data("comp4c_process: non-finite input sample at index " + std::to_string(i));
        const double x_db = to_db(std::abs(xi));
        const double g_sc = x_db > threshold ? threshold + (x_db - threshold) / ratio : x_db;
        const double g_r = g_sc - x_db;
        if (g_r < g_s) {
            g_s = alpha_a * g_s + (1.0 - alpha_a) * g_r;
        } else {
            g_s = alpha_r * g_s + (1.0 - alpha_r) * g_r;
        }
        y[i] = xi * from_db(g_s);
    }
    state.gain_smooth_db = g_s;
    return y;
}

namespace {

std::vector<double> apply_gain(std::span<const double> x, const ControlVector& controls) {
    const double g = controls.raw.at(0);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) raise_data("gain: non-finite input sample at index " + std::to_string(i));
        y[i] = g * x[i];
    }
    return y;
}

}  // namespace

std::vector<double> apply_streamed(const EffectSpec& effect, std::span<const double> x,
                                   const ControlVector& controls, double fs) {
    if (!effect.invocable) {
        raise_config("effect '" + effect.name + "' has no software implementation; it exists as recorded file pairs");
    }
    validate_controls(controls, effect);
    if (effect.name == gain().name) return apply_gain(x, controls);
    CompressorState state;
    return comp4c_process(x, controls, fs, state);
}

std::vector<double> apply_windowed(const EffectSpec& effect, std::span<const double> window,
                                   const ControlVector& controls, double fs, std::size_t l_out) {
    if (l_out > window.size()) {
        raise_config("apply_windowed: l_out " + std::to_string(l_out) + " exceeds window of " +
                     std::to_string(window.size()) + " samples");
    }
    std::vector<double> full = apply_streamed(effect, window, controls, fs);
    return std::vector<double>(full.end() - static_cast<std::ptrdiff_t>(l_out), full.end());
}

}  // namespace fxl::effects
