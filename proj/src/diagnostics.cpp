#include "fxlearn/diagnostics.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fxlearn/errors.hpp"

namespace fxl::diag {

namespace {

constexpr double kTwoPi = 6.283185307179586477;

std::vector<double> widen(const std::vector<float>& x) {
    return std::vector<double>(x.begin(), x.end());
}

}  // namespace

Predictor model_predictor(const model::Model& m) {
    return [&m](const std::vector<float>& input, const std::vector<double>& knobs) {
        const auto& cfg = m.config();
        if (input.size() != cfg.l_in) raise_shape("model predictor: window length mismatch");
        Tensor<float> x({1, cfg.l_in});
        std::copy(input.begin(), input.end(), x.data.begin());
        Tensor<float> kt({1, knobs.size()});
        for (std::size_t i = 0; i < knobs.size(); ++i) kt.data[i] = static_cast<float>(knobs[i]);
        auto fwd = m.forward(ad::leaf(std::move(x)), ad::leaf(std::move(kt)));
        return std::vector<float>(fwd.y_hat->value.data.begin(), fwd.y_hat->value.data.end());
    };
}

Predictor oracle_predictor(const effects::EffectSpec& effect, double fs, std::size_t l_out) {
    return [&effect, fs, l_out](const std::vector<float>& input, const std::vector<double>& knobs) {
        const auto cv = effects::controls_from_normalized(knobs, effect);
        const std::vector<double> x = widen(input);
        const std::vector<double> y = effects::apply_windowed(effect, x, cv, fs, l_out);
        return std::vector<float>(y.begin(), y.end());
    };
}

std::vector<float> step_test_signal(const StepDiagConfig& cfg) {
    const double base = std::pow(10.0, cfg.base_db / 20.0);
    const double high = std::pow(10.0, cfg.step_db / 20.0);
    const std::size_t lookback = cfg.l_in - cfg.l_out;
    const auto up = lookback + static_cast<std::size_t>(cfg.step_up_frac * static_cast<double>(cfg.l_out));
    const auto down = lookback + static_cast<std::size_t>(cfg.step_down_frac * static_cast<double>(cfg.l_out));
    std::vector<float> x(cfg.l_in);
    for (std::size_t i = 0; i < cfg.l_in; ++i) {
        const double t = static_cast<double>(i) / cfg.fs;
        const double amp = (i >= up && i < down) ? high : base;
        x[i] = static_cast<float>(amp * std::sin(kTwoPi * cfg.carrier_hz * t));
    }
    return x;
}

std::vector<StepCell> step_response_diag(const Predictor& predict, const StepDiagConfig& cfg) {
    if (cfg.l_out == 0 || cfg.l_out > cfg.l_in) raise_config("step diag: bad window geometry");
    const std::vector<float> input = step_test_signal(cfg);
    const std::size_t lookback = cfg.l_in - cfg.l_out;
    const auto up = static_cast<std::size_t>(cfg.step_up_frac * static_cast<double>(cfg.l_out));
    const auto down = static_cast<std::size_t>(cfg.step_down_frac * static_cast<double>(cfg.l_out));
    const auto guard = static_cast<std::size_t>(0.005 * cfg.fs);  // +-5 ms around the edges

    std::vector<StepCell> cells;
    for (const double t_db : cfg.thresholds_db) {
        for (const double ar : cfg.attack_release_s) {
            const auto cv = effects::controls_from_normalized(
                effects::normalize_controls({t_db, cfg.ratio, ar, ar}, effects::comp4c()).normalized,
                effects::comp4c());
            const std::vector<double> target_full =
                effects::apply_windowed(effects::comp4c(), widen(input), cv, cfg.fs, cfg.l_out);

            StepCell cell;
            cell.threshold_db = t_db;
            cell.attack_release_s = ar;
            cell.step_up = up;
            cell.step_down = down;
            cell.input.assign(input.begin() + static_cast<std::ptrdiff_t>(lookback), input.end());
            cell.target.assign(target_full.begin(), target_full.end());
            cell.predicted = predict(input, cv.normalized);
            if (cell.predicted.size() != cfg.l_out) raise_shape("step diag: predictor returned wrong length");

            double near = 0.0, far = 0.0;
            for (std::size_t i = 0; i < cfg.l_out; ++i) {
                const double d = std::abs(static_cast<double>(cell.predicted[i]) -
                                          static_cast<double>(cell.target[i]));
                const bool near_up = i + guard >= up && i < up + guard;
                const bool near_down = i + guard >= down && i < down + guard;
                if (near_up || near_down) {
                    near = std::max(near, d);
                } else {
                    far = std::max(far, d);
                }
            }
            cell.max_abs_diff_near_steps = near;
            cell.max_abs_diff_elsewhere = far;
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

void write_step_cell_csv(const std::string& path, const StepCell& cell) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise_io("cannot write step diagnostic csv: " + path);
    out << "i,input,target,predicted,diff\n";
    for (std::size_t i = 0; i < cell.target.size(); ++i) {
        char line[160];
        std::snprintf(line, sizeof(line), "%zu,%.9e,%.9e,%.9e,%.9e\n", i,
                      static_cast<double>(cell.input[i]), static_cast<double>(cell.target[i]),
                      static_cast<double>(cell.predicted[i]),
                      static_cast<double>(cell.predicted[i]) - static_cast<double>(cell.target[i]));
        out << line;
    }
}

SpectrumPair spectra_diag(const std::vector<float>& a, const std::vector<float>& b, double fs,
                          std::size_t segment) {
    if (a.size() != b.size()) raise_data("spectra_diag: signals must have equal length");
    if (fs <= 0) raise_config("spectra_diag: sample rate must be positive");
    if (static_cast<double>(a.size()) < 2.0 * fs) {
        raise_data("spectra_diag: need at least 2 seconds of audio");
    }
    if (a.size() < segment) raise_data("spectra_diag: signals shorter than one segment");

    const std::size_t hop = segment / 2;
    const std::size_t bins = segment / 2 + 1;
    std::vector<double> window(segment);
    double wsum2 = 0.0;
    for (std::size_t n = 0; n < segment; ++n) {
        window[n] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(n) / static_cast<double>(segment)));
        wsum2 += window[n] * window[n];
    }

    std::vector<double> buf(segment);
    std::vector<fftw_complex> spec(bins);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(segment), buf.data(), spec.data(), FFTW_ESTIMATE);

    auto accumulate = [&](const std::vector<float>& x, std::vector<double>& power) {
        power.assign(bins, 0.0);
        std::size_t count = 0;
        for (std::size_t s = 0; s + segment <= x.size(); s += hop) {
            for (std::size_t n = 0; n < segment; ++n) buf[n] = window[n] * static_cast<double>(x[s + n]);
            fftw_execute(plan);
            for (std::size_t k = 0; k < bins; ++k) {
                power[k] += spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
            }
            ++count;
        }
        const double norm = 1.0 / (static_cast<double>(count) * wsum2 * fs);
        for (auto& p : power) p *= norm;
    };

    std::vector<double> pa, pb;
    accumulate(a, pa);
    accumulate(b, pb);
    fftw_destroy_plan(plan);

    SpectrumPair sp;
    sp.freq_hz.resize(bins);
    sp.db_a.resize(bins);
    sp.db_b.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        sp.freq_hz[k] = fs * static_cast<double>(k) / static_cast<double>(segment);
        sp.db_a[k] = 10.0 * std::log10(pa[k] + 1e-30);
        sp.db_b[k] = 10.0 * std::log10(pb[k] + 1e-30);
    }
    return sp;
}

void write_spectra_csv(const std::string& path, const SpectrumPair& sp) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise_io("cannot write spectra csv: " + path);
    out << "freq_hz,db_a,db_b\n";
    for (std::size_t k = 0; k < sp.freq_hz.size(); ++k) {
        char line[120];
        std::snprintf(line, sizeof(line), "%.4f,%.6f,%.6f\n", sp.freq_hz[k], sp.db_a[k], sp.db_b[k]);
        out << line;
    }
}

}  // namespace fxl::diag
