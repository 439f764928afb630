#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fxlearn/effects.hpp"
#include "fxlearn/model.hpp"

namespace fxl::diag {

// maps (input window, normalized knobs) to an l_out-sample prediction
using Predictor = std::function<std::vector<float>(const std::vector<float>&, const std::vector<double>&)>;

Predictor model_predictor(const model::Model& m);
// the ground truth run in windowed mode; by construction it reproduces the
// diagnostic target exactly
Predictor oracle_predictor(const effects::EffectSpec& effect, double fs, std::size_t l_out);

// Step-response grid: a sine carrier whose amplitude steps from base_db up to
// step_db and back, one cell per (threshold, attack=release) combination at a
// fixed ratio. Targets are the windowed-mode oracle output.
struct StepDiagConfig {
    std::size_t l_in = 4096;
    std::size_t l_out = 1024;
    double fs = 44100.0;
    double ratio = 3.0;
    std::vector<double> thresholds_db = {-30.0, -20.0};
    std::vector<double> attack_release_s = {0.001, 0.01, 0.03};
    double base_db = -40.0;
    double step_db = 0.0;
    double carrier_hz = 1000.0;
    // step edges, as fractions of the predicted region [0,1)
    double step_up_frac = 0.15;
    double step_down_frac = 0.65;
};

struct StepCell {
    double threshold_db;
    double attack_release_s;
    std::vector<float> input;      // predicted region slice of the input
    std::vector<float> target;     // l_out
    std::vector<float> predicted;  // l_out
    double max_abs_diff_near_steps;  // within +-5 ms of a step edge
    double max_abs_diff_elsewhere;
    std::size_t step_up;    // sample index of the rising edge within the region
    std::size_t step_down;  // falling edge
};

std::vector<StepCell> step_response_diag(const Predictor& predict, const StepDiagConfig& cfg);
std::vector<float> step_test_signal(const StepDiagConfig& cfg);
void write_step_cell_csv(const std::string& path, const StepCell& cell);

// Averaged-periodogram power spectra (Hann window, 4096-point segments, 50%
// overlap) of two equal-length signals.
struct SpectrumPair {
    std::vector<double> freq_hz;
    std::vector<double> db_a;
    std::vector<double> db_b;
};

SpectrumPair spectra_diag(const std::vector<float>& a, const std::vector<float>& b, double fs,
                          std::size_t segment = 4096);
void write_spectra_csv(const std::string& path, const SpectrumPair& sp);

}  // namespace fxl::diag
