#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fxlearn/autodiff.hpp"
#include "fxlearn/dataset.hpp"
#include "fxlearn/model.hpp"
#include "fxlearn/optim.hpp"

namespace fxl::train {

// Loss = mean(logcosh(y_hat - y)) + lambda * mean_k,t(w_k * |M_out|), with
// w_k = exp(f_k^alpha) and f_k the bin index normalized to [0,1].
struct LossConfig {
    double lambda = 2e-5;
    int alpha = 1;  // 1 = exponential frequency weighting, 0 = flat weight e

    void validate() const;
    std::vector<double> freq_weights(std::size_t bins) const;
};

template <class T>
ad::Var<T> loss(const ad::Var<T>& y_hat, const ad::Var<T>& y, const ad::Var<T>& mag_out,
                const LossConfig& cfg) {
    cfg.validate();
    ad::detail::require_same_shape("loss", y_hat, y);
    auto term1 = ad::mean(ad::logcosh(ad::sub(y_hat, y)));
    if (cfg.lambda == 0.0) return term1;
    const std::size_t bins = mag_out->value.shape[1];
    const std::vector<double> w = cfg.freq_weights(bins);
    Tensor<T> wt({bins});
    for (std::size_t i = 0; i < bins; ++i) wt.data[i] = static_cast<T>(w[i]);
    auto term2 = ad::mean(ad::scale_bins(ad::abs_op(mag_out), std::move(wt)));
    return ad::add(term1, ad::scale(term2, static_cast<T>(cfg.lambda)));
}

struct TrainConfig {
    std::size_t batch_size = 200;
    std::size_t batches_per_epoch = 1000;
    std::size_t epochs = 1;
    double lr_max = 1e-3;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    std::size_t val_batches = 4;
    double warmup_fraction = 0.3;
    double div_factor = 25.0;
    double final_div_factor = 1e4;
    bool sequential_batches = false;  // the known-bad fixed-knob regime, for ablations

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch;
    double train_loss;
    double val_loss;
    double lr;
    double seconds;  // wall time, the one non-reproducible column
};

struct RunRecord {
    std::vector<EpochRecord> epochs;
};

void write_run_record_csv(const std::string& path, const RunRecord& record);

struct EvalResult {
    double mean_loss;
    double mae;
};

// Frozen-model evaluation over n_batches drawn with a dedicated rng seed;
// same seed, same numbers.
EvalResult evaluate(const model::Model& m, data::WindowSource& source, std::size_t n_batches,
                    std::size_t batch_size, const LossConfig& lc, std::uint64_t seed);

struct TrainResult {
    RunRecord record;
    double best_val_loss;
    std::size_t best_epoch;
};

// One AdamW step per mini-batch under the 1-cycle schedule. Writes
// best.stck/final.stck under checkpoint_dir unless it is empty.
TrainResult train(model::Model& m, data::WindowSource& train_source, data::WindowSource& val_source,
                  const TrainConfig& tc, const LossConfig& lc, const std::string& checkpoint_dir);

// batch assembly: x [B,l_in], y [B,l_out], knobs [B,n_knobs]
template <class T>
struct BatchTensors {
    Tensor<T> x;
    Tensor<T> y;
    Tensor<T> knobs;
};

template <class T>
BatchTensors<T> batch_to_tensors(const std::vector<data::WindowPair>& batch) {
    if (batch.empty()) raise_config("batch_to_tensors: empty batch");
    const std::size_t b = batch.size();
    const std::size_t l_in = batch[0].input.size();
    const std::size_t l_out = batch[0].target.size();
    const std::size_t nk = batch[0].controls.size();
    BatchTensors<T> out{Tensor<T>({b, l_in}), Tensor<T>({b, l_out}), Tensor<T>({b, nk})};
    for (std::size_t i = 0; i < b; ++i) {
        if (batch[i].input.size() != l_in || batch[i].target.size() != l_out ||
            batch[i].controls.size() != nk) {
            raise_shape("batch_to_tensors: ragged batch");
        }
        for (std::size_t j = 0; j < l_in; ++j) out.x.data[i * l_in + j] = static_cast<T>(batch[i].input[j]);
        for (std::size_t j = 0; j < l_out; ++j) out.y.data[i * l_out + j] = static_cast<T>(batch[i].target[j]);
        for (std::size_t j = 0; j < nk; ++j) out.knobs.data[i * nk + j] = static_cast<T>(batch[i].controls[j]);
    }
    return out;
}

}  // namespace fxl::train
