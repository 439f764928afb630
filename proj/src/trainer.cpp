#include "fxlearn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "fxlearn/checkpoint.hpp"
#include "fxlearn/errors.hpp"

namespace fxl::train {

void LossConfig::validate() const {
    if (lambda < 0.0) raise_config("loss: lambda must be nonnegative");
    if (alpha != 0 && alpha != 1) raise_config("loss: alpha must be 0 or 1");
}

std::vector<double> LossConfig::freq_weights(std::size_t bins) const {
    validate();
    if (bins < 2) raise_config("loss: need at least 2 frequency bins");
    std::vector<double> w(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        const double f = static_cast<double>(k) / static_cast<double>(bins - 1);
        w[k] = std::exp(alpha == 0 ? 1.0 : f);
    }
    return w;
}

void TrainConfig::validate() const {
    if (batch_size == 0 || batches_per_epoch == 0) raise_config("train: batch geometry must be positive");
    if (lr_max <= 0.0) raise_config("train: lr_max must be positive");
    if (weight_decay < 0.0) raise_config("train: weight decay must be nonnegative");
    if (val_batches == 0) raise_config("train: need at least one validation batch");
}

void write_run_record_csv(const std::string& path, const RunRecord& record) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise_io("cannot write run record: " + path);
    out << "epoch,train_loss,val_loss,lr,seconds\n";
    for (const auto& e : record.epochs) {
        char line[160];
        std::snprintf(line, sizeof(line), "%zu,%.9e,%.9e,%.9e,%.3f\n", e.epoch, e.train_loss, e.val_loss,
                      e.lr, e.seconds);
        out << line;
    }
    if (!out) raise_io("write failure on run record: " + path);
}

EvalResult evaluate(const model::Model& m, data::WindowSource& source, std::size_t n_batches,
                    std::size_t batch_size, const LossConfig& lc, std::uint64_t seed) {
    if (n_batches == 0) raise_config("evaluate: n_batches must be positive");
    Rng rng(seed);
    double loss_acc = 0.0, mae_acc = 0.0;
    std::size_t mae_count = 0;
    for (std::size_t b = 0; b < n_batches; ++b) {
        auto batch = data::make_batch(source, batch_size, rng);
        auto tensors = batch_to_tensors<float>(batch);
        auto x = ad::leaf(std::move(tensors.x));
        auto y = ad::leaf(std::move(tensors.y));
        auto knobs = ad::leaf(std::move(tensors.knobs));
        auto fwd = m.forward(x, knobs);
        auto l = loss(fwd.y_hat, y, fwd.mag_out, lc);
        loss_acc += static_cast<double>(l->value.data[0]);
        for (std::size_t i = 0; i < y->value.size(); ++i) {
            mae_acc += std::abs(static_cast<double>(fwd.y_hat->value.data[i]) -
                                static_cast<double>(y->value.data[i]));
        }
        mae_count += y->value.size();
    }
    return {loss_acc / static_cast<double>(n_batches), mae_acc / static_cast<double>(mae_count)};
}

TrainResult train(model::Model& m, data::WindowSource& train_source, data::WindowSource& val_source,
                  const TrainConfig& tc, const LossConfig& lc, const std::string& checkpoint_dir) {
    tc.validate();
    lc.validate();
    const bool save = !checkpoint_dir.empty();
    if (save) std::filesystem::create_directories(checkpoint_dir);

    OneCycleSchedule sched;
    sched.lr_max = tc.lr_max;
    sched.total_steps = static_cast<std::int64_t>(std::max<std::size_t>(1, tc.epochs * tc.batches_per_epoch));
    sched.warmup_fraction = tc.warmup_fraction;
    sched.div_factor = tc.div_factor;
    sched.final_div_factor = tc.final_div_factor;

    AdamWConfig<float> acfg;
    acfg.weight_decay = static_cast<float>(tc.weight_decay);
    auto astate = AdamWState<float>::init(m.params(), acfg);

    const std::uint64_t val_seed = mix_seed(tc.seed, 0x76a1);
    Rng rng(mix_seed(tc.seed, 0x7274));

    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    result.best_epoch = 0;

    auto* effect_source = dynamic_cast<data::EffectWindowSource*>(&train_source);
    if (tc.sequential_batches && effect_source == nullptr) {
        raise_config("train: sequential batches need an on-the-fly effect source");
    }

    const auto run_start = std::chrono::steady_clock::now();
    std::int64_t step = 0;
    double lr = one_cycle_lr(0, sched);
    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        double train_acc = 0.0;
        for (std::size_t b = 0; b < tc.batches_per_epoch; ++b) {
            std::vector<data::WindowPair> batch;
            if (tc.sequential_batches) {
                batch = effect_source->sample_sequential_fixed(rng, tc.batch_size);
            } else {
                batch = data::make_batch(train_source, tc.batch_size, rng);
            }
            auto tensors = batch_to_tensors<float>(batch);
            auto x = ad::leaf(std::move(tensors.x));
            auto y = ad::leaf(std::move(tensors.y));
            auto knobs = ad::leaf(std::move(tensors.knobs));
            lr = one_cycle_lr(step, sched);
            try {
                auto fwd = m.forward(x, knobs);
                auto l = loss(fwd.y_hat, y, fwd.mag_out, lc);
                train_acc += static_cast<double>(l->value.data[0]);
                zero_grads(m.params());
                ad::backward(l);
            } catch (const Error& e) {
                if (e.category() == ErrorCategory::numeric) {
                    raise_numeric("training aborted at epoch " + std::to_string(epoch) + " batch " +
                                  std::to_string(b) + " (lr=" + std::to_string(lr) + ", seed=" +
                                  std::to_string(tc.seed) + "): " + e.what());
                }
                throw;
            }
            adamw_step(m.params(), astate, static_cast<float>(lr));
            ++step;
        }

        const EvalResult val = evaluate(m, val_source, tc.val_batches, tc.batch_size, lc, val_seed);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = train_acc / static_cast<double>(tc.batches_per_epoch);
        rec.val_loss = val.mean_loss;
        rec.lr = lr;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count();
        result.record.epochs.push_back(rec);

        if (val.mean_loss < result.best_val_loss) {
            result.best_val_loss = val.mean_loss;
            result.best_epoch = epoch;
            if (save) {
                write_checkpoint((std::filesystem::path(checkpoint_dir) / "best.stck").string(),
                                 params_to_records(m.params()));
            }
        }
    }

    if (save) {
        auto records = params_to_records(m.params());
        append_optimizer_records(records, m.params(), astate);
        write_checkpoint((std::filesystem::path(checkpoint_dir) / "final.stck").string(), records);
    }
    return result;
}

}  // namespace fxl::train
