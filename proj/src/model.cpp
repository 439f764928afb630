#include "fxlearn/model.hpp"

#include <cmath>

#include "fxlearn/errors.hpp"
#include "fxlearn/rng.hpp"

namespace fxl::model {

void ModelConfig::validate() const {
    if (l_in < frame) raise_config("model: l_in must be at least one frame");
    if (l_out == 0 || l_out >= l_in) raise_config("model: need 0 < l_out < l_in");
    if (hop == 0 || hop >= frame) raise_config("model: need 0 < hop < frame");
    if (frame % 2 != 0) raise_config("model: frame size must be even");
    if (base_width < 4 || base_width % 4 != 0) raise_config("model: base_width must be a multiple of 4, >= 4");
    if (n_knobs == 0) raise_config("model: n_knobs must be >= 1");
    if (out_frames() > in_frames()) {
        raise_config("model: output of " + std::to_string(l_out) + " samples needs " +
                     std::to_string(out_frames()) + " frames but the input provides only " +
                     std::to_string(in_frames()));
    }
}

std::pair<Tensor<double>, Tensor<double>> init_dft_weights(std::size_t frame) {
    const std::size_t bins = frame / 2 + 1;
    Tensor<double> cos_bank({bins, frame}), sin_bank({bins, frame});
    const double w = 6.283185307179586477 / static_cast<double>(frame);
    for (std::size_t k = 0; k < bins; ++k) {
        for (std::size_t n = 0; n < frame; ++n) {
            const double a = w * static_cast<double>(k) * static_cast<double>(n);
            cos_bank.data[k * frame + n] = std::cos(a);
            sin_bank.data[k * frame + n] = -std::sin(a);
        }
    }
    return {std::move(cos_bank), std::move(sin_bank)};
}

std::pair<Tensor<double>, Tensor<double>> init_idft_weights(std::size_t frame) {
    const std::size_t bins = frame / 2 + 1;
    Tensor<double> cos_bank({bins, frame}), sin_bank({bins, frame});
    const double w = 6.283185307179586477 / static_cast<double>(frame);
    for (std::size_t k = 0; k < bins; ++k) {
        const double weight = (k == 0 || k == frame / 2) ? 1.0 : 2.0;
        const double s = weight / static_cast<double>(frame);
        for (std::size_t n = 0; n < frame; ++n) {
            const double a = w * static_cast<double>(k) * static_cast<double>(n);
            cos_bank.data[k * frame + n] = s * std::cos(a);
            sin_bank.data[k * frame + n] = -s * std::sin(a);
        }
    }
    return {std::move(cos_bank), std::move(sin_bank)};
}

template <class T>
std::size_t ModelT<T>::add_param(const std::string& name, Tensor<T> value) {
    params_.push_back({name, ad::leaf(std::move(value), true), true});
    return params_.size() - 1;
}

template <class T>
ModelT<T>::ModelT(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);

    auto [acos, asin] = init_dft_weights(cfg_.frame);
    analysis_cos_ = add_param("analysis.cos", acos.template cast<T>());
    analysis_sin_ = add_param("analysis.sin", asin.template cast<T>());

    // Glorot-uniform FC init; the output head is scaled down so the model
    // starts close to the identity passthrough formed by the skips.
    auto glorot = [&](const std::string& name, std::size_t fan_in, std::size_t fan_out, double gain) {
        Tensor<T> w({fan_in, fan_out});
        const double limit = gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (auto& v : w.data) v = static_cast<T>(rng.uniform(-limit, limit));
        return add_param(name, std::move(w));
    };
    auto zeros = [&](const std::string& name, std::size_t n) { return add_param(name, Tensor<T>({n})); };

    const std::size_t bw = cfg_.base_width;
    const std::size_t widths_in[7] = {cfg_.in_frames(), bw,     bw / 2, bw / 4 + cfg_.n_knobs,
                                      bw / 4,           bw / 2, bw};
    const std::size_t widths_out[7] = {bw, bw / 2, bw / 4, bw / 4, bw / 2, bw, cfg_.out_frames()};
    const char* layer_names[7] = {"e1", "e2", "e3", "merge", "d1", "d2", "d3"};
    for (const char* path : {"mag", "phase"}) {
        PathParams& pp = std::string(path) == "mag" ? mag_path_ : phase_path_;
        for (int l = 0; l < 7; ++l) {
            const std::string base = std::string(path) + "." + layer_names[l];
            const double gain = l == 6 ? 0.1 : 1.0;
            pp.w[l] = glorot(base + ".w", widths_in[l], widths_out[l], gain);
            pp.b[l] = zeros(base + ".b", widths_out[l]);
        }
    }

    // The trainable synthesis banks hold O(1) basis values; the w_k/frame
    // inverse-transform scaling lives in a fixed per-bin coefficient applied
    // inside synthesis. With the scaling folded into the weights instead,
    // optimizer steps of size ~lr are enormous relative to the ~1/frame
    // entries and wipe out the initialization within a few hundred steps.
    auto [scos, ssin] = init_dft_weights(cfg_.frame);
    synth_cos_ = add_param("synthesis.cos", scos.template cast<T>());
    synth_sin_ = add_param("synthesis.sin", ssin.template cast<T>());
    synth_scale_ = Tensor<T>({cfg_.bins()});
    for (std::size_t k = 0; k < cfg_.bins(); ++k) {
        const double weight = (k == 0 || k == cfg_.frame / 2) ? 1.0 : 2.0;
        synth_scale_.data[k] = static_cast<T>(weight / static_cast<double>(cfg_.frame));
    }

    coverage_ = Tensor<T>({cfg_.synth_span()});
    for (std::size_t j = 0; j < cfg_.out_frames(); ++j) {
        for (std::size_t t = j * cfg_.hop; t < j * cfg_.hop + cfg_.frame; ++t) coverage_.data[t] += T(1);
    }
}

template <class T>
std::size_t ModelT<T>::param_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.var->value.size();
    return n;
}

template <class T>
std::pair<ad::Var<T>, ad::Var<T>> ModelT<T>::analysis(const ad::Var<T>& x) const {
    if (x->value.rank() != 2 || x->value.shape[1] != cfg_.l_in) {
        raise_shape("analysis: expected input [B," + std::to_string(cfg_.l_in) + "], got " + shape_str(x->value));
    }
    auto re = ad::conv1d(x, param(analysis_cos_), cfg_.hop);
    auto im = ad::conv1d(x, param(analysis_sin_), cfg_.hop);
    return ad::mag_phase(re, im, static_cast<T>(cfg_.mag_eps));
}

template <class T>
ad::Var<T> ModelT<T>::synthesis(const ad::Var<T>& mag, const ad::Var<T>& phase) const {
    auto [re, im] = ad::polar_to_rect(mag, phase);
    auto raw = ad::add(ad::conv1d_transpose(ad::scale_bins(re, synth_scale_), param(synth_cos_), cfg_.hop),
                       ad::conv1d_transpose(ad::scale_bins(im, synth_scale_), param(synth_sin_), cfg_.hop));
    const std::size_t frames = mag->value.shape[2];
    Tensor<T> cov({(frames - 1) * cfg_.hop + cfg_.frame});
    for (std::size_t j = 0; j < frames; ++j) {
        for (std::size_t t = j * cfg_.hop; t < j * cfg_.hop + cfg_.frame; ++t) cov.data[t] += T(1);
    }
    return ad::div_by_vector(raw, std::move(cov));
}

template <class T>
ad::Var<T> ModelT<T>::autoencoder_path(const ad::Var<T>& plane, const ad::Var<T>& knobs, Path which,
                                       bool use_skips) const {
    const PathParams& pp = which == Path::magnitude ? mag_path_ : phase_path_;
    const std::size_t bins = plane->value.shape[1];
    auto h1 = ad::elu(ad::affine(plane, param(pp.w[0]), param(pp.b[0])));
    auto h2 = ad::elu(ad::affine(h1, param(pp.w[1]), param(pp.b[1])));
    auto h3 = ad::elu(ad::affine(h2, param(pp.w[2]), param(pp.b[2])));
    auto kb = ad::broadcast_rows(knobs, bins);
    auto merged = ad::elu(ad::affine(ad::concat(h3, kb, 2), param(pp.w[3]), param(pp.b[3])));
    auto d1 = ad::elu(ad::affine(merged, param(pp.w[4]), param(pp.b[4])));
    if (use_skips) d1 = ad::add(d1, h2);
    auto d2 = ad::elu(ad::affine(d1, param(pp.w[5]), param(pp.b[5])));
    if (use_skips) d2 = ad::add(d2, h1);
    return ad::affine(d2, param(pp.w[6]), param(pp.b[6]));  // linear head
}

template <class T>
typename ModelT<T>::ForwardResult ModelT<T>::forward(const ad::Var<T>& x, const ad::Var<T>& knobs) const {
    if (knobs->value.rank() != 2 || knobs->value.shape[1] != cfg_.n_knobs) {
        raise_shape("forward: expected knobs [B," + std::to_string(cfg_.n_knobs) + "], got " +
                    shape_str(knobs->value));
    }
    if (x->value.rank() != 2 || x->value.shape[0] != knobs->value.shape[0]) {
        raise_shape("forward: batch size mismatch between input and knobs");
    }
    for (const T v : knobs->value.data) {
        if (!(v >= T(-0.5) && v <= T(0.5))) {
            raise_data("forward: knob value " + std::to_string(static_cast<double>(v)) +
                       " outside [-0.5,0.5]");
        }
    }

    auto [mag, phase] = analysis(x);
    const std::size_t f_in = cfg_.in_frames(), f_out = cfg_.out_frames();
    auto mag_crop = ad::slice(mag, 2, f_in - f_out, f_out);
    auto phase_crop = ad::slice(phase, 2, f_in - f_out, f_out);

    // magnitude path emits a strictly positive mask on the input magnitudes;
    // phase path emits an additive correction
    auto mag_head = autoencoder_path(mag, knobs, Path::magnitude);
    auto mask = ad::add_const(ad::elu(mag_head), T(1));
    auto mag_out = ad::hadamard(mask, mag_crop);
    auto phase_head = autoencoder_path(phase, knobs, Path::phase);
    auto phase_out = ad::add(phase_head, phase_crop);

    auto [re, im] = ad::polar_to_rect(mag_out, phase_out);
    auto raw = ad::add(ad::conv1d_transpose(ad::scale_bins(re, synth_scale_), param(synth_cos_), cfg_.hop),
                       ad::conv1d_transpose(ad::scale_bins(im, synth_scale_), param(synth_sin_), cfg_.hop));
    auto ola = ad::div_by_vector(raw, coverage_);
    auto y_hat = ad::slice(ola, 1, cfg_.synth_span() - cfg_.l_out, cfg_.l_out);
    return {y_hat, mag_out};
}

template class ModelT<float>;
template class ModelT<double>;

}  // namespace fxl::model
