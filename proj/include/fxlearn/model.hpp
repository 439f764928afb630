#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fxlearn/autodiff.hpp"
#include "fxlearn/optim.hpp"

namespace fxl::model {

// Geometry and widths of the network. The front end is a pair of strided
// convolution banks (DFT-initialized) producing magnitude/phase planes; two
// FC autoencoders with shared weights across bins process the planes, each
// conditioned on the control vector at its bottleneck; a pair of transposed
// convolution banks (inverse-DFT-initialized) reconstructs the waveform.
// The model predicts the last l_out samples of its l_in-sample input.
struct ModelConfig {
    std::size_t l_in = 16384;
    std::size_t l_out = 4096;
    std::size_t frame = 1024;
    std::size_t hop = 384;
    std::size_t base_width = 64;  // first FC width on the frame axis; halves twice toward the bottleneck
    std::size_t n_knobs = 4;
    double mag_eps = 1e-7;

    std::size_t bins() const { return frame / 2 + 1; }
    std::size_t in_frames() const { return (l_in - frame) / hop + 1; }
    std::size_t out_frames() const {
        if (l_out <= frame) return 1;
        return (l_out - frame + hop - 1) / hop + 1;  // minimal frame count spanning l_out
    }
    std::size_t synth_span() const { return (out_frames() - 1) * hop + frame; }
    void validate() const;
};

// analysis bank: kernel k, tap n -> cos(2*pi*k*n/frame) and -sin(2*pi*k*n/frame)
std::pair<Tensor<double>, Tensor<double>> init_dft_weights(std::size_t frame);
// synthesis bank: inverse bases scaled by w_k/frame (w = 1 at DC and Nyquist, 2 elsewhere)
std::pair<Tensor<double>, Tensor<double>> init_idft_weights(std::size_t frame);

template <class T>
class ModelT {
public:
    ModelT(ModelConfig cfg, std::uint64_t seed);

    struct ForwardResult {
        ad::Var<T> y_hat;    // [B, l_out]
        ad::Var<T> mag_out;  // [B, bins, out_frames], nonnegative
    };

    // x: [B, l_in]; knobs: [B, n_knobs] normalized to [-0.5, 0.5]
    ForwardResult forward(const ad::Var<T>& x, const ad::Var<T>& knobs) const;

    // front end alone: (magnitude, phase) planes of shape [B, bins, in_frames]
    std::pair<ad::Var<T>, ad::Var<T>> analysis(const ad::Var<T>& x) const;

    // back end alone: overlap-add of the full plane pair, coverage-normalized;
    // output spans (frames-1)*hop + frame samples
    ad::Var<T> synthesis(const ad::Var<T>& mag, const ad::Var<T>& phase) const;

    enum class Path { magnitude, phase };
    ad::Var<T> autoencoder_path(const ad::Var<T>& plane, const ad::Var<T>& knobs, Path which,
                                bool use_skips = true) const;

    const ModelConfig& config() const { return cfg_; }
    std::vector<Parameter<T>>& params() { return params_; }
    const std::vector<Parameter<T>>& params() const { return params_; }
    std::size_t param_count() const;

private:
    struct PathParams {
        // indices into params_: e1, e2, e3, merge, d1, d2, d3 (w and b each)
        std::size_t w[7];
        std::size_t b[7];
    };

    ad::Var<T> param(std::size_t idx) const { return params_[idx].var; }
    std::size_t add_param(const std::string& name, Tensor<T> value);

    ModelConfig cfg_;
    std::vector<Parameter<T>> params_;
    std::size_t analysis_cos_, analysis_sin_;
    std::size_t synth_cos_, synth_sin_;
    PathParams mag_path_, phase_path_;
    Tensor<T> synth_scale_;  // fixed w_k/frame inverse-transform scaling per bin
    Tensor<T> coverage_;     // overlap count per span sample
};

using Model = ModelT<float>;

}  // namespace fxl::model
