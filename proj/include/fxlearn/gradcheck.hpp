#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "fxlearn/autodiff.hpp"
#include "fxlearn/rng.hpp"

namespace fxl {

// Finite-difference gradient checking. Always runs in 64-bit: analytic
// gradients of a scalar-valued graph are compared against central
// differences with step h, coordinate by coordinate, over `trials`
// independent random instances. Returns the worst relative error seen,
// with relative error defined as |a-f| / max(1e-3, |a|, |f|).
struct GradCheckSpec {
    std::vector<std::vector<std::size_t>> shapes;  // one entry per graph input
    int trials = 10;
    double h = 1e-6;
    double lo = -1.5;          // uniform range for input values
    double hi = 1.5;
    double avoid_zero = 0.0;   // resample values with |v| below this (kinked ops)
    std::uint64_t seed = 0x5eed;
};

using GraphBuilder = std::function<ad::Var<double>(const std::vector<ad::Var<double>>&)>;

inline double grad_check(const GraphBuilder& build, const GradCheckSpec& spec) {
    double worst = 0.0;
    for (int trial = 0; trial < spec.trials; ++trial) {
        Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(trial)));
        std::vector<ad::Var<double>> inputs;
        inputs.reserve(spec.shapes.size());
        for (const auto& shape : spec.shapes) {
            Tensor<double> t(shape);
            for (auto& v : t.data) {
                do {
                    v = rng.uniform(spec.lo, spec.hi);
                } while (std::abs(v) < spec.avoid_zero);
            }
            inputs.push_back(ad::leaf(std::move(t), true));
        }

        auto out = build(inputs);
        ad::backward(out);

        for (auto& input : inputs) {
            for (std::size_t i = 0; i < input->value.size(); ++i) {
                const double saved = input->value.data[i];
                input->value.data[i] = saved + spec.h;
                const double f_plus = build(inputs)->value.data[0];
                input->value.data[i] = saved - spec.h;
                const double f_minus = build(inputs)->value.data[0];
                input->value.data[i] = saved;
                const double fd = (f_plus - f_minus) / (2.0 * spec.h);
                const double an = input->grad.data[i];
                const double err = std::abs(an - fd) / std::max({1e-3, std::abs(an), std::abs(fd)});
                worst = std::max(worst, err);
            }
        }
    }
    return worst;
}

}  // namespace fxl
