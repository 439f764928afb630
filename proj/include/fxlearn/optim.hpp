#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fxlearn/autodiff.hpp"
#include "fxlearn/errors.hpp"

namespace fxl {

template <class T>
struct Parameter {
    std::string name;
    ad::Var<T> var;
    bool trainable = true;
};

template <class T>
void zero_grads(std::vector<Parameter<T>>& params) {
    for (auto& p : params) {
        p.var->ensure_grad();
        p.var->zero_grad();
    }
}

// AdamW with decoupled weight decay: the decay term is applied directly to
// the weights, outside the moment estimates.
template <class T>
struct AdamWConfig {
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
    T weight_decay = T(0);
};

template <class T>
struct AdamWState {
    AdamWConfig<T> cfg;
    std::vector<std::vector<T>> m;  // first moments, one array per parameter
    std::vector<std::vector<T>> v;  // second moments
    std::int64_t t = 0;

    static AdamWState init(const std::vector<Parameter<T>>& params, AdamWConfig<T> cfg) {
        AdamWState s;
        s.cfg = cfg;
        s.m.reserve(params.size());
        s.v.reserve(params.size());
        for (const auto& p : params) {
            s.m.emplace_back(p.var->value.size(), T(0));
            s.v.emplace_back(p.var->value.size(), T(0));
        }
        return s;
    }
};

template <class T>
void adamw_step(std::vector<Parameter<T>>& params, AdamWState<T>& state, T lr) {
    if (lr <= T(0)) raise_config("adamw_step: learning rate must be positive");
    if (state.m.size() != params.size()) raise_config("adamw_step: optimizer state does not match parameter list");
    state.t += 1;
    const T b1 = state.cfg.beta1, b2 = state.cfg.beta2;
    const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(b1), static_cast<double>(state.t)));
    const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(b2), static_cast<double>(state.t)));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi];
        if (!p.trainable) continue;
        if (p.var->grad.size() != p.var->value.size()) {
            raise_config("adamw_step: missing gradient for trainable parameter '" + p.name + "'");
        }
        T* w = p.var->value.ptr();
        const T* g = p.var->grad.ptr();
        T* m = state.m[pi].data();
        T* v = state.v[pi].data();
        const std::size_t n = p.var->value.size();
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = b1 * m[i] + (T(1) - b1) * g[i];
            v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
            const T mh = m[i] / bc1;
            const T vh = v[i] / bc2;
            w[i] -= lr * (mh / (std::sqrt(vh) + state.cfg.eps) + state.cfg.weight_decay * w[i]);
        }
    }
}

// 1-cycle learning-rate policy: cosine ramp from lr_max/div_factor up to
// lr_max over the warmup fraction, then cosine anneal down to
// lr_max/(div_factor*final_div_factor).
struct OneCycleSchedule {
    double lr_max = 1e-3;
    std::int64_t total_steps = 1;
    double warmup_fraction = 0.3;
    double div_factor = 25.0;
    double final_div_factor = 1e4;

    void validate() const {
        if (lr_max <= 0) raise_config("one_cycle: lr_max must be positive");
        if (total_steps < 1) raise_config("one_cycle: total_steps must be >= 1");
        if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0)) {
            raise_config("one_cycle: warmup_fraction must lie in (0,1)");
        }
        if (div_factor <= 1.0 || final_div_factor <= 0.0) {
            raise_config("one_cycle: div factors must satisfy div_factor > 1, final_div_factor > 0");
        }
    }
};

inline double one_cycle_lr(std::int64_t step, const OneCycleSchedule& s) {
    s.validate();
    if (step < 0 || step > s.total_steps) {
        raise_config("one_cycle: step " + std::to_string(step) + " outside [0," +
                     std::to_string(s.total_steps) + "]");
    }
    const double pi = 3.14159265358979323846;
    const double lo = s.lr_max / s.div_factor;
    const double end = s.lr_max / (s.div_factor * s.final_div_factor);
    const double warm_end = s.warmup_fraction * static_cast<double>(s.total_steps);
    // lerp form keeps the endpoints bit-exact (cos(pi*0)=1, cos(pi*1)=-1)
    if (static_cast<double>(step) <= warm_end) {
        const double w = 0.5 * (1.0 - std::cos(pi * static_cast<double>(step) / warm_end));
        return lo * (1.0 - w) + s.lr_max * w;
    }
    const double p = (static_cast<double>(step) - warm_end) / (static_cast<double>(s.total_steps) - warm_end);
    const double w = 0.5 * (1.0 + std::cos(pi * p));
    return end * (1.0 - w) + s.lr_max * w;
}

}  // namespace fxl
