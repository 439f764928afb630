#include "fxlearn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fxlearn/errors.hpp"
#include "fxlearn/wav.hpp"

namespace fxl::data {

namespace {

std::vector<double> widen(std::span<const float> x) {
    return std::vector<double>(x.begin(), x.end());
}

std::vector<float> narrow(std::span<const double> x) {
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<float>(x[i]);
    return out;
}

}  // namespace

void DatasetSpec::validate(const EffectSpec& effect) const {
    if (l_out == 0 || l_in == 0) raise_config("dataset: window sizes must be positive");
    if (l_out > l_in) {
        raise_config("dataset: l_out " + std::to_string(l_out) + " exceeds l_in " + std::to_string(l_in));
    }
    if (fs <= 0) raise_config("dataset: sample rate must be positive");
    if (knob_sampling == KnobSampling::grid && grid_points < 2) {
        raise_config("dataset: grid sampling needs at least 2 points per knob");
    }
    if (knob_sampling == KnobSampling::fixed) {
        effects::validate_controls(effects::normalize_controls(fixed_controls, effect), effect);
    }
}

EffectWindowSource::EffectWindowSource(const EffectSpec& effect, std::vector<std::vector<float>> clips,
                                       DatasetSpec spec)
    : effect_(effect), clips_(std::move(clips)), spec_(std::move(spec)) {
    spec_.validate(effect_);
    if (!effect_.invocable) {
        raise_config("effect '" + effect_.name + "' cannot drive an on-the-fly source; use recorded pairs");
    }
    valid_starts_.resize(clips_.size(), 0);
    for (std::size_t i = 0; i < clips_.size(); ++i) {
        if (clips_[i].size() >= spec_.l_in) {
            valid_starts_[i] = clips_[i].size() - spec_.l_in + 1;
            total_starts_ += valid_starts_[i];
        }
    }
    if (total_starts_ == 0) raise_config("dataset: no clip is long enough for a full window");
    st_cache_.resize(clips_.size());
}

ControlVector EffectWindowSource::draw_controls(Rng& rng) const {
    std::vector<double> raw(effect_.knobs.size());
    switch (spec_.knob_sampling) {
        case KnobSampling::uniform:
            for (std::size_t i = 0; i < raw.size(); ++i) {
                raw[i] = rng.uniform(effect_.knobs[i].lo, effect_.knobs[i].hi);
            }
            break;
        case KnobSampling::grid:
            for (std::size_t i = 0; i < raw.size(); ++i) {
                const auto& k = effect_.knobs[i];
                const auto idx = rng.below(static_cast<std::uint64_t>(spec_.grid_points));
                raw[i] = k.lo + (k.hi - k.lo) * static_cast<double>(idx) /
                                    static_cast<double>(spec_.grid_points - 1);
            }
            break;
        case KnobSampling::fixed:
            raw = spec_.fixed_controls;
            break;
    }
    // canonicalize through the normalized form: a pair's stored controls
    // then reproduce its target bit for bit
    return effects::controls_from_normalized(effects::normalize_controls(raw, effect_).normalized, effect_);
}

const std::vector<float>& EffectWindowSource::streamed_cache(std::size_t clip, const ControlVector& controls) {
    if (st_cache_[clip].empty()) {
        st_cache_[clip] = narrow(effects::apply_streamed(effect_, widen(clips_[clip]), controls, spec_.fs));
    }
    return st_cache_[clip];
}

WindowPair EffectWindowSource::cut_pair(std::size_t clip, std::size_t start, const ControlVector& controls) {
    WindowPair pair;
    const auto& c = clips_[clip];
    pair.input.assign(c.begin() + static_cast<std::ptrdiff_t>(start),
                      c.begin() + static_cast<std::ptrdiff_t>(start + spec_.l_in));
    if (spec_.target_mode == TargetMode::windowed) {
        pair.target = narrow(effects::apply_windowed(effect_, widen(pair.input), controls, spec_.fs, spec_.l_out));
    } else if (spec_.knob_sampling == KnobSampling::fixed) {
        const auto& st = streamed_cache(clip, controls);
        pair.target.assign(st.begin() + static_cast<std::ptrdiff_t>(start + spec_.lookback()),
                           st.begin() + static_cast<std::ptrdiff_t>(start + spec_.l_in));
    } else {
        // the per-sample recursion is causal, so streaming the prefix is
        // bit-identical to streaming the whole clip
        std::vector<double> prefix(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(start + spec_.l_in));
        std::vector<double> st = effects::apply_streamed(effect_, prefix, controls, spec_.fs);
        pair.target = narrow(std::span<const double>(st).subspan(start + spec_.lookback(), spec_.l_out));
    }
    pair.controls.assign(controls.normalized.begin(), controls.normalized.end());
    return pair;
}

WindowPair EffectWindowSource::sample(Rng& rng) {
    const ControlVector controls = draw_controls(rng);
    std::uint64_t g = rng.below(total_starts_);
    std::size_t clip = 0;
    while (g >= valid_starts_[clip]) {
        g -= valid_starts_[clip];
        ++clip;
    }
    const auto start = static_cast<std::size_t>(g);
    if (log_enabled_) draw_log_.push_back({clip, start});
    WindowPair pair = cut_pair(clip, start, controls);
    if (spec_.phase_flip) pair = phase_flip_augment(std::move(pair), rng);
    return pair;
}

std::vector<WindowPair> EffectWindowSource::sample_sequential_fixed(Rng& rng, std::size_t count) {
    if (count == 0) raise_config("sample_sequential_fixed: count must be >= 1");
    const ControlVector controls = draw_controls(rng);
    const std::size_t need = spec_.l_in + (count - 1) * spec_.l_out;
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < clips_.size(); ++i) {
        if (clips_[i].size() >= need) eligible.push_back(i);
    }
    if (eligible.empty()) {
        raise_config("sample_sequential_fixed: no clip long enough for " + std::to_string(count) +
                     " consecutive windows");
    }
    const std::size_t clip = eligible[rng.below(eligible.size())];
    const std::size_t start0 = rng.below(clips_[clip].size() - need + 1);
    std::vector<WindowPair> batch;
    batch.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t start = start0 + w * spec_.l_out;
        if (log_enabled_) draw_log_.push_back({clip, start});
        WindowPair pair = cut_pair(clip, start, controls);
        if (spec_.phase_flip) pair = phase_flip_augment(std::move(pair), rng);
        batch.push_back(std::move(pair));
    }
    return batch;
}

PairedCaptureSource::PairedCaptureSource(std::vector<PairedCapture> captures, const EffectSpec& effect,
                                         DatasetSpec spec)
    : spec_(std::move(spec)), n_knobs_(effect.knobs.size()) {
    spec_.validate(effect);
    if (captures.empty()) raise_config("capture source: no capture pairs given");
    if (spec_.target_mode != TargetMode::streamed) {
        raise_config("capture source: recorded pairs are streamed by nature; use target_mode=st");
    }
    for (const auto& cap : captures) {
        WavData in = read_wav(cap.input_path);
        WavData out = read_wav(cap.output_path);
        if (in.sample_rate != out.sample_rate ||
            static_cast<double>(in.sample_rate) != spec_.fs) {
            raise_data("capture pair sample rate mismatch for " + cap.input_path);
        }
        Loaded l;
        l.input = std::move(in.samples);
        l.output = std::move(out.samples);
        l.offset = cap.alignment_offset;
        l.controls.assign(cap.controls.normalized.begin(), cap.controls.normalized.end());
        captures_.push_back(std::move(l));
    }
    valid_starts_.resize(captures_.size(), 0);
    for (std::size_t i = 0; i < captures_.size(); ++i) {
        const auto& c = captures_[i];
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(
            0, -static_cast<std::ptrdiff_t>(spec_.lookback()) - c.offset);
        const std::ptrdiff_t hi_in = static_cast<std::ptrdiff_t>(c.input.size()) -
                                     static_cast<std::ptrdiff_t>(spec_.l_in);
        const std::ptrdiff_t hi_out = static_cast<std::ptrdiff_t>(c.output.size()) -
                                      static_cast<std::ptrdiff_t>(spec_.l_in) - c.offset;
        const std::ptrdiff_t hi = std::min(hi_in, hi_out);
        if (hi >= lo) {
            valid_starts_[i] = static_cast<std::size_t>(hi - lo + 1);
            total_starts_ += valid_starts_[i];
        }
    }
    if (total_starts_ == 0) raise_config("capture source: no capture is long enough for a full window");
}

WindowPair PairedCaptureSource::sample(Rng& rng) {
    std::uint64_t g = rng.below(total_starts_);
    std::size_t ci = 0;
    while (g >= valid_starts_[ci]) {
        g -= valid_starts_[ci];
        ++ci;
    }
    const auto& c = captures_[ci];
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(
        0, -static_cast<std::ptrdiff_t>(spec_.lookback()) - c.offset);
    const std::ptrdiff_t start = lo + static_cast<std::ptrdiff_t>(g);
    WindowPair pair;
    pair.input.assign(c.input.begin() + start, c.input.begin() + start + static_cast<std::ptrdiff_t>(spec_.l_in));
    const std::ptrdiff_t tstart = start + static_cast<std::ptrdiff_t>(spec_.lookback()) + c.offset;
    pair.target.assign(c.output.begin() + tstart,
                       c.output.begin() + tstart + static_cast<std::ptrdiff_t>(spec_.l_out));
    pair.controls = c.controls;
    if (spec_.phase_flip) pair = phase_flip_augment(std::move(pair), rng);
    return pair;
}

std::vector<WindowPair> make_batch(WindowSource& source, std::size_t batch_size, Rng& rng) {
    if (batch_size == 0) raise_config("make_batch: batch size must be >= 1");
    std::vector<WindowPair> batch;
    batch.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(source.sample(rng));
    return batch;
}

WindowPair phase_flip(WindowPair pair) {
    for (auto& v : pair.input) v = -v;
    for (auto& v : pair.target) v = -v;
    return pair;
}

WindowPair phase_flip_augment(WindowPair pair, Rng& rng) {
    if (rng.coin()) return phase_flip(std::move(pair));
    return pair;
}

std::vector<ControlVector> knob_grid(const EffectSpec& spec, int n_per_knob) {
    return knob_grid(spec, std::vector<int>(spec.knobs.size(), n_per_knob));
}

std::vector<ControlVector> knob_grid(const EffectSpec& spec, const std::vector<int>& per_knob) {
    if (per_knob.size() != spec.knobs.size()) raise_config("knob_grid: per-knob count list length mismatch");
    for (int n : per_knob) {
        if (n < 2) raise_config("knob_grid: need at least 2 settings per knob");
    }
    std::size_t total = 1;
    for (int n : per_knob) total *= static_cast<std::size_t>(n);
    std::vector<ControlVector> grid;
    grid.reserve(total);
    std::vector<int> idx(spec.knobs.size(), 0);
    for (std::size_t cell = 0; cell < total; ++cell) {
        std::vector<double> raw(spec.knobs.size());
        for (std::size_t k = 0; k < spec.knobs.size(); ++k) {
            const auto& knob = spec.knobs[k];
            raw[k] = knob.lo + (knob.hi - knob.lo) * static_cast<double>(idx[k]) /
                                   static_cast<double>(per_knob[k] - 1);
        }
        grid.push_back(effects::normalize_controls(raw, spec));
        // odometer increment, last knob fastest
        for (std::size_t k = spec.knobs.size(); k-- > 0;) {
            if (++idx[k] < per_knob[k]) break;
            idx[k] = 0;
        }
    }
    return grid;
}

std::vector<LookbackPoint> lookback_error_curve(const EffectSpec& effect, const ControlVector& controls,
                                                std::span<const float> signal, double fs,
                                                const std::vector<std::size_t>& lookbacks,
                                                std::size_t l_out) {
    if (!std::is_sorted(lookbacks.begin(), lookbacks.end())) {
        raise_config("lookback_error_curve: lookbacks must be sorted ascending");
    }
    if (lookbacks.empty()) raise_config("lookback_error_curve: no lookback values given");
    if (signal.size() < lookbacks.back() + l_out) {
        raise_config("lookback_error_curve: signal shorter than largest window");
    }
    const std::vector<double> x = widen(signal);
    const std::vector<double> st = effects::apply_streamed(effect, x, controls, fs);
    std::vector<LookbackPoint> curve;
    curve.reserve(lookbacks.size());
    for (const std::size_t lb : lookbacks) {
        double err = 0.0;
        std::size_t count = 0;
        for (std::size_t s = lb; s + l_out <= x.size(); s += l_out) {
            const std::span<const double> window(x.data() + s - lb, lb + l_out);
            const std::vector<double> wt = effects::apply_windowed(effect, window, controls, fs, l_out);
            for (std::size_t i = 0; i < l_out; ++i) err += std::abs(wt[i] - st[s + i]);
            count += l_out;
        }
        curve.push_back({lb, err / static_cast<double>(count)});
    }
    return curve;
}

void write_lookback_csv(const std::string& path, const std::vector<LookbackPoint>& curve) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise_io("cannot write lookback csv: " + path);
    out << "lookback,mae\n";
    for (const auto& p : curve) {
        char line[64];
        std::snprintf(line, sizeof(line), "%zu,%.12e\n", p.lookback, p.mae);
        out << line;
    }
}

ExpFit fit_exponential(const std::vector<LookbackPoint>& curve, double floor) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (const auto& p : curve) {
        if (p.mae <= floor) continue;
        const double xv = static_cast<double>(p.lookback);
        const double yv = std::log(p.mae);
        sx += xv;
        sy += yv;
        sxx += xv * xv;
        sxy += xv * yv;
        ++n;
    }
    if (n < 2) raise_data("fit_exponential: fewer than 2 points above the floor");
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    const double slope = (static_cast<double>(n) * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / static_cast<double>(n);
    return {std::exp(intercept), -slope};
}

ControlVector parse_capture_controls(const std::string& filename, const EffectSpec& spec) {
    std::string base = std::filesystem::path(filename).filename().string();
    const auto dot = base.rfind('.');
    if (dot != std::string::npos) base = base.substr(0, dot);
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    while (pos <= base.size()) {
        const auto next = base.find("__", pos);
        if (next == std::string::npos) {
            tokens.push_back(base.substr(pos));
            break;
        }
        tokens.push_back(base.substr(pos, next - pos));
        pos = next + 2;
    }
    std::vector<double> raw(spec.knobs.size());
    std::vector<bool> found(spec.knobs.size(), false);
    for (std::size_t t = 1; t < tokens.size(); ++t) {
        const auto eq = tokens[t].find('=');
        if (eq == std::string::npos) raise_data("capture filename token '" + tokens[t] + "' is not knob=value");
        const std::string key = tokens[t].substr(0, eq);
        const std::string val = tokens[t].substr(eq + 1);
        bool matched = false;
        for (std::size_t k = 0; k < spec.knobs.size(); ++k) {
            if (spec.knobs[k].name == key) {
                raw[k] = std::stod(val);
                found[k] = true;
                matched = true;
                break;
            }
        }
        if (!matched) raise_data("capture filename names unknown knob '" + key + "' for effect " + spec.name);
    }
    for (std::size_t k = 0; k < spec.knobs.size(); ++k) {
        if (!found[k]) {
            raise_data("capture filename missing knob '" + spec.knobs[k].name + "': " + filename);
        }
    }
    return effects::normalize_controls(raw, spec);
}

std::string capture_filename(const std::string& stem, const ControlVector& controls, const EffectSpec& spec) {
    std::string name = stem;
    for (std::size_t k = 0; k < spec.knobs.size(); ++k) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "__%s=%g", spec.knobs[k].name.c_str(), controls.raw[k]);
        name += buf;
    }
    return name + ".wav";
}

std::ptrdiff_t estimate_alignment_offset(std::span<const float> input, std::span<const float> output,
                                         std::size_t max_lag) {
    if (input.empty() || output.empty()) raise_data("estimate_alignment_offset: empty signal");
    double best = -1.0;
    std::ptrdiff_t best_lag = 0;
    const auto lag_limit = static_cast<std::ptrdiff_t>(max_lag);
    for (std::ptrdiff_t lag = -lag_limit; lag <= lag_limit; ++lag) {
        double acc = 0.0;
        const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -lag);
        const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(input.size()),
                                                           static_cast<std::ptrdiff_t>(output.size()) - lag);
        for (std::ptrdiff_t t = t0; t < t1; ++t) {
            acc += static_cast<double>(input[static_cast<std::size_t>(t)]) *
                   static_cast<double>(output[static_cast<std::size_t>(t + lag)]);
        }
        if (acc > best) {
            best = acc;
            best_lag = lag;
        }
    }
    return best_lag;
}

}  // namespace fxl::data
