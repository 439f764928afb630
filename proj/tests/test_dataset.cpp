#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "fxlearn/dataset.hpp"
#include "fxlearn/errors.hpp"
#include "fxlearn/forge.hpp"

using namespace fxl;
using namespace fxl::data;

namespace {

std::vector<std::vector<float>> synth_clips(std::uint64_t seed, std::size_t n_clips, std::size_t len,
                                            double fs) {
    Rng rng(seed);
    std::vector<std::vector<float>> clips;
    for (std::size_t i = 0; i < n_clips; ++i) {
        clips.push_back(forge::gen_signal(forge::random_synth_spec(rng, len, fs), rng.next_u64()));
    }
    return clips;
}

DatasetSpec small_spec() {
    DatasetSpec s;
    s.l_in = 512;
    s.l_out = 128;
    s.fs = 44100.0;
    return s;
}

}  // namespace

TEST_CASE("dataset spec geometry checks") {
    DatasetSpec s = small_spec();
    CHECK(s.lookback() == 384);
    s.l_out = 1024;
    CHECK_THROWS_AS(s.validate(effects::comp4c()), Error);

    // the published training geometry: input twice the output
    DatasetSpec paper;
    paper.l_in = 16384;
    paper.l_out = 8192;
    CHECK(paper.lookback() == 8192);
}

TEST_CASE("same rng state yields identical pairs") {
    auto clips = synth_clips(1, 3, 4096, 44100.0);
    EffectWindowSource src(effects::comp4c(), clips, small_spec());
    Rng a(42), b(42);
    for (int i = 0; i < 5; ++i) {
        const WindowPair pa = src.sample(a);
        const WindowPair pb = src.sample(b);
        CHECK(pa.input == pb.input);
        CHECK(pa.target == pb.target);
        CHECK(pa.controls == pb.controls);
    }
}

TEST_CASE("windowed targets equal the oracle bitwise") {
    auto clips = synth_clips(2, 2, 4096, 44100.0);
    DatasetSpec spec = small_spec();
    spec.target_mode = TargetMode::windowed;
    EffectWindowSource src(effects::comp4c(), clips, spec);
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        const WindowPair p = src.sample(rng);
        const auto cv = effects::controls_from_normalized(p.controls, effects::comp4c());
        const auto want = effects::apply_windowed(
            effects::comp4c(), std::vector<double>(p.input.begin(), p.input.end()), cv, spec.fs, spec.l_out);
        REQUIRE(p.target.size() == want.size());
        for (std::size_t j = 0; j < want.size(); ++j) {
            CHECK(p.target[j] == static_cast<float>(want[j]));
        }
    }
}

TEST_CASE("streamed targets are exact slices of the full-stream output") {
    auto clips = synth_clips(3, 2, 4096, 44100.0);
    DatasetSpec spec = small_spec();
    spec.target_mode = TargetMode::streamed;
    EffectWindowSource src(effects::comp4c(), clips, spec);
    src.enable_draw_log(true);
    Rng rng(8);
    for (int i = 0; i < 20; ++i) {
        const WindowPair p = src.sample(rng);
        const DrawRecord rec = src.draw_log().back();
        const auto cv = effects::controls_from_normalized(p.controls, effects::comp4c());
        const auto st = effects::apply_streamed(
            effects::comp4c(), std::vector<double>(clips[rec.clip].begin(), clips[rec.clip].end()), cv,
            spec.fs);
        for (std::size_t j = 0; j < spec.l_out; ++j) {
            CHECK(p.target[j] == static_cast<float>(st[rec.start + spec.lookback() + j]));
        }
    }
}

TEST_CASE("fixed-knob streamed mode uses the cache and stays exact") {
    auto clips = synth_clips(4, 1, 8192, 44100.0);
    DatasetSpec spec = small_spec();
    spec.target_mode = TargetMode::streamed;
    spec.knob_sampling = KnobSampling::fixed;
    spec.fixed_controls = {-20.0, 3.0, 0.005, 0.02};
    EffectWindowSource src(effects::comp4c(), clips, spec);
    src.enable_draw_log(true);
    Rng rng(9);
    const auto cv = effects::normalize_controls(spec.fixed_controls, effects::comp4c());
    const auto st = effects::apply_streamed(
        effects::comp4c(), std::vector<double>(clips[0].begin(), clips[0].end()), cv, spec.fs);
    for (int i = 0; i < 10; ++i) {
        const WindowPair p = src.sample(rng);
        const auto start = src.draw_log().back().start;
        for (std::size_t j = 0; j < spec.l_out; ++j) {
            CHECK(p.target[j] == static_cast<float>(st[start + spec.lookback() + j]));
        }
    }
}

TEST_CASE("batches are maximally shuffled: independent controls per pair") {
    auto clips = synth_clips(5, 2, 4096, 44100.0);
    EffectWindowSource src(effects::comp4c(), clips, small_spec());
    Rng rng(10);
    const auto batch = make_batch(src, 200, rng);
    REQUIRE(batch.size() == 200);
    std::map<std::vector<double>, int> distinct;
    for (const auto& p : batch) distinct[p.controls]++;
    CHECK(distinct.size() == 200);  // continuous draws collide with probability ~0

    // consecutive-pair control correlation is near zero
    double num = 0, da = 0, db = 0;
    for (std::size_t i = 0; i + 1 < batch.size(); ++i) {
        for (std::size_t k = 0; k < 4; ++k) {
            num += batch[i].controls[k] * batch[i + 1].controls[k];
            da += batch[i].controls[k] * batch[i].controls[k];
            db += batch[i + 1].controls[k] * batch[i + 1].controls[k];
        }
    }
    CHECK(std::abs(num / std::sqrt(da * db)) < 0.15);

    // every emitted control is inside the normalized band
    for (const auto& p : batch) {
        for (double c : p.controls) CHECK((c >= -0.5 && c <= 0.5));
    }
}

TEST_CASE("sequential fixed-knob batches share controls and tile locations") {
    auto clips = synth_clips(6, 1, 8192, 44100.0);
    EffectWindowSource src(effects::comp4c(), clips, small_spec());
    src.enable_draw_log(true);
    Rng rng(11);
    const auto batch = src.sample_sequential_fixed(rng, 8);
    REQUIRE(batch.size() == 8);
    for (const auto& p : batch) CHECK(p.controls == batch[0].controls);
    const auto& log = src.draw_log();
    for (std::size_t i = 1; i < log.size(); ++i) {
        CHECK(log[i].start == log[i - 1].start + 128);
        CHECK(log[i].clip == log[0].clip);
    }
}

TEST_CASE("grid sampling hits every cell at the expected rate") {
    // 2 knobs x 4 points = 16 cells on the gain-like toy: use comp4c with
    // grid 3 over its 4 knobs = 81 cells, 40500 draws, expect 500 per cell
    auto clips = synth_clips(7, 1, 2048, 44100.0);
    DatasetSpec spec = small_spec();
    spec.knob_sampling = KnobSampling::grid;
    spec.grid_points = 3;
    EffectWindowSource src(effects::comp4c(), clips, spec);
    Rng rng(12);
    std::map<std::vector<double>, std::size_t> counts;
    const std::size_t draws = 40500;
    for (std::size_t i = 0; i < draws; ++i) counts[src.draw_controls(rng).raw]++;
    // 81 cells; each expected draws/81 = 500 +- 5 sigma (sigma ~ sqrt(n*p*(1-p)) ~ 22)
    CHECK(counts.size() == 81);
    for (const auto& [cell, n] : counts) {
        CHECK(std::abs(static_cast<double>(n) - 500.0) <= 5.0 * 22.3);
    }
}

TEST_CASE("phase flip is an involution that preserves oracle validity") {
    auto clips = synth_clips(8, 1, 4096, 44100.0);
    EffectWindowSource src(effects::comp4c(), clips, small_spec());
    Rng rng(13);
    const WindowPair p = src.sample(rng);

    const WindowPair once = phase_flip(p);
    CHECK(once.controls == p.controls);  // controls untouched
    const WindowPair twice = phase_flip(once);
    CHECK(twice.input == p.input);
    CHECK(twice.target == p.target);

    // a flipped pair is still an input/output pair of the oracle
    const auto cv = effects::controls_from_normalized(p.controls, effects::comp4c());
    const auto want = effects::apply_windowed(
        effects::comp4c(), std::vector<double>(once.input.begin(), once.input.end()), cv, 44100.0, 128);
    for (std::size_t j = 0; j < want.size(); ++j) {
        CHECK(once.target[j] == doctest::Approx(static_cast<float>(want[j])).epsilon(1e-6));
    }

    // with the rng in the loop both branches appear
    bool flipped = false, kept = false;
    for (int i = 0; i < 64; ++i) {
        const WindowPair q = phase_flip_augment(p, rng);
        if (q.input == p.input) kept = true;
        else flipped = true;
    }
    CHECK(flipped);
    CHECK(kept);
}

TEST_CASE("knob grids") {
    const auto g10 = knob_grid(effects::comp4c(), 10);
    CHECK(g10.size() == 10000);
    // endpoints included, spacing equal in raw units
    CHECK(g10.front().raw == std::vector<double>{-30.0, 1.0, 0.001, 0.001});
    CHECK(g10.back().raw == std::vector<double>{0.0, 5.0, 0.040, 0.040});

    const auto corners = knob_grid(effects::comp4c(), 2);
    CHECK(corners.size() == 16);

    const auto la = knob_grid(effects::la2a(), {21, 2});
    CHECK(la.size() == 42);
    CHECK(la[0].raw == std::vector<double>{0.0, 0.0});
    CHECK(la[1].raw == std::vector<double>{0.0, 1.0});
    CHECK(la[2].raw[0] == doctest::Approx(5.0));
    CHECK(la.back().raw == std::vector<double>{100.0, 1.0});

    CHECK_THROWS_AS(knob_grid(effects::comp4c(), 1), Error);
}

TEST_CASE("lookback error curve: degenerate zero, monotone decay, release scaling") {
    Rng rng(14);
    const double fs = 44100.0;
    std::vector<float> signal;
    {
        Rng srng(15);
        for (int i = 0; i < 30; ++i) {
            auto clip = forge::gen_signal(forge::random_synth_spec(srng, 8192, fs), srng.next_u64());
            signal.insert(signal.end(), clip.begin(), clip.end());
        }
    }
    const std::size_t l_out = 2048;

    SUBCASE("lookback covering the whole stream gives zero error") {
        std::vector<float> short_sig(signal.begin(), signal.begin() + 8192);
        const auto cv = effects::normalize_controls({-25.0, 4.0, 0.002, 0.01}, effects::comp4c());
        const auto curve = lookback_error_curve(effects::comp4c(), cv, short_sig, fs,
                                                {short_sig.size() - l_out}, l_out);
        CHECK(curve[0].mae == 0.0);
    }

    SUBCASE("curve is monotone non-increasing and slower for longer release") {
        const std::vector<std::size_t> lookbacks = {0, 128, 256, 512, 1024, 2048, 4096};
        const auto cv_fast = effects::normalize_controls({-25.0, 4.0, 0.002, 0.01}, effects::comp4c());
        const auto cv_slow = effects::normalize_controls({-25.0, 4.0, 0.002, 0.04}, effects::comp4c());
        const auto fast = lookback_error_curve(effects::comp4c(), cv_fast, signal, fs, lookbacks, l_out);
        const auto slow = lookback_error_curve(effects::comp4c(), cv_slow, signal, fs, lookbacks, l_out);
        for (std::size_t i = 1; i < fast.size(); ++i) {
            CHECK(fast[i].mae <= fast[i - 1].mae);
            CHECK(slow[i].mae <= slow[i - 1].mae);
        }
        const auto kf = fit_exponential(fast).k;
        const auto ks = fit_exponential(slow).k;
        CHECK(ks < kf);  // longer release decays slower in lookback
    }
}

TEST_CASE("capture filename convention round trip") {
    const auto cv = effects::normalize_controls({35.0, 1.0}, effects::la2a());
    const auto name = capture_filename("drums_take3", cv, effects::la2a());
    CHECK(name == "drums_take3__peak_reduction=35__comp_lim=1.wav");
    const auto parsed = parse_capture_controls("/some/dir/" + name, effects::la2a());
    CHECK(parsed.raw == cv.raw);

    CHECK_THROWS_AS(parse_capture_controls("x__peak_reduction=35.wav", effects::la2a()), Error);
    CHECK_THROWS_AS(parse_capture_controls("x__bogus=1__peak_reduction=3__comp_lim=0.wav", effects::la2a()),
                    Error);
}

TEST_CASE("alignment offset recovery by cross-correlation") {
    Rng rng(16);
    std::vector<float> in(6000);
    for (auto& v : in) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    const std::ptrdiff_t true_offset = 37;
    std::vector<float> out(6000, 0.0f);
    for (std::size_t i = 0; i + true_offset < out.size(); ++i) {
        out[i + true_offset] = 0.8f * in[i];
    }
    CHECK(estimate_alignment_offset(in, out, 100) == true_offset);
}
