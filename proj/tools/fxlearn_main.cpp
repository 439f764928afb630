// Command-line front end: data synthesis, oracle application, lookback
// curves, training, evaluation and diagnostics.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fxlearn/checkpoint.hpp"
#include "fxlearn/dataset.hpp"
#include "fxlearn/diagnostics.hpp"
#include "fxlearn/effects.hpp"
#include "fxlearn/errors.hpp"
#include "fxlearn/forge.hpp"
#include "fxlearn/runconfig.hpp"
#include "fxlearn/trainer.hpp"
#include "fxlearn/wav.hpp"

namespace fs = std::filesystem;
using namespace fxl;

namespace {

const std::set<std::string> kRunConfigKeys = {
    "effect",        "fs",           "l_in",           "l_out",
    "target_mode",   "knob_sampling", "grid_points",   "fixed_controls",
    "phase_flip",    "frame",        "hop",            "base_width",
    "batch_size",    "batches_per_epoch", "epochs",    "lr_max",
    "weight_decay",  "warmup_fraction", "div_factor",  "final_div_factor",
    "seed",          "model_seed",   "val_batches",    "sequential_batches",
    "lambda",        "alpha",        "train_wavs",     "val_wavs",
    "train_seconds", "val_seconds",  "capture_manifest", "capture_align",
};

std::string resolve_data_path(const std::string& path) {
    if (fs::exists(path)) return path;
    if (const char* base = std::getenv("FXLEARN_DATA_DIR")) {
        const fs::path candidate = fs::path(base) / path;
        if (fs::exists(candidate)) return candidate.string();
    }
    return path;
}

std::string timestamp_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm_buf{};
    localtime_r(&t, &tm_buf);
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm_buf);
    return buf;
}

std::vector<std::vector<float>> generated_clips(std::uint64_t seed, double seconds, double fs) {
    Rng rng(seed);
    std::vector<std::vector<float>> clips;
    double have = 0.0;
    while (have < seconds) {
        const auto len = static_cast<std::size_t>(rng.uniform(2.0, 6.0) * fs);
        clips.push_back(forge::gen_signal(forge::random_synth_spec(rng, len, fs), rng.next_u64()));
        have += static_cast<double>(len) / fs;
    }
    return clips;
}

std::vector<std::vector<float>> load_clips(const std::vector<std::string>& paths, double fs) {
    std::vector<std::vector<float>> clips;
    for (const auto& p : paths) {
        WavData w = read_wav(resolve_data_path(p));
        if (static_cast<double>(w.sample_rate) != fs) {
            raise_data("clip " + p + " has fs " + std::to_string(w.sample_rate) + ", config says " +
                       std::to_string(fs));
        }
        clips.push_back(std::move(w.samples));
    }
    return clips;
}

data::DatasetSpec dataset_spec_from(const RunConfig& cfg, const effects::EffectSpec& effect) {
    data::DatasetSpec ds;
    ds.l_in = static_cast<std::size_t>(cfg.get_int("l_in", 4096));
    ds.l_out = static_cast<std::size_t>(cfg.get_int("l_out", 1024));
    ds.fs = cfg.get_double("fs", 44100.0);
    const std::string mode = cfg.get_str("target_mode", "wt");
    if (mode == "st") {
        ds.target_mode = data::TargetMode::streamed;
    } else if (mode == "wt") {
        ds.target_mode = data::TargetMode::windowed;
    } else {
        raise_config("target_mode must be st or wt, got '" + mode + "'");
    }
    const std::string sampling = cfg.get_str("knob_sampling", "uniform");
    if (sampling == "uniform") {
        ds.knob_sampling = data::KnobSampling::uniform;
    } else if (sampling == "grid") {
        ds.knob_sampling = data::KnobSampling::grid;
    } else if (sampling == "fixed") {
        ds.knob_sampling = data::KnobSampling::fixed;
        ds.fixed_controls = cfg.get_double_list("fixed_controls");
    } else {
        raise_config("knob_sampling must be uniform, grid or fixed, got '" + sampling + "'");
    }
    ds.grid_points = static_cast<int>(cfg.get_int("grid_points", 10));
    ds.phase_flip = cfg.get_bool("phase_flip", false);
    ds.validate(effect);
    return ds;
}

model::ModelConfig model_config_from(const RunConfig& cfg, const effects::EffectSpec& effect) {
    model::ModelConfig mc;
    mc.l_in = static_cast<std::size_t>(cfg.get_int("l_in", 4096));
    mc.l_out = static_cast<std::size_t>(cfg.get_int("l_out", 1024));
    mc.frame = static_cast<std::size_t>(cfg.get_int("frame", 1024));
    mc.hop = static_cast<std::size_t>(cfg.get_int("hop", 384));
    mc.base_width = static_cast<std::size_t>(cfg.get_int("base_width", 64));
    mc.n_knobs = effect.knobs.size();
    mc.validate();
    return mc;
}

std::unique_ptr<data::WindowSource> make_source(const RunConfig& cfg, const effects::EffectSpec& effect,
                                                const data::DatasetSpec& ds, bool validation) {
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    if (cfg.has("capture_manifest")) {
        std::ifstream in(resolve_data_path(cfg.get_str("capture_manifest")));
        if (!in) raise_io("cannot open capture manifest: " + cfg.get_str("capture_manifest"));
        std::vector<data::PairedCapture> caps;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            const auto tab = line.find('\t');
            if (tab == std::string::npos) raise_data("capture manifest line needs input<TAB>output: " + line);
            data::PairedCapture cap;
            cap.input_path = resolve_data_path(line.substr(0, tab));
            cap.output_path = resolve_data_path(line.substr(tab + 1));
            cap.controls = data::parse_capture_controls(cap.output_path, effect);
            if (cfg.get_str("capture_align", "none") == "xcorr") {
                WavData wi = read_wav(cap.input_path);
                WavData wo = read_wav(cap.output_path);
                cap.alignment_offset = data::estimate_alignment_offset(
                    wi.samples, wo.samples, static_cast<std::size_t>(0.1 * ds.fs));
            }
            caps.push_back(std::move(cap));
        }
        return std::make_unique<data::PairedCaptureSource>(std::move(caps), effect, ds);
    }
    const char* key_wavs = validation ? "val_wavs" : "train_wavs";
    const char* key_seconds = validation ? "val_seconds" : "train_seconds";
    std::vector<std::vector<float>> clips;
    if (cfg.has(key_wavs)) {
        clips = load_clips(cfg.get_str_list(key_wavs), ds.fs);
    } else {
        const double seconds = cfg.get_double(key_seconds, validation ? 15.0 : 60.0);
        clips = generated_clips(mix_seed(seed, validation ? 0x0a1 : 0x7e1), seconds, ds.fs);
    }
    return std::make_unique<data::EffectWindowSource>(effect, std::move(clips), ds);
}

train::TrainConfig train_config_from(const RunConfig& cfg) {
    train::TrainConfig tc;
    tc.batch_size = static_cast<std::size_t>(cfg.get_int("batch_size", 32));
    tc.batches_per_epoch = static_cast<std::size_t>(cfg.get_int("batches_per_epoch", 100));
    tc.epochs = static_cast<std::size_t>(cfg.get_int("epochs", 1));
    tc.lr_max = cfg.get_double("lr_max", 1e-3);
    tc.weight_decay = cfg.get_double("weight_decay", 0.0);
    tc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
    tc.val_batches = static_cast<std::size_t>(cfg.get_int("val_batches", 4));
    tc.warmup_fraction = cfg.get_double("warmup_fraction", 0.3);
    tc.div_factor = cfg.get_double("div_factor", 25.0);
    tc.final_div_factor = cfg.get_double("final_div_factor", 1e4);
    tc.sequential_batches = cfg.get_bool("sequential_batches", false);
    return tc;
}

train::LossConfig loss_config_from(const RunConfig& cfg) {
    train::LossConfig lc;
    lc.lambda = cfg.get_double("lambda", 2e-5);
    lc.alpha = static_cast<int>(cfg.get_int("alpha", 1));
    lc.validate();
    return lc;
}

effects::ControlVector controls_from_flags(const effects::EffectSpec& effect, double threshold,
                                           double ratio, double attack, double release, double gain_v) {
    if (effect.name == "gain") return effects::normalize_controls({gain_v}, effect);
    return effects::normalize_controls({threshold, ratio, attack, release}, effect);
}

int cmd_synth(const std::string& out_dir, std::size_t count, const std::vector<std::string>& sources,
              double file_seconds, double fs_rate, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::string> resolved;
    for (const auto& s : sources) resolved.push_back(resolve_data_path(s));
    const auto result = forge::assemble_corpus(resolved, count, rng, out_dir, file_seconds, fs_rate);
    forge::write_manifest((fs::path(out_dir) / "corpus.manifest").string(), result.files);
    for (const auto& f : result.files) {
        std::printf("%s\t%.1fs\t%s\n", f.path.c_str(), f.duration_s, f.provenance.c_str());
    }
    std::printf("remainder discarded: %zu samples\n", result.remainder_samples);
    return 0;
}

int cmd_apply(const std::string& effect_name, const std::string& mode, double threshold, double ratio,
              double attack, double release, double gain_v, std::size_t l_in, std::size_t l_out,
              bool pcm16, const std::string& in_path, const std::string& out_path) {
    const auto& effect = effects::find_effect(effect_name);
    WavData w = read_wav(resolve_data_path(in_path));
    const auto cv = controls_from_flags(effect, threshold, ratio, attack, release, gain_v);
    const double fsr = w.sample_rate;
    std::vector<double> x(w.samples.begin(), w.samples.end());
    std::vector<double> y;
    if (mode == "st") {
        y = effects::apply_streamed(effect, x, cv, fsr);
    } else if (mode == "wt") {
        if (l_out == 0 || l_out > l_in) raise_config("wt mode needs 0 < l_out <= l_in");
        y.reserve(x.size());
        for (std::size_t s = 0; s < x.size(); s += l_out) {
            const std::size_t end = std::min(s + l_out, x.size());
            const std::size_t begin = end >= l_in ? end - l_in : 0;
            const std::vector<double> window(x.begin() + static_cast<std::ptrdiff_t>(begin),
                                             x.begin() + static_cast<std::ptrdiff_t>(end));
            const auto tile = effects::apply_windowed(effect, window, cv, fsr, end - s);
            y.insert(y.end(), tile.begin(), tile.end());
        }
    } else {
        raise_config("mode must be st or wt, got '" + mode + "'");
    }
    std::vector<float> out(y.begin(), y.end());
    write_wav(out_path, out, w.sample_rate, pcm16 ? WavFormat::pcm16 : WavFormat::float32);
    return 0;
}

int cmd_lookback(const std::string& effect_name, double threshold, double ratio, double attack,
                 double release, double gain_v, std::size_t l_out, const std::string& lookbacks_str,
                 double seconds, double fsr, std::uint64_t seed, const std::string& out_csv) {
    const auto& effect = effects::find_effect(effect_name);
    const auto cv = controls_from_flags(effect, threshold, ratio, attack, release, gain_v);
    std::vector<std::size_t> lookbacks;
    std::stringstream ss(lookbacks_str);
    std::string tok;
    while (std::getline(ss, tok, ',')) lookbacks.push_back(std::stoul(tok));

    std::vector<float> signal;
    for (const auto& clip : generated_clips(seed, seconds, fsr)) {
        signal.insert(signal.end(), clip.begin(), clip.end());
    }
    const auto curve = data::lookback_error_curve(effect, cv, signal, fsr, lookbacks, l_out);
    data::write_lookback_csv(out_csv, curve);
    for (const auto& p : curve) std::printf("%zu,%.6e\n", p.lookback, p.mae);
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_base) {
    RunConfig cfg = RunConfig::from_file(config_path, kRunConfigKeys);
    const auto& effect = effects::find_effect(cfg.get_str("effect", "comp4c"));
    const auto ds = dataset_spec_from(cfg, effect);
    const auto mc = model_config_from(cfg, effect);
    const auto tc = train_config_from(cfg);
    const auto lc = loss_config_from(cfg);

    const std::uint64_t model_seed =
        static_cast<std::uint64_t>(cfg.get_int("model_seed", cfg.get_int("seed", 0)));
    model::Model m(mc, model_seed);

    auto train_src = make_source(cfg, effect, ds, false);
    auto val_src = make_source(cfg, effect, ds, true);

    const fs::path run_dir = fs::path(out_base) / ("run_" + timestamp_now() + "_" +
                                                   std::to_string(tc.seed));
    fs::create_directories(run_dir);
    cfg.write((run_dir / "resolved.cfg").string());

    const auto result = train::train(m, *train_src, *val_src, tc, lc, run_dir.string());
    train::write_run_record_csv((run_dir / "run.csv").string(), result.record);
    std::printf("run dir: %s\n", run_dir.string().c_str());
    if (!result.record.epochs.empty()) {
        std::printf("best val loss %.6e at epoch %zu\n", result.best_val_loss, result.best_epoch);
    } else {
        std::printf("no epochs requested; wrote initialization checkpoint\n");
    }
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint, std::size_t n_batches,
             std::uint64_t seed) {
    RunConfig cfg = RunConfig::from_file(config_path, kRunConfigKeys);
    const auto& effect = effects::find_effect(cfg.get_str("effect", "comp4c"));
    const auto ds = dataset_spec_from(cfg, effect);
    const auto mc = model_config_from(cfg, effect);
    model::Model m(mc, 0);
    records_to_params(read_checkpoint(checkpoint), m.params());
    auto src = make_source(cfg, effect, ds, true);
    const auto lc = loss_config_from(cfg);
    const auto r = train::evaluate(m, *src, n_batches,
                                   static_cast<std::size_t>(cfg.get_int("batch_size", 32)), lc, seed);
    std::printf("loss=%.6e mae=%.6e\n", r.mean_loss, r.mae);
    return 0;
}

int cmd_diag_step(const std::string& out_dir, const std::string& config_path,
                  const std::string& checkpoint, const std::string& thresholds,
                  const std::string& ar_values, double ratio, std::size_t l_in, std::size_t l_out,
                  double fsr) {
    diag::StepDiagConfig dc;
    dc.l_in = l_in;
    dc.l_out = l_out;
    dc.fs = fsr;
    dc.ratio = ratio;
    auto parse_list = [](const std::string& s) {
        std::vector<double> v;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
        return v;
    };
    if (!thresholds.empty()) dc.thresholds_db = parse_list(thresholds);
    if (!ar_values.empty()) dc.attack_release_s = parse_list(ar_values);

    diag::Predictor predictor;
    std::unique_ptr<model::Model> m;
    if (!checkpoint.empty()) {
        if (config_path.empty()) raise_config("diag-step with a checkpoint needs --config for the geometry");
        RunConfig cfg = RunConfig::from_file(config_path, kRunConfigKeys);
        const auto& effect = effects::find_effect(cfg.get_str("effect", "comp4c"));
        const auto mc = model_config_from(cfg, effect);
        dc.l_in = mc.l_in;
        dc.l_out = mc.l_out;
        m = std::make_unique<model::Model>(mc, 0);
        records_to_params(read_checkpoint(checkpoint), m->params());
        predictor = diag::model_predictor(*m);
    } else {
        predictor = diag::oracle_predictor(effects::comp4c(), dc.fs, dc.l_out);
    }

    fs::create_directories(out_dir);
    const auto cells = diag::step_response_diag(predictor, dc);
    std::ofstream summary(fs::path(out_dir) / "summary.csv");
    summary << "threshold_db,attack_release_s,max_diff_near_steps,max_diff_elsewhere\n";
    for (const auto& c : cells) {
        char name[96];
        std::snprintf(name, sizeof(name), "step_T%+.0f_AR%.3f.csv", c.threshold_db, c.attack_release_s);
        diag::write_step_cell_csv((fs::path(out_dir) / name).string(), c);
        char row[160];
        std::snprintf(row, sizeof(row), "%.1f,%.3f,%.6e,%.6e\n", c.threshold_db, c.attack_release_s,
                      c.max_abs_diff_near_steps, c.max_abs_diff_elsewhere);
        summary << row;
    }
    std::printf("wrote %zu step-response cells to %s\n", cells.size(), out_dir.c_str());
    return 0;
}

int cmd_diag_spectra(const std::string& a_path, const std::string& b_path, const std::string& out_csv,
                     std::size_t segment) {
    WavData a = read_wav(resolve_data_path(a_path));
    WavData b = read_wav(resolve_data_path(b_path));
    if (a.sample_rate != b.sample_rate) raise_data("spectra inputs have different sample rates");
    const auto sp = diag::spectra_diag(a.samples, b.samples, a.sample_rate, segment);
    diag::write_spectra_csv(out_csv, sp);
    std::printf("wrote %zu bins to %s\n", sp.freq_hz.size(), out_csv.c_str());
    return 0;
}

int cmd_gridgen(const std::string& effect_name, const std::string& per_knob_str, const std::string& stem,
                const std::string& out_path) {
    const auto& effect = effects::find_effect(effect_name);
    std::vector<int> per_knob;
    std::stringstream ss(per_knob_str);
    std::string tok;
    while (std::getline(ss, tok, ',')) per_knob.push_back(std::stoi(tok));
    const auto grid = per_knob.size() == 1 ? data::knob_grid(effect, per_knob[0])
                                           : data::knob_grid(effect, per_knob);
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) raise_io("cannot write worklist: " + out_path);
    for (const auto& cv : grid) {
        out << data::capture_filename(stem, cv, effect);
        for (std::size_t k = 0; k < cv.raw.size(); ++k) {
            out << '\t' << effect.knobs[k].name << '=' << cv.raw[k];
        }
        out << '\n';
    }
    std::printf("wrote %zu capture settings to %s\n", grid.size(), out_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fxlearn: profile parameterized audio effects with a conditioned network"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "emit a synthetic capture corpus");
    std::string synth_out = "corpus";
    std::size_t synth_count = 64;
    std::vector<std::string> synth_sources;
    double synth_file_seconds = 900.0;
    double synth_fs = 44100.0;
    std::uint64_t synth_seed = 0;
    synth->add_option("--out-dir", synth_out);
    synth->add_option("--count", synth_count, "number of synthesized sounds");
    synth->add_option("--sources", synth_sources, "wav recordings to mix in")->delimiter(',');
    synth->add_option("--file-seconds", synth_file_seconds);
    synth->add_option("--fs", synth_fs);
    synth->add_option("--seed", synth_seed);

    auto* apply = app.add_subcommand("apply", "run an oracle effect over a wav file");
    std::string apply_effect = "comp4c", apply_mode = "st", apply_in, apply_out;
    double a_threshold = -20.0, a_ratio = 2.0, a_attack = 0.01, a_release = 0.01, a_gain = 0.5;
    std::size_t apply_l_in = 16384, apply_l_out = 4096;
    bool apply_pcm16 = false;
    apply->add_option("--effect", apply_effect);
    apply->add_option("--mode", apply_mode, "st (streamed) or wt (windowed tiling)");
    apply->add_option("--threshold", a_threshold, "dB");
    apply->add_option("--ratio", a_ratio);
    apply->add_option("--attack", a_attack, "seconds");
    apply->add_option("--release", a_release, "seconds");
    apply->add_option("--gain", a_gain, "for the gain effect");
    apply->add_option("--l-in", apply_l_in, "wt window length");
    apply->add_option("--l-out", apply_l_out, "wt output tile length");
    apply->add_flag("--pcm16", apply_pcm16, "write 16-bit pcm instead of float32");
    apply->add_option("input", apply_in)->required();
    apply->add_option("output", apply_out)->required();

    auto* lookback = app.add_subcommand("lookback", "emit the windowed-vs-streamed error curve");
    std::string lb_effect = "comp4c", lb_lookbacks = "0,256,512,1024,2048,4096,8192,16384";
    std::string lb_out = "lookback.csv";
    double lb_threshold = -25.0, lb_ratio = 4.0, lb_attack = 0.002, lb_release = 0.04, lb_gain = 0.5;
    std::size_t lb_l_out = 8192;
    double lb_seconds = 60.0, lb_fs = 44100.0;
    std::uint64_t lb_seed = 0;
    lookback->add_option("--effect", lb_effect);
    lookback->add_option("--threshold", lb_threshold);
    lookback->add_option("--ratio", lb_ratio);
    lookback->add_option("--attack", lb_attack);
    lookback->add_option("--release", lb_release);
    lookback->add_option("--gain", lb_gain);
    lookback->add_option("--l-out", lb_l_out);
    lookback->add_option("--lookbacks", lb_lookbacks);
    lookback->add_option("--seconds", lb_seconds, "audio per curve point");
    lookback->add_option("--fs", lb_fs);
    lookback->add_option("--seed", lb_seed);
    lookback->add_option("--out", lb_out);

    auto* train_cmd = app.add_subcommand("train", "train a model from a run config");
    std::string train_config, train_out = "runs";
    train_cmd->add_option("--config", train_config)->required();
    train_cmd->add_option("--out-dir", train_out);

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on validation windows");
    std::string eval_config, eval_ckpt;
    std::size_t eval_batches = 8;
    std::uint64_t eval_seed = 1;
    eval_cmd->add_option("--config", eval_config)->required();
    eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
    eval_cmd->add_option("--n-batches", eval_batches);
    eval_cmd->add_option("--seed", eval_seed);

    auto* dstep = app.add_subcommand("diag-step", "step-response grid against the oracle");
    std::string ds_out = "diag_step", ds_config, ds_ckpt, ds_thresholds, ds_ar;
    double ds_ratio = 3.0, ds_fs = 44100.0;
    std::size_t ds_l_in = 4096, ds_l_out = 1024;
    dstep->add_option("--out-dir", ds_out);
    dstep->add_option("--config", ds_config);
    dstep->add_option("--checkpoint", ds_ckpt, "model checkpoint; omit for oracle-only");
    dstep->add_option("--thresholds", ds_thresholds, "comma list, dB");
    dstep->add_option("--ar", ds_ar, "comma list of attack=release values, seconds");
    dstep->add_option("--ratio", ds_ratio);
    dstep->add_option("--l-in", ds_l_in);
    dstep->add_option("--l-out", ds_l_out);
    dstep->add_option("--fs", ds_fs);

    auto* dspec = app.add_subcommand("diag-spectra", "compare power spectra of two wav files");
    std::string sp_a, sp_b, sp_out = "spectra.csv";
    std::size_t sp_segment = 4096;
    dspec->add_option("a", sp_a)->required();
    dspec->add_option("b", sp_b)->required();
    dspec->add_option("--out", sp_out);
    dspec->add_option("--segment", sp_segment);

    auto* grid = app.add_subcommand("gridgen", "emit a capture worklist over a knob grid");
    std::string gg_effect = "la2a", gg_per_knob = "21,2", gg_stem = "capture", gg_out = "worklist.txt";
    grid->add_option("--effect", gg_effect);
    grid->add_option("--per-knob", gg_per_knob, "settings per knob, comma list (single value = all knobs)");
    grid->add_option("--stem", gg_stem);
    grid->add_option("--out", gg_out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            return cmd_synth(synth_out, synth_count, synth_sources, synth_file_seconds, synth_fs, synth_seed);
        }
        if (apply->parsed()) {
            return cmd_apply(apply_effect, apply_mode, a_threshold, a_ratio, a_attack, a_release, a_gain,
                             apply_l_in, apply_l_out, apply_pcm16, apply_in, apply_out);
        }
        if (lookback->parsed()) {
            return cmd_lookback(lb_effect, lb_threshold, lb_ratio, lb_attack, lb_release, lb_gain, lb_l_out,
                                lb_lookbacks, lb_seconds, lb_fs, lb_seed, lb_out);
        }
        if (train_cmd->parsed()) return cmd_train(train_config, train_out);
        if (eval_cmd->parsed()) return cmd_eval(eval_config, eval_ckpt, eval_batches, eval_seed);
        if (dstep->parsed()) {
            return cmd_diag_step(ds_out, ds_config, ds_ckpt, ds_thresholds, ds_ar, ds_ratio, ds_l_in,
                                 ds_l_out, ds_fs);
        }
        if (dspec->parsed()) return cmd_diag_spectra(sp_a, sp_b, sp_out, sp_segment);
        if (grid->parsed()) return cmd_gridgen(gg_effect, gg_per_knob, gg_stem, gg_out);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s: %s\n", category_name(e.category()), e.what());
        switch (e.category()) {
            case ErrorCategory::config: return 2;
            case ErrorCategory::data: return 3;
            case ErrorCategory::io: return 4;
            case ErrorCategory::shape: return 5;
            case ErrorCategory::numeric: return 6;
        }
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return 1;
    }
    return 0;
}
