#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fxlearn/forge.hpp"
#include "fxlearn/wav.hpp"

using namespace fxl;
namespace fs = std::filesystem;

namespace {

std::string binary() {
    const char* env = std::getenv("FXLEARN_BIN");
    REQUIRE_MESSAGE(env != nullptr, "FXLEARN_BIN must point at the cli binary");
    return env;
}

struct RunResult {
    int code;
    std::string out;
};

RunResult run(const std::string& args) {
    const std::string cmd = binary() + " " + args + " > /tmp/fxl_cli_out.txt 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in("/tmp/fxl_cli_out.txt");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return {WEXITSTATUS(status), text};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("apply is bitwise reproducible and errors are machine-parseable") {
    TempDir dir("fxl_cli_apply");
    // an input with real transients
    Rng rng(1);
    std::vector<float> x;
    for (int i = 0; i < 6; ++i) {
        auto clip = forge::gen_signal(forge::random_synth_spec(rng, 8192, 44100.0), rng.next_u64());
        x.insert(x.end(), clip.begin(), clip.end());
    }
    const auto in_path = dir.path / "in.wav";
    write_wav(in_path.string(), x, 44100, WavFormat::float32);

    const std::string flags = "apply --effect comp4c --threshold -30 --ratio 3 --attack 0.01 --release 0.01 ";
    const auto r1 = run(flags + in_path.string() + " " + (dir.path / "out1.wav").string());
    const auto r2 = run(flags + in_path.string() + " " + (dir.path / "out2.wav").string());
    CHECK(r1.code == 0);
    CHECK(r2.code == 0);
    CHECK(slurp(dir.path / "out1.wav") == slurp(dir.path / "out2.wav"));

    // windowed tiling mode also runs
    const auto r3 = run("apply --mode wt --l-in 2048 --l-out 512 --threshold -20 --ratio 4 " +
                        in_path.string() + " " + (dir.path / "out3.wav").string());
    CHECK(r3.code == 0);
    const WavData wt = read_wav((dir.path / "out3.wav").string());
    CHECK(wt.samples.size() == x.size());

    // bad knob value: data error category on stderr, exit 3
    const auto bad = run("apply --threshold -99 " + in_path.string() + " " + (dir.path / "bad.wav").string());
    CHECK(bad.code == 3);
    CHECK(bad.out.find("error: data:") != std::string::npos);

    // missing file: io error
    const auto missing = run("apply /nonexistent.wav " + (dir.path / "x.wav").string());
    CHECK(missing.code == 4);
    CHECK(missing.out.find("error: io:") != std::string::npos);
}

TEST_CASE("lookback subcommand emits a non-increasing curve") {
    TempDir dir("fxl_cli_lookback");
    const auto csv = dir.path / "curve.csv";
    const auto r = run("lookback --release 0.01 --l-out 1024 --lookbacks 0,256,1024,4096 --seconds 6 --out " +
                       csv.string());
    CHECK(r.code == 0);
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "lookback,mae");
    double prev = 1e18;
    int rows = 0;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        const double mae = std::stod(line.substr(comma + 1));
        CHECK(mae <= prev);
        prev = mae;
        ++rows;
    }
    CHECK(rows == 4);
}

TEST_CASE("synth subcommand writes corpus plus manifest") {
    TempDir dir("fxl_cli_synth");
    const auto out = dir.path / "corpus";
    const auto r = run("synth --count 24 --file-seconds 20 --fs 8000 --seed 3 --out-dir " + out.string());
    CHECK(r.code == 0);
    CHECK(fs::exists(out / "corpus.manifest"));
    const auto files = forge::read_manifest((out / "corpus.manifest").string());
    CHECK(!files.empty());
    for (const auto& f : files) {
        CHECK(fs::exists(f.path));
        CHECK(f.duration_s == doctest::Approx(20.0));
    }
}

TEST_CASE("train with zero epochs writes an initialization checkpoint and exits zero") {
    TempDir dir("fxl_cli_train0");
    const auto cfg_path = dir.path / "run.cfg";
    {
        std::ofstream cfg(cfg_path);
        cfg << "effect = gain\n"
               "l_in = 1792\n"
               "l_out = 512\n"
               "base_width = 8\n"
               "epochs = 0\n"
               "batch_size = 4\n"
               "batches_per_epoch = 2\n"
               "train_seconds = 2\n"
               "val_seconds = 1\n"
               "knob_sampling = fixed\n"
               "fixed_controls = 0.5\n"
               "seed = 9\n";
    }
    const auto r = run("train --config " + cfg_path.string() + " --out-dir " + (dir.path / "runs").string());
    CHECK(r.code == 0);
    // exactly one run dir with resolved config, run record and final checkpoint
    int run_dirs = 0;
    fs::path run_dir;
    for (const auto& e : fs::directory_iterator(dir.path / "runs")) {
        ++run_dirs;
        run_dir = e.path();
    }
    REQUIRE(run_dirs == 1);
    CHECK(fs::exists(run_dir / "resolved.cfg"));
    CHECK(fs::exists(run_dir / "run.csv"));
    CHECK(fs::exists(run_dir / "final.stck"));

    // the resolved config round-trips through the parser
    const std::string resolved = slurp(run_dir / "resolved.cfg");
    CHECK(resolved.find("effect = gain") != std::string::npos);
}

TEST_CASE("unknown config keys are rejected") {
    TempDir dir("fxl_cli_badcfg");
    const auto cfg_path = dir.path / "bad.cfg";
    {
        std::ofstream cfg(cfg_path);
        cfg << "effect = gain\nbogus_key = 1\n";
    }
    const auto r = run("train --config " + cfg_path.string() + " --out-dir " + (dir.path / "runs").string());
    CHECK(r.code == 2);
    CHECK(r.out.find("error: config:") != std::string::npos);
    CHECK(r.out.find("bogus_key") != std::string::npos);
}

TEST_CASE("gridgen emits the full la2a capture worklist") {
    TempDir dir("fxl_cli_grid");
    const auto out = dir.path / "worklist.txt";
    const auto r = run("gridgen --effect la2a --per-knob 21,2 --stem take --out " + out.string());
    CHECK(r.code == 0);
    std::ifstream in(out);
    std::string line;
    int rows = 0;
    bool found_pr35 = false;
    while (std::getline(in, line)) {
        ++rows;
        if (line.find("take__peak_reduction=35__comp_lim=1.wav") != std::string::npos) found_pr35 = true;
    }
    CHECK(rows == 42);
    CHECK(found_pr35);
}

TEST_CASE("diag subcommands produce their artifacts") {
    TempDir dir("fxl_cli_diag");
    const auto step_dir = dir.path / "step";
    const auto r = run("diag-step --l-in 2048 --l-out 512 --thresholds -20 --ar 0.01 --out-dir " +
                       step_dir.string());
    CHECK(r.code == 0);
    CHECK(fs::exists(step_dir / "summary.csv"));

    // spectra over two generated files
    Rng rng(5);
    std::vector<float> a, b;
    for (int i = 0; i < 4; ++i) {
        auto clip = forge::gen_signal(forge::random_synth_spec(rng, 8192, 8000), rng.next_u64());
        a.insert(a.end(), clip.begin(), clip.end());
    }
    b = a;
    for (auto& v : b) v *= 0.5f;
    write_wav((dir.path / "a.wav").string(), a, 8000, WavFormat::float32);
    write_wav((dir.path / "b.wav").string(), b, 8000, WavFormat::float32);
    const auto r2 = run("diag-spectra " + (dir.path / "a.wav").string() + " " +
                        (dir.path / "b.wav").string() + " --out " + (dir.path / "sp.csv").string());
    CHECK(r2.code == 0);
    std::ifstream in(dir.path / "sp.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "freq_hz,db_a,db_b");
}
