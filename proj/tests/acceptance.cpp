// Acceptance suite. Runs every exit criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. `mm_acceptance <name>` runs a
// single criterion; names are listed by `mm_acceptance --list`.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mm/data_model.hpp"
#include "mm/embedder.hpp"
#include "mm/evaluation.hpp"
#include "mm/graph_builder.hpp"
#include "mm/metric_core.hpp"
#include "mm/selftest.hpp"
#include "mm/trainer.hpp"
#include "test_support.hpp"

#ifndef MM_CLI_PATH
#error "MM_CLI_PATH must point at the mm_cli binary"
#endif

using namespace mm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<std::uint64_t> seeds(std::uint64_t first, int count) {
    std::vector<std::uint64_t> s;
    for (int i = 0; i < count; ++i) s.push_back(first + static_cast<std::uint64_t>(i));
    return s;
}

const ArmSummary& arm(const ExperimentResult& r, const std::string& name) {
    for (const auto& s : r.summary)
        if (s.arm == name) return s;
    throw std::runtime_error("missing arm " + name);
}

// --- criteria -----------------------------------------------------------------

// 500 fuzzed batches, 2-10 classes, 10-400 nodes; < 30 s.
Outcome graph_invariants() {
    const auto t0 = Clock::now();
    const auto stats = fuzz_graph_invariants(500, 2024);
    const double secs = seconds_since(t0);
    return {stats.batches == 500 && stats.failures == 0 && secs < 30.0,
            fmt("%d batches, %d failures%s%s, %.2f s (limit 30 s)", stats.batches, stats.failures,
                stats.failures ? ", first: " : "", stats.first_failure.c_str(), secs)};
}

// Range [0,4], symmetry, identity, positive-scale invariance on 10,000 pairs.
Outcome metric_properties() {
    Rng rng(77);
    int violations = 0;
    constexpr double tol = 1e-12;
    for (int i = 0; i < 10000; ++i) {
        const std::size_t d = static_cast<std::size_t>(rng.between(1, 64));
        std::vector<double> x(d), y(d);
        for (double& v : x) v = rng.normal() * std::exp(rng.uniform(-4, 4));
        for (double& v : y) v = rng.normal() * std::exp(rng.uniform(-4, 4));
        const double D = perceptual_distance(x, y);
        if (!(D >= 0.0 && D <= 4.0 + tol)) ++violations;
        if (std::abs(D - perceptual_distance(y, x)) > tol) ++violations;
        if (std::abs(perceptual_distance(x, x)) > tol) ++violations;
        const double c = std::exp(rng.uniform(-10, 10));
        auto cx = x;
        for (double& v : cx) v *= c;
        if (std::abs(perceptual_distance(cx, y) - D) > 1e-9) ++violations;
    }
    return {violations == 0, fmt("10000 pairs, %d violations", violations)};
}

// Embedding-level and end-to-end two-layer gradients vs central differences,
// h = 1e-6, relative error < 1e-5 on 100 instances each; < 60 s.
Outcome gradient_oracle() {
    const auto t0 = Clock::now();
    const auto emb = check_embedding_gradients(100, 5150, 1e-6);
    const auto e2e = check_end_to_end_gradients(100, 5151, 1e-6);
    const double secs = seconds_since(t0);
    const bool ok = emb.checked == 100 && e2e.checked == 100 && emb.max_relative_error < kGradientTolerance &&
                    e2e.max_relative_error < kGradientTolerance && secs < 60.0;
    return {ok, fmt("embedding max rel err %.2e (%d near kink skipped), end-to-end max rel err %.2e "
                    "(%d skipped), %.1f s (limit 60 s)",
                    emb.max_relative_error, emb.skipped_near_kink, e2e.max_relative_error,
                    e2e.skipped_near_kink, secs)};
}

// 5-class synthetic data, 10 paired seeds, default configuration.
Outcome strategy_comparison() {
    const auto images = make_synthetic(32, 5, 64, 64, 1);
    RunConfig cfg;
    const auto t0 = Clock::now();
    const auto result = compare_strategies(images, cfg, seeds(100, 10));
    const double secs = seconds_since(t0);
    const auto& g = arm(result, "graph");
    const auto& r = arm(result, "random");
    std::vector<double> sat_g, sat_r;
    for (const auto& row : result.rows)
        (row.arm == "graph" ? sat_g : sat_r).push_back(row.report.triplet_satisfaction);
    const double med_g = median(sat_g), med_r = median(sat_r);
    std::vector<double> knn_g, knn_r;
    for (const auto& row : result.rows)
        (row.arm == "graph" ? knn_g : knn_r).push_back(row.report.knn_accuracy);
    int wins = 0, ties = 0;
    for (std::size_t i = 0; i < std::min(knn_g.size(), knn_r.size()); ++i) {
        wins += knn_g[i] > knn_r[i];
        ties += knn_g[i] == knn_r[i];
    }
    const bool ok = result.failures.empty() && g.runs == 10 && r.runs == 10 &&
                    g.mean.knn_accuracy >= r.mean.knn_accuracy && med_g >= med_r && secs < 600.0;
    return {ok, fmt("mean 1-NN graph %.4f vs random %.4f; median satisfaction graph %.4f vs random %.4f; "
                    "per-seed 1-NN graph wins %d, ties %d of %zu; %.0f s (limit 600 s)",
                    g.mean.knn_accuracy, r.mean.knn_accuracy, med_g, med_r, wins, ties, knn_g.size(), secs)};
}

// Node targets 100/200/400 over 10 seeds.
Outcome graph_size_trend() {
    const auto images = make_synthetic(48, 5, 64, 64, 2);
    RunConfig cfg;
    cfg.patch_resize = 16;
    const std::vector<int> targets{100, 200, 400};
    const auto result = sweep_graph_size(images, cfg, targets, seeds(200, 10));
    const auto& n100 = arm(result, "n100");
    const auto& n200 = arm(result, "n200");
    const auto& n400 = arm(result, "n400");
    const double pooled = std::sqrt(0.5 * (n100.stddev.knn_accuracy * n100.stddev.knn_accuracy +
                                           n400.stddev.knn_accuracy * n400.stddev.knn_accuracy));
    const bool acc_ok = n400.mean.knn_accuracy >= n100.mean.knn_accuracy - pooled;
    const bool time_ok = n100.ms_per_iter < n200.ms_per_iter && n200.ms_per_iter < n400.ms_per_iter;
    return {result.failures.empty() && acc_ok && time_ok,
            fmt("1-NN 100/200/400 nodes: %.4f / %.4f / %.4f (pooled sd %.4f); ms/iter %.2f / %.2f / %.2f",
                n100.mean.knn_accuracy, n200.mean.knn_accuracy, n400.mean.knn_accuracy, pooled,
                n100.ms_per_iter, n200.ms_per_iter, n400.ms_per_iter)};
}

// Two-layer embedder on separable data: median satisfaction >= 0.9 after
// 400 iterations, untrained <= 0.6.
Outcome training_effectiveness() {
    const auto images = make_synthetic(32, 3, 64, 64, 3);
    std::vector<double> trained, untrained;
    for (std::uint64_t seed = 300; seed < 310; ++seed) {
        RunConfig cfg;
        cfg.seed = seed;
        cfg.patch_scale_range = {0.1, 0.25};
        cfg.iterations = 400;
        const Embedder init = initial_embedder(images, cfg);
        untrained.push_back(evaluate(init, images, cfg, seed).triplet_satisfaction);
        const TrainState state = tune(images, cfg, Strategy::Graph);
        trained.push_back(evaluate(state.embedder, images, cfg, seed).triplet_satisfaction);
    }
    const double med_t = median(trained), med_u = median(untrained);
    return {med_t >= 0.9 && med_u <= 0.6,
            fmt("median satisfaction trained %.4f (>= 0.9), untrained %.4f (<= 0.6); trained min %.4f max %.4f",
                med_t, med_u, *std::min_element(trained.begin(), trained.end()),
                *std::max_element(trained.begin(), trained.end()))};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(MM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Every line minus its last (timing) field.
std::string without_timing(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        const auto comma = line.rfind(',');
        out << (comma == std::string::npos ? line : line.substr(0, comma)) << '\n';
    }
    return out.str();
}

// tune/compare/sweep twice with identical seeds.
Outcome determinism() {
    mm::test::TempDir dir("accept_det");
    const auto data = dir.path() / "data";
    if (run_cli("synth --images 8 --classes 4 --size 48 --out " + data.string() + " --seed 5") != 0)
        return {false, "synth failed"};
    const std::string small = " --patch-resize 8 --embed-dim 8 --hidden-dim 32 --iterations 12";
    std::vector<std::string> problems;
    for (int run = 0; run < 2; ++run) {
        const auto out = dir.path() / ("run" + std::to_string(run));
        fs::create_directories(out);
        const std::string d = " --data " + data.string();
        if (run_cli("tune" + d + " --seed 9 --out " + (out / "m.ckpt").string() + small) != 0 ||
            run_cli("compare" + d + " --seed 9 --seeds 2 --out " + (out / "c.csv").string() + small) != 0 ||
            run_cli("sweep" + d + " --seed 9 --seeds 2 --nodes 20,40 --out " + (out / "s.csv").string() + small) != 0)
            return {false, "cli run failed"};
    }
    const auto a = dir.path() / "run0", b = dir.path() / "run1";
    if (slurp(a / "m.ckpt") != slurp(b / "m.ckpt") || slurp(a / "m.ckpt").empty())
        problems.push_back("checkpoint");
    if (without_timing(slurp(a / "m.ckpt.history.csv")) != without_timing(slurp(b / "m.ckpt.history.csv")))
        problems.push_back("history");
    if (without_timing(slurp(a / "c.csv")) != without_timing(slurp(b / "c.csv"))) problems.push_back("compare csv");
    if (without_timing(slurp(a / "s.csv")) != without_timing(slurp(b / "s.csv"))) problems.push_back("sweep csv");
    std::string detail = "checkpoint bytes, history, compare and sweep CSVs (timing column excluded)";
    for (const auto& p : problems) detail += "; differs: " + p;
    return {problems.empty(), detail};
}

// Dataset write/load and checkpoint save/load.
Outcome format_round_trips() {
    mm::test::TempDir dir("accept_fmt");
    std::vector<std::string> problems;

    auto images = make_synthetic(5, 6, 40, 56, 8);
    images[2].labels[17] = kIgnoreLabel;
    write_dataset(images, dir.path() / "d");
    const auto loaded = load_dataset(dir.path() / "d");
    if (loaded.size() != images.size()) problems.push_back("image count");
    double worst = 0.0;
    for (std::size_t k = 0; k < std::min(images.size(), loaded.size()); ++k) {
        if (loaded[k].labels != images[k].labels) problems.push_back("labels of image " + std::to_string(k));
        for (std::size_t i = 0; i < images[k].pixels.size(); ++i)
            worst = std::max(worst, std::abs(images[k].pixels[i] - loaded[k].pixels[i]));
    }
    if (worst > 1.0 / 255.0) problems.push_back("pixel error");
    // Written-then-read data is a fixed point.
    write_dataset(loaded, dir.path() / "d2");
    if (load_dataset(dir.path() / "d2") != loaded) problems.push_back("8-bit fixed point");

    RunConfig cfg;
    cfg.patch_resize = 8;
    const TrainState state = tune(images, [&] {
        RunConfig c = cfg;
        c.iterations = 5;
        return c;
    }(), Strategy::Graph);
    save_checkpoint(state.embedder, dir.path() / "a.ckpt");
    const Embedder back = load_checkpoint(dir.path() / "a.ckpt");
    if (!(back == state.embedder)) problems.push_back("checkpoint values");
    save_checkpoint(back, dir.path() / "b.ckpt");
    if (slurp(dir.path() / "a.ckpt") != slurp(dir.path() / "b.ckpt")) problems.push_back("checkpoint bytes");

    std::string detail = fmt("dataset labels exact, max pixel error %.5f (<= 1/255); checkpoint bit-exact", worst);
    for (const auto& p : problems) detail += "; failed: " + p;
    return {problems.empty(), detail};
}

struct Criterion {
    const char* name;
    const char* title;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {"graph", "graph invariant suite", graph_invariants},
        {"metric", "perceptual distance properties", metric_properties},
        {"gradient", "gradient oracle", gradient_oracle},
        {"compare", "strategy comparison", strategy_comparison},
        {"sweep", "graph-size trend", graph_size_trend},
        {"training", "training effectiveness", training_effectiveness},
        {"determinism", "determinism", determinism},
        {"formats", "format round-trips", format_round_trips},
    };
    std::vector<std::string> only(argv + 1, argv + argc);
    if (only.size() == 1 && only[0] == "--list") {
        for (const auto& c : criteria) std::printf("%s\n", c.name);
        return 0;
    }
    int failed = 0, ran = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
        ++ran;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] %s: %s\n", o.passed ? "PASS" : "FAIL", c.title, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.passed;
    }
    if (ran == 0) {
        std::fprintf(stderr, "no criterion matched\n");
        return 2;
    }
    return failed ? 1 : 0;
}
