// Command-line front end: synth, tune, eval, compare, sweep, check.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mm/data_model.hpp"
#include "mm/embedder.hpp"
#include "mm/errors.hpp"
#include "mm/evaluation.hpp"
#include "mm/selftest.hpp"
#include "mm/trainer.hpp"

namespace fs = std::filesystem;
using namespace mm;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct ConfigFlags {
    RunConfig cfg;
    std::string variant = "two-layer";
    std::string schedule;
    double scale_min = 0.2;
    double scale_max = 0.6;

    void attach(CLI::App* app) {
        app->add_option("--images-per-batch", cfg.images_per_batch, "images drawn per iteration");
        app->add_option("--patches-per-image", cfg.patches_per_image, "patches sampled per image");
        app->add_option("--patch-resize", cfg.patch_resize, "patch side after resizing");
        app->add_option("--margin", cfg.margin_alpha, "triplet margin alpha");
        app->add_option("--embed-dim", cfg.embed_dim, "embedding dimension");
        app->add_option("--hidden-dim", cfg.hidden_dim, "hidden width of the two-layer embedder");
        app->add_option("--variant", variant, "identity | linear | two-layer");
        app->add_option("--iterations", cfg.iterations, "training iterations");
        app->add_option("--lr-schedule", schedule, "iteration:rate pairs, e.g. 0:0.01,300:0.001");
        app->add_option("--overlap-iou-max", cfg.overlap_iou_max, "max IoU between patches of one image");
        app->add_option("--scale-min", scale_min, "min patch side as a fraction of min(H,W)");
        app->add_option("--scale-max", scale_max, "max patch side as a fraction of min(H,W)");
    }

    RunConfig resolve(std::uint64_t seed) const {
        RunConfig out = cfg;
        out.seed = seed;
        out.variant = parse_variant(variant);
        out.patch_scale_range = {scale_min, scale_max};
        if (!schedule.empty()) {
            std::stringstream ss(schedule);
            std::string item;
            while (std::getline(ss, item, ',')) {
                const auto colon = item.find(':');
                if (colon == std::string::npos) throw ConfigError("bad --lr-schedule entry '" + item + "'");
                out.learning_rate_schedule.push_back(
                    {std::stoll(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
            }
        }
        out.validate();
        return out;
    }
};

std::vector<std::uint64_t> seed_list(std::uint64_t base, int count) {
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(count));
    std::iota(seeds.begin(), seeds.end(), base);
    return seeds;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    out << text;
    if (!out) throw DataError("cannot write " + path.string());
}

void print_report(const EvalReport& r) {
    std::printf("triplet_satisfaction %.6f\nknn_accuracy %.6f\nintra_inter_ratio %.6f\n",
                r.triplet_satisfaction, r.knn_accuracy, r.intra_inter_ratio);
}

void print_summary(const ExperimentResult& result) {
    for (const auto& s : result.summary)
        std::printf("%-8s runs %zu  knn %.4f +- %.4f  satisfaction %.4f +- %.4f  ratio %.4f  %.2f ms/iter\n",
                    s.arm.c_str(), s.runs, s.mean.knn_accuracy, s.stddev.knn_accuracy,
                    s.mean.triplet_satisfaction, s.stddev.triplet_satisfaction, s.mean.intra_inter_ratio,
                    s.ms_per_iter);
    for (const auto& f : result.failures) std::fprintf(stderr, "failed %s\n", f.c_str());
}

int run_check() {
    bool ok = true;
    const auto emb = check_embedding_gradients(100, 11);
    const bool emb_ok = emb.max_relative_error < kGradientTolerance;
    std::printf("%s embedding gradient: %d instances, max rel err %.3g (%d near kink skipped)\n",
                emb_ok ? "PASS" : "FAIL", emb.checked, emb.max_relative_error, emb.skipped_near_kink);
    ok &= emb_ok;

    const auto e2e = check_end_to_end_gradients(20, 12);
    const bool e2e_ok = e2e.max_relative_error < kGradientTolerance;
    std::printf("%s end-to-end gradient: %d instances, max rel err %.3g (%d near kink skipped)\n",
                e2e_ok ? "PASS" : "FAIL", e2e.checked, e2e.max_relative_error, e2e.skipped_near_kink);
    ok &= e2e_ok;

    const auto graph = fuzz_graph_invariants(100, 13);
    std::printf("%s graph invariants: %d batches, %d failures %s\n", graph.failures ? "FAIL" : "PASS",
                graph.batches, graph.failures, graph.first_failure.c_str());
    ok &= graph.failures == 0;
    return ok ? kOk : kNumeric;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mix-and-match triplet tuning on labeled patches"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "write a synthetic PPM/PGM dataset");
    int synth_images = 16, synth_classes = 5, synth_size = 64;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    synth->add_option("--images", synth_images, "number of images");
    synth->add_option("--classes", synth_classes, "number of classes (background included)");
    synth->add_option("--size", synth_size, "image side in pixels");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--seed", synth_seed, "generator seed");

    // tune
    auto* tune_cmd = app.add_subcommand("tune", "train an embedder, write checkpoint and history");
    ConfigFlags tune_flags;
    std::string tune_data, tune_out = "tune.ckpt", tune_history, tune_strategy = "graph", tune_edges;
    std::uint64_t tune_seed = 0;
    tune_cmd->add_option("--data", tune_data, "dataset directory")->required();
    tune_cmd->add_option("--seed", tune_seed, "run seed")->required();
    tune_cmd->add_option("--strategy", tune_strategy, "graph | random");
    tune_cmd->add_option("--out", tune_out, "checkpoint path");
    tune_cmd->add_option("--history", tune_history, "history CSV path (default: <out>.history.csv)");
    tune_cmd->add_option("--dump-graph", tune_edges, "write the first iteration's patch graph as an edge list");
    tune_flags.attach(tune_cmd);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    ConfigFlags eval_flags;
    std::string eval_data, eval_ckpt;
    std::uint64_t eval_seed = 0;
    eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
    eval_cmd->add_option("--seed", eval_seed, "evaluation seed");
    eval_flags.attach(eval_cmd);

    // compare
    auto* compare_cmd = app.add_subcommand("compare", "graph vs random triplets over paired seeds");
    ConfigFlags compare_flags;
    std::string compare_data, compare_out = "compare.csv";
    int compare_seeds = 10;
    std::uint64_t compare_seed = 0;
    compare_cmd->add_option("--data", compare_data, "dataset directory")->required();
    compare_cmd->add_option("--seeds", compare_seeds, "number of paired seeds")->check(CLI::Range(2, 100000));
    compare_cmd->add_option("--seed", compare_seed, "first seed")->required();
    compare_cmd->add_option("--out", compare_out, "CSV path; compare.svg is written next to it");
    compare_flags.attach(compare_cmd);

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "graph-size study");
    ConfigFlags sweep_flags;
    std::string sweep_data, sweep_out = "sweep.csv";
    int sweep_seeds = 10;
    std::uint64_t sweep_seed = 0;
    std::vector<int> sweep_nodes{100, 200, 400};
    sweep_cmd->add_option("--data", sweep_data, "dataset directory")->required();
    sweep_cmd->add_option("--seeds", sweep_seeds, "number of seeds")->check(CLI::Range(1, 100000));
    sweep_cmd->add_option("--seed", sweep_seed, "first seed")->required();
    sweep_cmd->add_option("--nodes", sweep_nodes, "node targets")->delimiter(',');
    sweep_cmd->add_option("--out", sweep_out, "CSV path; sweep.svg is written next to it");
    sweep_flags.attach(sweep_cmd);

    auto* check_cmd = app.add_subcommand("check", "gradient and graph-invariant self-tests");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*synth) {
            const auto images = make_synthetic(synth_images, synth_classes, synth_size, synth_size, synth_seed);
            write_dataset(images, synth_out);
            std::printf("wrote %d image/label pairs to %s\n", synth_images, synth_out.c_str());
        } else if (*tune_cmd) {
            const RunConfig cfg = tune_flags.resolve(tune_seed);
            const auto images = load_dataset(tune_data);
            const Strategy strategy = parse_strategy(tune_strategy);
            if (!tune_edges.empty()) {
                const auto drawn = draw_images(images, cfg.seed, stream::kDraw, 0, cfg.images_per_batch);
                Rng sample_rng(derive_seed(cfg.seed, stream::kSample, 0));
                const auto batch = sample_patches(drawn, cfg, sample_rng);
                Rng graph_rng(derive_seed(cfg.seed, stream::kTriplets, 0));
                std::ostringstream edges;
                write_edge_list(edges, build_graph(batch, graph_rng));
                write_text(tune_edges, edges.str());
            }
            const TrainState state = tune(images, cfg, strategy);
            save_checkpoint(state.embedder, tune_out);
            std::ostringstream hist;
            hist << "iteration,loss,active_fraction,rate,nodes\n";
            for (const auto& h : state.history) {
                char buf[160];
                std::snprintf(buf, sizeof buf, "%lld,%.10g,%.10g,%.10g,%zu\n", static_cast<long long>(h.iteration),
                              h.loss, h.active_fraction, h.rate, h.nodes);
                hist << buf;
            }
            write_text(tune_history.empty() ? tune_out + ".history.csv" : tune_history, hist.str());
            for (const auto& s : state.skipped)
                std::fprintf(stderr, "skipped iteration %lld: %s\n", static_cast<long long>(s.iteration),
                             s.reason.c_str());
            if (!state.history.empty())
                std::printf("final loss %.6f, active fraction %.4f, %zu skipped, %.1f ms\n",
                            state.history.back().loss, state.history.back().active_fraction,
                            state.skipped.size(), state.wall_ms);
        } else if (*eval_cmd) {
            const Embedder e = load_checkpoint(eval_ckpt);
            RunConfig cfg = eval_flags.resolve(eval_seed);
            const std::size_t channels = e.standardizer.mean.empty() ? 3 : e.standardizer.mean.size();
            cfg.patch_resize = static_cast<int>(std::lround(std::sqrt(static_cast<double>(e.input_dim) / channels)));
            const auto images = load_dataset(eval_data);
            print_report(evaluate(e, images, cfg, eval_seed));
        } else if (*compare_cmd) {
            const RunConfig cfg = compare_flags.resolve(compare_seed);
            const auto images = load_dataset(compare_data);
            const auto seeds = seed_list(compare_seed, compare_seeds);
            const auto result = compare_strategies(images, cfg, seeds);
            std::ostringstream csv, svg;
            write_csv(csv, result);
            write_compare_svg(svg, result);
            write_text(compare_out, csv.str());
            write_text(fs::path(compare_out).parent_path() / "compare.svg", svg.str());
            print_summary(result);
        } else if (*sweep_cmd) {
            const RunConfig cfg = sweep_flags.resolve(sweep_seed);
            const auto images = load_dataset(sweep_data);
            const auto seeds = seed_list(sweep_seed, sweep_seeds);
            const auto result = sweep_graph_size(images, cfg, sweep_nodes, seeds);
            std::ostringstream csv, svg;
            write_csv(csv, result);
            write_sweep_svg(svg, result, sweep_nodes);
            write_text(sweep_out, csv.str());
            write_text(fs::path(sweep_out).parent_path() / "sweep.svg", svg.str());
            print_summary(result);
        } else if (*check_cmd) {
            return run_check();
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return kNumeric;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kData;
    }
    return kOk;
}
