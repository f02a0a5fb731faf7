#include "mm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include "mm/errors.hpp"
#include "mm/kernels.hpp"

namespace mm {

namespace {

Matrix unit_rows(const Matrix& embeddings) {
    Matrix U;
    std::vector<double> norms(embeddings.rows());
    if (!kernels::normalize_rows(embeddings, U, norms, kNormEps))
        throw NumericError("degenerate embedding in evaluation batch");
    return U;
}

void require_two_labels(std::span<const ClassId> labels) {
    if (std::set<ClassId>(labels.begin(), labels.end()).size() < 2)
        throw TripletError("evaluation batch holds a single class");
}

}  // namespace

double knn_accuracy(const Matrix& embeddings, std::span<const ClassId> labels) {
    const std::size_t n = embeddings.rows();
    if (n < 2) return 0.0;
    Matrix D;
    kernels::pairwise_distances(unit_rows(embeddings), D);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = i == 0 ? 1 : 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && D(i, j) < D(i, best)) best = j;
        if (labels[best] == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

double intra_inter_ratio(const Matrix& embeddings, std::span<const ClassId> labels) {
    Matrix D;
    kernels::pairwise_distances(unit_rows(embeddings), D);
    double intra = 0.0, inter = 0.0;
    std::size_t n_intra = 0, n_inter = 0;
    for (std::size_t i = 0; i < D.rows(); ++i)
        for (std::size_t j = i + 1; j < D.rows(); ++j) {
            if (labels[i] == labels[j]) {
                intra += D(i, j);
                ++n_intra;
            } else {
                inter += D(i, j);
                ++n_inter;
            }
        }
    if (n_inter == 0) throw TripletError("no cross-class pairs");
    const double mean_inter = inter / n_inter;
    const double mean_intra = n_intra ? intra / n_intra : 0.0;
    if (!(mean_inter > 0.0)) throw NumericError("all cross-class distances vanish");
    return mean_intra / mean_inter;
}

EvalReport evaluate_embeddings(const Matrix& embeddings, std::span<const ClassId> labels, double alpha,
                               Rng& rng) {
    require_two_labels(labels);
    EvalReport r;
    const PatchGraph g = build_graph(labels, rng);
    const auto node_triplets = extract_triplets(g, rng);
    const auto triplets = to_patch_triplets(g, node_triplets);
    const LossReport loss = triplet_loss(embeddings, triplets, alpha);
    r.triplet_satisfaction = 1.0 - loss.active_fraction();
    r.knn_accuracy = knn_accuracy(embeddings, labels);
    r.intra_inter_ratio = intra_inter_ratio(embeddings, labels);
    return r;
}

EvalReport evaluate(const Embedder& e, std::span<const LabeledImage> images, const RunConfig& cfg,
                    std::uint64_t seed) {
    const auto drawn = draw_images(images, seed, stream::kEval, 0, cfg.images_per_batch);
    Rng sample_rng(derive_seed(seed, stream::kEval, 1));
    const SampleBatch batch = sample_patches(drawn, cfg, sample_rng);
    const auto labels = batch_labels(batch);
    require_two_labels(labels);
    Rng rng(derive_seed(seed, stream::kEval, 2));
    return evaluate_embeddings(embed_patches(e, batch), labels, cfg.margin_alpha, rng);
}

ExperimentRow run_arm(std::span<const LabeledImage> images, const RunConfig& cfg, Strategy strategy,
                      std::uint64_t seed) {
    RunConfig run = cfg;
    run.seed = seed;
    const TrainState state = tune(images, run, strategy);
    ExperimentRow row;
    row.seed = seed;
    row.arm = std::string(strategy_name(strategy));
    row.report = evaluate(state.embedder, images, run, seed);
    row.iters = static_cast<std::int64_t>(state.history.size());
    row.wall_ms = state.wall_ms;
    std::size_t nodes = 0;
    for (const auto& h : state.history) nodes += h.nodes;
    row.nodes = state.history.empty() ? 0 : nodes / state.history.size();
    return row;
}

std::vector<ArmSummary> summarize(const std::vector<ExperimentRow>& rows) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<const ExperimentRow*>> by_arm;
    for (const auto& r : rows) {
        if (!by_arm.contains(r.arm)) order.push_back(r.arm);
        by_arm[r.arm].push_back(&r);
    }
    std::vector<ArmSummary> out;
    for (const auto& arm : order) {
        const auto& group = by_arm[arm];
        ArmSummary s;
        s.arm = arm;
        s.runs = group.size();
        auto stat = [&](auto field, double& mean, double& sd) {
            double sum = 0.0;
            for (const auto* r : group) sum += field(*r);
            mean = sum / group.size();
            double sq = 0.0;
            for (const auto* r : group) sq += (field(*r) - mean) * (field(*r) - mean);
            sd = group.size() > 1 ? std::sqrt(sq / (group.size() - 1)) : 0.0;
        };
        stat([](const ExperimentRow& r) { return r.report.triplet_satisfaction; }, s.mean.triplet_satisfaction,
             s.stddev.triplet_satisfaction);
        stat([](const ExperimentRow& r) { return r.report.knn_accuracy; }, s.mean.knn_accuracy,
             s.stddev.knn_accuracy);
        stat([](const ExperimentRow& r) { return r.report.intra_inter_ratio; }, s.mean.intra_inter_ratio,
             s.stddev.intra_inter_ratio);
        double ms = 0.0;
        std::int64_t iters = 0;
        for (const auto* r : group) {
            ms += r->wall_ms;
            iters += r->iters;
        }
        s.ms_per_iter = iters ? ms / iters : 0.0;
        out.push_back(s);
    }
    return out;
}

ExperimentResult compare_strategies(std::span<const LabeledImage> images, const RunConfig& cfg,
                                    std::span<const std::uint64_t> seeds) {
    if (seeds.size() < 2) throw ConfigError("compare needs at least 2 seeds");
    ExperimentResult result;
    for (std::uint64_t seed : seeds) {
        try {
            ExperimentRow graph = run_arm(images, cfg, Strategy::Graph, seed);
            ExperimentRow random = run_arm(images, cfg, Strategy::Random, seed);
            result.rows.push_back(std::move(graph));
            result.rows.push_back(std::move(random));
        } catch (const DataError& err) {
            result.failures.push_back("seed " + std::to_string(seed) + ": " + err.what());
        }
    }
    result.summary = summarize(result.rows);
    return result;
}

ExperimentResult sweep_graph_size(std::span<const LabeledImage> images, const RunConfig& cfg,
                                  std::span<const int> node_targets,
                                  std::span<const std::uint64_t> seeds) {
    if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
    std::vector<RunConfig> configs;
    for (int target : node_targets) {
        if (target < cfg.patches_per_image || target % cfg.patches_per_image != 0)
            throw ConfigError("node target " + std::to_string(target) + " is not reachable with " +
                              std::to_string(cfg.patches_per_image) + " patches per image");
        RunConfig c = cfg;
        c.images_per_batch = target / cfg.patches_per_image;
        configs.push_back(c);
    }
    ExperimentResult result;
    for (std::uint64_t seed : seeds) {
        for (std::size_t t = 0; t < configs.size(); ++t) {
            try {
                RunConfig run = configs[t];
                run.seed = seed;
                const TrainState state = tune(images, run, Strategy::Graph);
                RunConfig eval_cfg = cfg;
                eval_cfg.seed = seed;
                ExperimentRow row;
                row.seed = seed;
                row.arm = "n" + std::to_string(node_targets[t]);
                row.report = evaluate(state.embedder, images, eval_cfg, seed);
                row.iters = static_cast<std::int64_t>(state.history.size());
                row.wall_ms = state.wall_ms;
                std::size_t nodes = 0;
                for (const auto& h : state.history) nodes += h.nodes;
                row.nodes = state.history.empty() ? 0 : nodes / state.history.size();
                result.rows.push_back(std::move(row));
            } catch (const DataError& err) {
                result.failures.push_back("seed " + std::to_string(seed) + ": " + err.what());
            }
        }
    }
    result.summary = summarize(result.rows);
    return result;
}

// --- output -------------------------------------------------------------------

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

void write_csv(std::ostream& out, const ExperimentResult& result) {
    out << kCsvHeader << '\n';
    for (const auto& r : result.rows)
        out << r.seed << ',' << r.arm << ',' << num(r.report.triplet_satisfaction) << ','
            << num(r.report.knn_accuracy) << ',' << num(r.report.intra_inter_ratio) << ',' << r.iters << ','
            << num(r.wall_ms) << '\n';
    out << "# summary\n"
        << "# arm,runs,triplet_satisfaction_mean,triplet_satisfaction_std,knn_accuracy_mean,"
           "knn_accuracy_std,intra_inter_ratio_mean,intra_inter_ratio_std,ms_per_iter\n";
    for (const auto& s : result.summary)
        out << "# " << s.arm << ',' << s.runs << ',' << num(s.mean.triplet_satisfaction) << ','
            << num(s.stddev.triplet_satisfaction) << ',' << num(s.mean.knn_accuracy) << ','
            << num(s.stddev.knn_accuracy) << ',' << num(s.mean.intra_inter_ratio) << ','
            << num(s.stddev.intra_inter_ratio) << ',' << num(s.ms_per_iter) << '\n';
    for (const auto& f : result.failures) out << "# failed " << f << '\n';
}

namespace {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

void write_svg_chart(std::ostream& out, const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, const std::vector<Series>& series, bool lines) {
    constexpr double W = 640, H = 400, L = 60, R = 130, T = 40, B = 50;
    double x0 = 1e300, x1 = -1e300, y0 = 0.0, y1 = 1.0;
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
        }
    if (!(x1 > x0)) {
        x0 -= 1;
        x1 += 1;
    }
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n"
        << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel
        << "</text>\n"
        << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
        << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
    for (int i = 0; i <= 4; ++i) {
        const double y = y0 + (y1 - y0) * i / 4;
        out << "<text x=\"" << L - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
            << num(y) << "</text>\n";
    }
    out << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\" font-size=\"11\">" << num(x0) << "</text>\n"
        << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" text-anchor=\"end\" font-size=\"11\">"
        << num(x1) << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* c = colors[s % 5];
        if (lines && series[s].points.size() > 1) {
            out << "<polyline fill=\"none\" stroke=\"" << c << "\" points=\"";
            for (auto [x, y] : series[s].points) out << px(x) << ',' << py(y) << ' ';
            out << "\"/>\n";
        }
        for (auto [x, y] : series[s].points)
            out << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3.5\" fill=\"" << c << "\"/>\n";
        out << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 20 + 18 * s << "\" fill=\"" << c << "\">"
            << series[s].name << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace

void write_compare_svg(std::ostream& out, const ExperimentResult& result) {
    std::vector<Series> series;
    for (const auto& s : result.summary) {
        Series line{s.arm, {}};
        for (const auto& r : result.rows)
            if (r.arm == s.arm) line.points.emplace_back(static_cast<double>(r.seed), r.report.knn_accuracy);
        series.push_back(std::move(line));
    }
    write_svg_chart(out, "1-NN accuracy per seed", "seed", "knn_accuracy", series, false);
}

void write_sweep_svg(std::ostream& out, const ExperimentResult& result, std::span<const int> node_targets) {
    Series mean{"mean knn_accuracy", {}};
    for (int target : node_targets)
        for (const auto& s : result.summary)
            if (s.arm == "n" + std::to_string(target)) mean.points.emplace_back(target, s.mean.knn_accuracy);
    write_svg_chart(out, "1-NN accuracy vs graph size", "nodes", "knn_accuracy", {mean}, true);
}

}  // namespace mm
