#include "mm/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "mm/metric_core.hpp"
#include "mm/trainer.hpp"

namespace mm {

EmbeddingInstance random_embedding_instance(Rng& rng) {
    static constexpr std::size_t dims[] = {2, 8, 32};
    const std::size_t d = dims[rng.index(3)];
    const int classes = static_cast<int>(rng.between(3, 10));
    const std::size_t n = static_cast<std::size_t>(rng.between(classes, 3 * classes));
    EmbeddingInstance inst;
    inst.embeddings = Matrix(n, d);
    for (double& v : inst.embeddings.data()) v = rng.normal();
    for (std::size_t i = 0; i < n; ++i)
        inst.labels.push_back(static_cast<ClassId>(i < static_cast<std::size_t>(classes) ? i : rng.index(classes)));
    const PatchGraph g = build_graph(inst.labels, rng);
    const auto node_triplets = extract_triplets(g, rng);
    inst.triplets = to_patch_triplets(g, node_triplets);
    return inst;
}

std::vector<double> finite_diff_param_grad(const Embedder& e, const Matrix& input,
                                           const std::vector<Triplet>& triplets, double alpha, double h) {
    auto loss_of = [&](const Embedder& probe) {
        Matrix out(input.rows(), probe.embed_dim);
        for (std::size_t i = 0; i < input.rows(); ++i) {
            const auto y = forward(probe, input.row(i));
            std::copy(y.begin(), y.end(), out.row(i).begin());
        }
        double sum = 0.0;
        for (const auto& t : triplets)
            sum += std::max(perceptual_distance(out.row(t.anchor), out.row(t.positive)) -
                                perceptual_distance(out.row(t.anchor), out.row(t.negative)) + alpha,
                            0.0);
        return sum / static_cast<double>(triplets.size());
    };
    Embedder probe = e;
    std::vector<double> grad(e.params.size());
    for (std::size_t i = 0; i < e.params.size(); ++i) {
        const double orig = probe.params[i];
        probe.params[i] = orig + h;
        const double up = loss_of(probe);
        probe.params[i] = orig - h;
        const double down = loss_of(probe);
        probe.params[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

double min_relu_margin(const Embedder& e, const Matrix& input) {
    if (e.variant != EmbedderVariant::TwoLayer) return std::numeric_limits<double>::infinity();
    const ForwardCache cache = forward_batch(e, input);
    double best = std::numeric_limits<double>::infinity();
    for (double v : cache.hidden_pre.data()) best = std::min(best, std::abs(v));
    return best;
}

GradientCheckStats check_embedding_gradients(int instances, std::uint64_t seed, double h) {
    GradientCheckStats stats;
    Rng rng(seed);
    while (stats.checked < instances) {
        const auto inst = random_embedding_instance(rng);
        if (min_kink_distance(inst.embeddings, inst.triplets, 2.1) < kKinkExclusion) {
            ++stats.skipped_near_kink;
            continue;
        }
        const auto analytic = triplet_loss_grad(inst.embeddings, inst.triplets, 2.1).gradient;
        const auto numeric = finite_diff_grad(inst.embeddings, inst.triplets, 2.1, h);
        stats.max_relative_error =
            std::max(stats.max_relative_error, relative_error(analytic.data(), numeric.data()));
        ++stats.checked;
    }
    return stats;
}

GradientCheckStats check_end_to_end_gradients(int instances, std::uint64_t seed, double h) {
    GradientCheckStats stats;
    Rng rng(seed);
    while (stats.checked < instances) {
        constexpr std::size_t n = 8, in = 12, hidden = 6, d = 4;
        Embedder e = make_embedder(EmbedderVariant::TwoLayer, in, hidden, d, rng);
        for (double& v : e.params) v += 0.1 * rng.normal();  // non-zero biases
        Matrix X(n, in);
        for (double& v : X.data()) v = rng.normal();
        std::vector<ClassId> labels;
        const int classes = static_cast<int>(rng.between(2, 4));
        for (std::size_t i = 0; i < n; ++i)
            labels.push_back(static_cast<ClassId>(i < static_cast<std::size_t>(classes) ? i : rng.index(classes)));
        const PatchGraph g = build_graph(labels, rng);
        const auto node_triplets = extract_triplets(g, rng);
        const auto triplets = to_patch_triplets(g, node_triplets);

        const Matrix Y = forward_batch(e, X).output;
        if (min_kink_distance(Y, triplets, 2.1) < kKinkExclusion || min_relu_margin(e, X) < kKinkExclusion) {
            ++stats.skipped_near_kink;
            continue;
        }
        const auto analytic = loss_and_param_grad(e, X, triplets, 2.1).grads;
        const auto numeric = finite_diff_param_grad(e, X, triplets, 2.1, h);
        stats.max_relative_error = std::max(stats.max_relative_error, relative_error(analytic, numeric));
        ++stats.checked;
    }
    return stats;
}

GraphFuzzStats fuzz_graph_invariants(int batches, std::uint64_t seed) {
    GraphFuzzStats stats;
    Rng rng(seed);
    for (int b = 0; b < batches; ++b) {
        const int classes = static_cast<int>(rng.between(2, 10));
        const std::size_t n = static_cast<std::size_t>(rng.between(10, 400));
        std::vector<ClassId> labels(n);
        labels[0] = 0;
        labels[1] = 1;
        for (std::size_t i = 2; i < n; ++i) labels[i] = static_cast<ClassId>(rng.index(classes));
        for (std::size_t i = n; i > 1; --i) std::swap(labels[i - 1], labels[rng.index(i)]);

        const PatchGraph g = build_graph(labels, rng);
        const auto triplets = extract_triplets(g, rng);
        std::string problem;
        if (!check_classwise_connected(g)) problem = "class-wise connectivity";
        else if (!check_edge_constraints(g)) problem = "edge constraints";
        else if (triplets.size() != g.original_count()) problem = "triplet count";
        else if (g.original_count() != n) problem = "node count";
        else if (g.attractive_edges.size() + g.rejective_edges.size() > 2 * g.nodes.size())
            problem = "edge budget";
        else
            for (const auto& t : triplets)
                if (g.nodes[t.anchor].label != g.nodes[t.positive].label ||
                    g.nodes[t.anchor].label == g.nodes[t.negative].label || g.nodes[t.anchor].is_duplicate)
                    problem = "triplet labels";
        ++stats.batches;
        if (!problem.empty()) {
            if (stats.failures++ == 0)
                stats.first_failure = "batch " + std::to_string(b) + ": " + problem;
        }
    }
    return stats;
}

}  // namespace mm
