#include "mm/trainer.hpp"

#include <chrono>
#include <set>

#include "mm/errors.hpp"

namespace mm {

Strategy parse_strategy(std::string_view name) {
    if (name == "graph") return Strategy::Graph;
    if (name == "random") return Strategy::Random;
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

std::string_view strategy_name(Strategy s) { return s == Strategy::Graph ? "graph" : "random"; }

Matrix patch_matrix(const Embedder& e, const SampleBatch& batch) {
    Matrix X(batch.size(), e.input_dim);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& p = batch.patches[i];
        const auto row = preprocess(e, p.pixels, p.channels);
        if (row.size() != e.input_dim)
            throw ConfigError("patch size " + std::to_string(row.size()) +
                              " does not match embedder input " + std::to_string(e.input_dim));
        std::copy(row.begin(), row.end(), X.row(i).begin());
    }
    return X;
}

Matrix embed_patches(const Embedder& e, const SampleBatch& batch) {
    return forward_batch(e, patch_matrix(e, batch)).output;
}

std::vector<Triplet> make_triplets(const SampleBatch& batch, Strategy strategy, Rng& rng) {
    if (strategy == Strategy::Random) return random_triplets(batch, batch.size(), rng);
    const PatchGraph g = build_graph(batch, rng);
    const auto nodes = extract_triplets(g, rng);
    return to_patch_triplets(g, nodes);
}

ParamLossGrad loss_and_param_grad(const Embedder& e, const Matrix& input,
                                  std::span<const Triplet> triplets, double alpha) {
    const ForwardCache cache = forward_batch(e, input);
    auto [report, G] = triplet_loss_grad(cache.output, triplets, alpha);
    return {std::move(report), backward_batch(e, cache, G)};
}

std::vector<LabeledImage> draw_images(std::span<const LabeledImage> images, std::uint64_t seed,
                                      std::uint64_t stream_id, std::int64_t iteration, int count) {
    if (images.empty()) throw DataError("empty dataset");
    Rng rng(derive_seed(seed, stream_id, static_cast<std::uint64_t>(iteration)));
    std::vector<LabeledImage> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(images[rng.index(images.size())]);
    return out;
}

Embedder initial_embedder(std::span<const LabeledImage> images, const RunConfig& cfg) {
    if (images.empty()) throw DataError("empty dataset");
    const int channels = images.front().channels;
    const std::size_t input_dim = static_cast<std::size_t>(cfg.patch_resize) * cfg.patch_resize * channels;
    Rng rng(derive_seed(cfg.seed, stream::kInit));
    Embedder e = make_embedder(cfg.variant, input_dim, static_cast<std::size_t>(cfg.hidden_dim),
                               cfg.variant == EmbedderVariant::Identity ? input_dim
                                                                        : static_cast<std::size_t>(cfg.embed_dim),
                               rng);
    e.standardizer = fit_standardizer(images);
    return e;
}

TrainState tune(std::span<const LabeledImage> images, const RunConfig& cfg, Strategy strategy,
                std::optional<Embedder> init) {
    cfg.validate();
    std::set<ClassId> classes;
    for (const auto& img : images)
        for (ClassId c : img.labels)
            if (!img.is_ignored(c)) classes.insert(c);
    if (classes.size() < 2) throw TripletError("dataset needs at least 2 classes");

    TrainState state;
    state.embedder = init ? std::move(*init) : initial_embedder(images, cfg);
    const auto start = std::chrono::steady_clock::now();
    int consecutive_failures = 0;

    for (std::int64_t it = 0; it < cfg.iterations; ++it) {
        state.iteration = it;
        try {
            const auto drawn = draw_images(images, cfg.seed, stream::kDraw, it, cfg.images_per_batch);
            Rng sample_rng(derive_seed(cfg.seed, stream::kSample, static_cast<std::uint64_t>(it)));
            const SampleBatch batch = sample_patches(drawn, cfg, sample_rng);
            Rng triplet_rng(derive_seed(cfg.seed, stream::kTriplets, static_cast<std::uint64_t>(it)));
            const auto triplets = make_triplets(batch, strategy, triplet_rng);

            const Matrix X = patch_matrix(state.embedder, batch);
            auto step = loss_and_param_grad(state.embedder, X, triplets, cfg.margin_alpha);
            const double rate = cfg.rate_at(it);
            if (state.embedder.variant != EmbedderVariant::Identity)
                sgd_step_inplace(state.embedder, step.grads, rate);
            state.history.push_back(
                {it, step.report.loss, step.report.active_fraction(), rate, batch.size()});
            consecutive_failures = 0;
        } catch (const EmptyBatchError& err) {
            state.skipped.push_back({it, err.what()});
            if (++consecutive_failures >= 20) throw;
        } catch (const TripletError& err) {
            state.skipped.push_back({it, err.what()});
            if (++consecutive_failures >= 20) throw;
        }
    }
    state.iteration = cfg.iterations;
    state.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return state;
}

}  // namespace mm
