#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mm/data_model.hpp"
#include "mm/embedder.hpp"
#include "mm/graph_builder.hpp"
#include "mm/metric_core.hpp"
#include "mm/patch_sampler.hpp"

namespace mm {

enum class Strategy { Graph, Random };

Strategy parse_strategy(std::string_view name);
std::string_view strategy_name(Strategy s);

struct HistoryEntry {
    std::int64_t iteration = 0;
    double loss = 0.0;
    double active_fraction = 0.0;
    double rate = 0.0;
    std::size_t nodes = 0;
};

struct SkippedStep {
    std::int64_t iteration = 0;
    std::string reason;
};

struct TrainState {
    Embedder embedder;
    std::int64_t iteration = 0;
    std::vector<HistoryEntry> history;
    std::vector<SkippedStep> skipped;
    double wall_ms = 0.0;  // excluded from determinism
};

/// Standardized patch pixels as rows.
Matrix patch_matrix(const Embedder& e, const SampleBatch& batch);

/// Embeddings of every patch in the batch.
Matrix embed_patches(const Embedder& e, const SampleBatch& batch);

/// Patch-level triplets for one step. Graph: build_graph + extract_triplets;
/// Random: random_triplets with one triplet per patch.
std::vector<Triplet> make_triplets(const SampleBatch& batch, Strategy strategy, Rng& rng);

struct ParamLossGrad {
    LossReport report;
    std::vector<double> grads;
};

/// Mean triplet loss of forward(e, rows of input) and its gradient w.r.t.
/// the embedder parameters.
ParamLossGrad loss_and_param_grad(const Embedder& e, const Matrix& input,
                                  std::span<const Triplet> triplets, double alpha);

/// Draws images_per_batch images with replacement for `iteration`.
std::vector<LabeledImage> draw_images(std::span<const LabeledImage> images, std::uint64_t seed,
                                      std::uint64_t stream_id, std::int64_t iteration, int count);

/// Fresh embedder for a run: parameters from the seed, standardizer fitted
/// on `images`.
Embedder initial_embedder(std::span<const LabeledImage> images, const RunConfig& cfg);

/// Sample -> triplets -> loss/gradient -> SGD, for cfg.iterations steps.
/// Steps failing with EmptyBatchError or TripletError are skipped and
/// recorded; 20 consecutive failures abort with the last error.
TrainState tune(std::span<const LabeledImage> images, const RunConfig& cfg, Strategy strategy,
                std::optional<Embedder> init = std::nullopt);

}  // namespace mm
