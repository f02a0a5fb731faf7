#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mm/data_model.hpp"
#include "mm/embedder.hpp"
#include "mm/matrix.hpp"
#include "mm/trainer.hpp"

namespace mm {

struct EvalReport {
    double triplet_satisfaction = 0.0;  // fraction of graph triplets with zero hinge
    double knn_accuracy = 0.0;          // leave-one-out 1-NN under the perceptual distance
    double intra_inter_ratio = 0.0;     // mean same-class D / mean cross-class D
};

/// Metrics over given embeddings. Requires two labels or more.
EvalReport evaluate_embeddings(const Matrix& embeddings, std::span<const ClassId> labels, double alpha,
                               Rng& rng);

/// Leave-one-out nearest neighbour accuracy; ties go to the lower index.
double knn_accuracy(const Matrix& embeddings, std::span<const ClassId> labels);
double intra_inter_ratio(const Matrix& embeddings, std::span<const ClassId> labels);

/// Samples an evaluation batch from a seed stream disjoint from training,
/// embeds it and computes the metrics.
EvalReport evaluate(const Embedder& e, std::span<const LabeledImage> images, const RunConfig& cfg,
                    std::uint64_t seed);

struct ExperimentRow {
    std::uint64_t seed = 0;
    std::string arm;
    EvalReport report;
    std::int64_t iters = 0;
    double wall_ms = 0.0;
    std::size_t nodes = 0;  // mean patches per step
};

struct ArmSummary {
    std::string arm;
    std::size_t runs = 0;
    EvalReport mean;
    EvalReport stddev;  // sample standard deviation
    double ms_per_iter = 0.0;
};

struct ExperimentResult {
    std::vector<ExperimentRow> rows;
    std::vector<ArmSummary> summary;
    std::vector<std::string> failures;  // per-seed training errors
};

std::vector<ArmSummary> summarize(const std::vector<ExperimentRow>& rows);

/// Trains graph and random arms per seed on identical patch streams and
/// evaluates both on the same held-out batch.
ExperimentResult compare_strategies(std::span<const LabeledImage> images, const RunConfig& cfg,
                                    std::span<const std::uint64_t> seeds);

/// Trains one arm; used by compare_strategies and for isolation checks.
ExperimentRow run_arm(std::span<const LabeledImage> images, const RunConfig& cfg, Strategy strategy,
                      std::uint64_t seed);

/// Per node target, images_per_batch = target / patches_per_image; arms are
/// named "n<target>". Evaluation uses the base cfg's batch size.
ExperimentResult sweep_graph_size(std::span<const LabeledImage> images, const RunConfig& cfg,
                                  std::span<const int> node_targets,
                                  std::span<const std::uint64_t> seeds);

inline constexpr const char* kCsvHeader =
    "seed,arm,triplet_satisfaction,knn_accuracy,intra_inter_ratio,iters,wall_ms";

/// Header, one row per (seed, arm), then a '#'-prefixed summary block whose
/// lines end with the timing field.
void write_csv(std::ostream& out, const ExperimentResult& result);

/// Line chart of one metric per arm across seeds (compare) or across arms (sweep).
void write_compare_svg(std::ostream& out, const ExperimentResult& result);
void write_sweep_svg(std::ostream& out, const ExperimentResult& result, std::span<const int> node_targets);

}  // namespace mm
