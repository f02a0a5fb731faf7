#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mm/embedder.hpp"
#include "mm/graph_builder.hpp"
#include "mm/matrix.hpp"

namespace mm {

struct GradientCheckStats {
    int checked = 0;
    int skipped_near_kink = 0;
    double max_relative_error = 0.0;
};

struct GraphFuzzStats {
    int batches = 0;
    int failures = 0;
    std::string first_failure;
};

/// Random embeddings (d in {2, 8, 32}, 3-10 classes) with graph triplets.
struct EmbeddingInstance {
    Matrix embeddings;
    std::vector<ClassId> labels;
    std::vector<Triplet> triplets;
};
EmbeddingInstance random_embedding_instance(Rng& rng);

/// Central-difference gradient of the mean triplet loss w.r.t. the embedder
/// parameters, evaluated through the single-sample forward pass.
std::vector<double> finite_diff_param_grad(const Embedder& e, const Matrix& input,
                                           const std::vector<Triplet>& triplets, double alpha, double h);

/// Smallest |pre-activation| of the hidden layer over the batch (infinity for
/// variants without one).
double min_relu_margin(const Embedder& e, const Matrix& input);

GradientCheckStats check_embedding_gradients(int instances, std::uint64_t seed, double h = 1e-6);
GradientCheckStats check_end_to_end_gradients(int instances, std::uint64_t seed, double h = 1e-6);

/// build_graph over random label multisets (2-10 classes, 10-400 nodes):
/// class-wise connectivity, edge constraints, triplet count and labels.
GraphFuzzStats fuzz_graph_invariants(int batches, std::uint64_t seed);

inline constexpr double kGradientTolerance = 1e-5;
inline constexpr double kKinkExclusion = 1e-4;

}  // namespace mm
