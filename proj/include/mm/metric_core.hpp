#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mm/graph_builder.hpp"
#include "mm/matrix.hpp"

namespace mm {

/// Norm floor below which an embedding counts as degenerate.
inline constexpr double kNormEps = 1e-12;

using EmbeddingVector = std::vector<double>;

struct LossReport {
    double loss = 0.0;
    std::vector<double> per_triplet;
    std::size_t active_count = 0;

    double active_fraction() const {
        return per_triplet.empty() ? 0.0 : static_cast<double>(active_count) / per_triplet.size();
    }
};

/// x / ||x||; throws NumericError when ||x|| <= kNormEps.
EmbeddingVector normalize(std::span<const double> x);

/// Squared Euclidean distance between the L2-normalized arguments, in [0, 4].
double perceptual_distance(std::span<const double> xi, std::span<const double> xj);

/// Mean over triplets of max(D(a,p) - D(a,n) + alpha, 0). Rows of
/// `embeddings` are the (unnormalized) embeddings indexed by the triplets.
LossReport triplet_loss(const Matrix& embeddings, std::span<const Triplet> triplets, double alpha);

struct LossAndGradient {
    LossReport report;
    Matrix gradient;  // same shape as the embeddings
};

/// Loss together with its exact gradient w.r.t. every embedding row. Inactive
/// triplets (hinge <= 0, kink included) contribute nothing.
LossAndGradient triplet_loss_grad(const Matrix& embeddings, std::span<const Triplet> triplets,
                                  double alpha);

/// Central differences of triplet_loss, one coordinate at a time.
Matrix finite_diff_grad(const Matrix& embeddings, std::span<const Triplet> triplets, double alpha,
                        double h);

/// Smallest |D(a,p) - D(a,n) + alpha| over the triplets; distance to the
/// hinge kink.
double min_kink_distance(const Matrix& embeddings, std::span<const Triplet> triplets, double alpha);

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
double relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace mm
