#pragma once

// Data-parallel inner loops. The default namespace holds the OpenMP
// versions; mm::kernels::serial holds plain reference loops used by the tests
// and the benchmark. Each output element of a parallel kernel is produced by
// one thread with a fixed summation order, so results do not depend on the
// thread count.

#include <cstddef>
#include <span>

#include "mm/graph_builder.hpp"
#include "mm/matrix.hpp"

namespace mm::kernels {

/// Y = X * W^T + b for W stored row-major as out x in.
void dense_forward(const Matrix& X, std::span<const double> W, std::span<const double> b, Matrix& Y);

/// dW += G^T * X, db += column sums of G.
void dense_backward_params(const Matrix& X, const Matrix& G, std::span<double> dW, std::span<double> db);

/// dX = G * W.
void dense_backward_input(const Matrix& G, std::span<const double> W, Matrix& dX);

/// Row-wise L2 normalization. Returns false if some row has norm <= eps
/// (U is then unspecified).
bool normalize_rows(const Matrix& X, Matrix& U, std::span<double> norms, double eps);

/// Per-triplet hinge values and gradients w.r.t. the normalized anchor,
/// positive and negative rows. grads is N x 3d (anchor | positive | negative);
/// inactive triplets get zero rows. The 1/N factor is not applied.
void triplet_terms(const Matrix& U, std::span<const Triplet> triplets, double alpha,
                   std::span<double> hinge, Matrix& grads);

/// D(i, j) for all row pairs of an already normalized matrix.
void pairwise_distances(const Matrix& U, Matrix& D);

namespace serial {
void dense_forward(const Matrix& X, std::span<const double> W, std::span<const double> b, Matrix& Y);
void dense_backward_params(const Matrix& X, const Matrix& G, std::span<double> dW, std::span<double> db);
void dense_backward_input(const Matrix& G, std::span<const double> W, Matrix& dX);
bool normalize_rows(const Matrix& X, Matrix& U, std::span<double> norms, double eps);
void triplet_terms(const Matrix& U, std::span<const Triplet> triplets, double alpha,
                   std::span<double> hinge, Matrix& grads);
void pairwise_distances(const Matrix& U, Matrix& D);
}  // namespace serial

}  // namespace mm::kernels
