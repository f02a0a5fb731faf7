#include <cmath>

#include "mm/kernels.hpp"

namespace mm::kernels::serial {

void dense_forward(const Matrix& X, std::span<const double> W, std::span<const double> b, Matrix& Y) {
    const std::size_t in = X.cols();
    Y = Matrix(X.rows(), b.size());
    for (std::size_t p = 0; p < X.rows(); ++p)
        for (std::size_t j = 0; j < b.size(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < in; ++k) acc += W[j * in + k] * X(p, k);
            Y(p, j) = acc + b[j];
        }
}

// Sample-major accumulation: one outer product per row.
void dense_backward_params(const Matrix& X, const Matrix& G, std::span<double> dW, std::span<double> db) {
    const std::size_t in = X.cols();
    for (std::size_t p = 0; p < X.rows(); ++p)
        for (std::size_t j = 0; j < G.cols(); ++j) {
            const double g = G(p, j);
            if (g == 0.0) continue;
            for (std::size_t k = 0; k < in; ++k) dW[j * in + k] += g * X(p, k);
            db[j] += g;
        }
}

void dense_backward_input(const Matrix& G, std::span<const double> W, Matrix& dX) {
    const std::size_t in = W.size() / G.cols();
    dX = Matrix(G.rows(), in);
    for (std::size_t p = 0; p < G.rows(); ++p)
        for (std::size_t k = 0; k < in; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < G.cols(); ++j) acc += G(p, j) * W[j * in + k];
            dX(p, k) = acc;
        }
}

bool normalize_rows(const Matrix& X, Matrix& U, std::span<double> norms, double eps) {
    U = Matrix(X.rows(), X.cols());
    bool ok = true;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        double sq = 0.0;
        for (std::size_t k = 0; k < X.cols(); ++k) sq += X(i, k) * X(i, k);
        norms[i] = std::sqrt(sq);
        if (!(norms[i] > eps)) {
            ok = false;
            continue;
        }
        for (std::size_t k = 0; k < X.cols(); ++k) U(i, k) = X(i, k) / norms[i];
    }
    return ok;
}

// Distances through the inner product: D = 2 - 2 <a, b> on unit vectors.
void triplet_terms(const Matrix& U, std::span<const Triplet> triplets, double alpha,
                   std::span<double> hinge, Matrix& grads) {
    const std::size_t d = U.cols();
    grads = Matrix(triplets.size(), 3 * d);
    for (std::size_t t = 0; t < triplets.size(); ++t) {
        const auto a = U.row(triplets[t].anchor);
        const auto p = U.row(triplets[t].positive);
        const auto q = U.row(triplets[t].negative);
        double ap = 0.0, aq = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            ap += a[k] * p[k];
            aq += a[k] * q[k];
        }
        const double h = (2.0 - 2.0 * ap) - (2.0 - 2.0 * aq) + alpha;
        hinge[t] = h > 0.0 ? h : 0.0;
        if (!(h > 0.0)) continue;
        for (std::size_t k = 0; k < d; ++k) {
            grads(t, k) = -2.0 * p[k] + 2.0 * q[k];
            grads(t, d + k) = 2.0 * p[k] - 2.0 * a[k];
            grads(t, 2 * d + k) = -2.0 * q[k] + 2.0 * a[k];
        }
    }
}

void pairwise_distances(const Matrix& U, Matrix& D) {
    D = Matrix(U.rows(), U.rows());
    for (std::size_t i = 0; i < U.rows(); ++i)
        for (std::size_t j = i; j < U.rows(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < U.cols(); ++k) acc += (U(i, k) - U(j, k)) * (U(i, k) - U(j, k));
            D(i, j) = D(j, i) = acc;
        }
}

}  // namespace mm::kernels::serial
