#include <cmath>
#include <cstdint>

#include "mm/kernels.hpp"

namespace mm::kernels {

namespace {
using Index = std::int64_t;
}

void dense_forward(const Matrix& X, std::span<const double> W, std::span<const double> b, Matrix& Y) {
    const Index n = static_cast<Index>(X.rows());
    const std::size_t in = X.cols();
    const std::size_t out = b.size();
    Y = Matrix(X.rows(), out);
#pragma omp parallel for schedule(static)
    for (Index p = 0; p < n; ++p) {
        const double* x = X.row(p).data();
        double* y = Y.row(p).data();
        for (std::size_t j = 0; j < out; ++j) {
            const double* w = W.data() + j * in;
            double acc = 0.0;
            for (std::size_t k = 0; k < in; ++k) acc += w[k] * x[k];
            y[j] = acc + b[j];
        }
    }
}

void dense_backward_params(const Matrix& X, const Matrix& G, std::span<double> dW, std::span<double> db) {
    const std::size_t n = X.rows();
    const std::size_t in = X.cols();
    const Index out = static_cast<Index>(G.cols());
#pragma omp parallel for schedule(static)
    for (Index j = 0; j < out; ++j) {
        double* w = dW.data() + j * in;
        double bias = db[j];
        for (std::size_t p = 0; p < n; ++p) {
            const double g = G(p, j);
            if (g == 0.0) continue;
            const double* x = X.row(p).data();
            for (std::size_t k = 0; k < in; ++k) w[k] += g * x[k];
            bias += g;
        }
        db[j] = bias;
    }
}

void dense_backward_input(const Matrix& G, std::span<const double> W, Matrix& dX) {
    const Index n = static_cast<Index>(G.rows());
    const std::size_t out = G.cols();
    const std::size_t in = W.size() / out;
    dX = Matrix(G.rows(), in);
#pragma omp parallel for schedule(static)
    for (Index p = 0; p < n; ++p) {
        double* dx = dX.row(p).data();
        for (std::size_t j = 0; j < out; ++j) {
            const double g = G(p, j);
            if (g == 0.0) continue;
            const double* w = W.data() + j * in;
            for (std::size_t k = 0; k < in; ++k) dx[k] += g * w[k];
        }
    }
}

bool normalize_rows(const Matrix& X, Matrix& U, std::span<double> norms, double eps) {
    const Index n = static_cast<Index>(X.rows());
    const std::size_t d = X.cols();
    U = Matrix(X.rows(), d);
    int degenerate = 0;
#pragma omp parallel for schedule(static) reduction(| : degenerate)
    for (Index i = 0; i < n; ++i) {
        const auto x = X.row(i);
        double sq = 0.0;
        for (double v : x) sq += v * v;
        const double norm = std::sqrt(sq);
        norms[i] = norm;
        if (!(norm > eps)) {
            degenerate |= 1;
            continue;
        }
        auto u = U.row(i);
        for (std::size_t k = 0; k < d; ++k) u[k] = x[k] / norm;
    }
    return degenerate == 0;
}

void triplet_terms(const Matrix& U, std::span<const Triplet> triplets, double alpha,
                   std::span<double> hinge, Matrix& grads) {
    const std::size_t d = U.cols();
    const Index n = static_cast<Index>(triplets.size());
    grads = Matrix(triplets.size(), 3 * d);
#pragma omp parallel for schedule(static)
    for (Index t = 0; t < n; ++t) {
        const auto& tr = triplets[t];
        const double* a = U.row(tr.anchor).data();
        const double* p = U.row(tr.positive).data();
        const double* q = U.row(tr.negative).data();
        double dap = 0.0, dan = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            dap += (a[k] - p[k]) * (a[k] - p[k]);
            dan += (a[k] - q[k]) * (a[k] - q[k]);
        }
        const double h = dap - dan + alpha;
        if (!(h > 0.0)) {
            hinge[t] = 0.0;
            continue;
        }
        hinge[t] = h;
        double* g = grads.row(t).data();
        for (std::size_t k = 0; k < d; ++k) {
            g[k] = 2.0 * (q[k] - p[k]);
            g[d + k] = 2.0 * (p[k] - a[k]);
            g[2 * d + k] = 2.0 * (a[k] - q[k]);
        }
    }
}

void pairwise_distances(const Matrix& U, Matrix& D) {
    const Index n = static_cast<Index>(U.rows());
    const std::size_t d = U.cols();
    D = Matrix(U.rows(), U.rows());
#pragma omp parallel for schedule(dynamic, 8)
    for (Index i = 0; i < n; ++i) {
        const double* ui = U.row(i).data();
        for (Index j = 0; j < n; ++j) {
            const double* uj = U.row(j).data();
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) acc += (ui[k] - uj[k]) * (ui[k] - uj[k]);
            D(i, j) = acc;
        }
    }
}

}  // namespace mm::kernels
