#include "mm/metric_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mm/errors.hpp"
#include "mm/kernels.hpp"

namespace mm {

EmbeddingVector normalize(std::span<const double> x) {
    double sq = 0.0;
    for (double v : x) sq += v * v;
    const double norm = std::sqrt(sq);
    if (!(norm > kNormEps)) throw NumericError("degenerate embedding: norm below 1e-12");
    EmbeddingVector u(x.begin(), x.end());
    for (double& v : u) v /= norm;
    return u;
}

double perceptual_distance(std::span<const double> xi, std::span<const double> xj) {
    if (xi.size() != xj.size()) throw NumericError("embedding dimension mismatch");
    const auto ui = normalize(xi);
    const auto uj = normalize(xj);
    double d = 0.0;
    for (std::size_t k = 0; k < ui.size(); ++k) d += (ui[k] - uj[k]) * (ui[k] - uj[k]);
    return d;
}

namespace {

void check_indices(const Matrix& embeddings, std::span<const Triplet> triplets) {
    if (triplets.empty()) throw NumericError("triplet loss over an empty triplet list is undefined");
    const std::size_t n = embeddings.rows();
    for (const auto& t : triplets)
        if (t.anchor >= n || t.positive >= n || t.negative >= n)
            throw NumericError("triplet index out of range");
}

Matrix normalized(const Matrix& embeddings, std::vector<double>& norms) {
    Matrix U;
    norms.assign(embeddings.rows(), 0.0);
    if (!kernels::normalize_rows(embeddings, U, norms, kNormEps)) {
        const auto it = std::find_if(norms.begin(), norms.end(), [](double v) { return !(v > kNormEps); });
        throw NumericError("degenerate embedding at row " + std::to_string(it - norms.begin()));
    }
    return U;
}

LossReport summarize(std::vector<double> hinge) {
    LossReport r;
    double sum = 0.0;
    for (double h : hinge) {
        sum += h;
        if (h > 0.0) ++r.active_count;
    }
    r.loss = sum / static_cast<double>(hinge.size());
    r.per_triplet = std::move(hinge);
    return r;
}

}  // namespace

LossReport triplet_loss(const Matrix& embeddings, std::span<const Triplet> triplets, double alpha) {
    return triplet_loss_grad(embeddings, triplets, alpha).report;
}

LossAndGradient triplet_loss_grad(const Matrix& embeddings, std::span<const Triplet> triplets,
                                  double alpha) {
    check_indices(embeddings, triplets);
    if (!(alpha >= 0.0)) throw NumericError("margin must be non-negative");
    std::vector<double> norms;
    const Matrix U = normalized(embeddings, norms);

    std::vector<double> hinge(triplets.size());
    Matrix terms;
    kernels::triplet_terms(U, triplets, alpha, hinge, terms);

    // Fixed-order reduction into per-node gradients w.r.t. the unit vectors.
    const std::size_t d = U.cols();
    const double scale = 1.0 / static_cast<double>(triplets.size());
    Matrix gu(U.rows(), d);
    for (std::size_t t = 0; t < triplets.size(); ++t) {
        if (!(hinge[t] > 0.0)) continue;
        const auto g = terms.row(t);
        const std::size_t rows[3] = {triplets[t].anchor, triplets[t].positive, triplets[t].negative};
        for (int role = 0; role < 3; ++role) {
            auto out = gu.row(rows[role]);
            for (std::size_t k = 0; k < d; ++k) out[k] += scale * g[role * d + k];
        }
    }

    // Back through x -> x / ||x||: (I - u u^T) g / ||x||.
    Matrix grad(U.rows(), d);
    for (std::size_t i = 0; i < U.rows(); ++i) {
        const auto g = gu.row(i);
        const auto u = U.row(i);
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += g[k] * u[k];
        auto out = grad.row(i);
        for (std::size_t k = 0; k < d; ++k) out[k] = (g[k] - dot * u[k]) / norms[i];
    }
    return {summarize(std::move(hinge)), std::move(grad)};
}

// Independent of the kernels: recomputes each loss from perceptual_distance.
Matrix finite_diff_grad(const Matrix& embeddings, std::span<const Triplet> triplets, double alpha,
                        double h) {
    if (!(h > 0.0)) throw NumericError("finite-difference step must be positive");
    if (triplets.empty()) return Matrix(embeddings.rows(), embeddings.cols());
    auto loss_of = [&](const Matrix& x) {
        double sum = 0.0;
        for (const auto& t : triplets) {
            const double dap = perceptual_distance(x.row(t.anchor), x.row(t.positive));
            const double dan = perceptual_distance(x.row(t.anchor), x.row(t.negative));
            sum += std::max(dap - dan + alpha, 0.0);
        }
        return sum / static_cast<double>(triplets.size());
    };
    Matrix grad(embeddings.rows(), embeddings.cols());
    Matrix work = embeddings;
    for (std::size_t i = 0; i < embeddings.rows(); ++i)
        for (std::size_t k = 0; k < embeddings.cols(); ++k) {
            const double orig = work(i, k);
            work(i, k) = orig + h;
            const double up = loss_of(work);
            work(i, k) = orig - h;
            const double down = loss_of(work);
            work(i, k) = orig;
            grad(i, k) = (up - down) / (2.0 * h);
        }
    return grad;
}

double min_kink_distance(const Matrix& embeddings, std::span<const Triplet> triplets, double alpha) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : triplets) {
        const double dap = perceptual_distance(embeddings.row(t.anchor), embeddings.row(t.positive));
        const double dan = perceptual_distance(embeddings.row(t.anchor), embeddings.row(t.negative));
        best = std::min(best, std::abs(dap - dan + alpha));
    }
    return best;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        diff += (a[k] - b[k]) * (a[k] - b[k]);
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    const double denom = std::sqrt(std::max(na, nb));
    return denom > 0.0 ? std::sqrt(diff) / denom : 0.0;
}

}  // namespace mm
