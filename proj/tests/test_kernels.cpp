#include <omp.h>

#include "doctest.h"
#include "mm/kernels.hpp"
#include "mm/rng.hpp"

using namespace mm;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (double& v : m.data()) v = rng.normal();
    return m;
}

std::vector<double> random_vec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

void require_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == doctest::Approx(b[i]).epsilon(tol).scale(1.0));
}

}  // namespace

TEST_CASE("parallel dense kernels match the serial references") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = rng.between(1, 40), in = rng.between(1, 30), out = rng.between(1, 20);
        const Matrix X = random_matrix(rng, n, in);
        const auto W = random_vec(rng, out * in);
        const auto b = random_vec(rng, out);
        Matrix Y, Ys;
        kernels::dense_forward(X, W, b, Y);
        kernels::serial::dense_forward(X, W, b, Ys);
        require_close(Y.data(), Ys.data(), 1e-12);

        const Matrix G = random_matrix(rng, n, out);
        std::vector<double> dW(out * in, 0.0), db(out, 0.0), dWs(out * in, 0.0), dbs(out, 0.0);
        kernels::dense_backward_params(X, G, dW, db);
        kernels::serial::dense_backward_params(X, G, dWs, dbs);
        require_close(dW, dWs, 1e-12);
        require_close(db, dbs, 1e-12);

        Matrix dX, dXs;
        kernels::dense_backward_input(G, W, dX);
        kernels::serial::dense_backward_input(G, W, dXs);
        require_close(dX.data(), dXs.data(), 1e-12);
    }
}

TEST_CASE("parallel metric kernels match the serial references") {
    Rng rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = rng.between(3, 50), d = rng.between(1, 16);
        const Matrix X = random_matrix(rng, n, d);
        Matrix U, Us;
        std::vector<double> norms(n), norms_s(n);
        REQUIRE(kernels::normalize_rows(X, U, norms, 1e-12));
        REQUIRE(kernels::serial::normalize_rows(X, Us, norms_s, 1e-12));
        require_close(U.data(), Us.data(), 1e-14);

        Matrix D, Ds;
        kernels::pairwise_distances(U, D);
        kernels::serial::pairwise_distances(U, Ds);
        require_close(D.data(), Ds.data(), 1e-12);

        std::vector<Triplet> triplets;
        for (int t = 0; t < 30; ++t) triplets.push_back({rng.index(n), rng.index(n), rng.index(n)});
        std::vector<double> h(triplets.size()), hs(triplets.size());
        Matrix g, gs;
        const double alpha = 0.5;
        kernels::triplet_terms(U, triplets, alpha, h, g);
        kernels::serial::triplet_terms(U, triplets, alpha, hs, gs);
        for (std::size_t t = 0; t < triplets.size(); ++t) {
            if (std::abs(h[t]) < 1e-9 || std::abs(hs[t]) < 1e-9) {
                REQUIRE(std::abs(h[t] - hs[t]) < 1e-9);
                continue;
            }
            REQUIRE(h[t] == doctest::Approx(hs[t]).epsilon(1e-12));
            for (std::size_t k = 0; k < 3 * d; ++k) REQUIRE(g(t, k) == doctest::Approx(gs(t, k)).epsilon(1e-12));
        }
    }
}

TEST_CASE("normalize_rows flags degenerate rows") {
    Matrix X(2, 2);
    X(0, 0) = 1.0;
    Matrix U;
    std::vector<double> norms(2);
    CHECK_FALSE(kernels::normalize_rows(X, U, norms, 1e-12));
    CHECK_FALSE(kernels::serial::normalize_rows(X, U, norms, 1e-12));
}

TEST_CASE("kernel results do not depend on the thread count") {
    Rng rng(33);
    const Matrix X = random_matrix(rng, 64, 50);
    const auto W = random_vec(rng, 30 * 50);
    const auto b = random_vec(rng, 30);
    const Matrix G = random_matrix(rng, 64, 30);
    const int saved = omp_get_max_threads();
    std::vector<std::vector<double>> results;
    for (int threads : {1, 2, 3, 4}) {
        omp_set_num_threads(threads);
        Matrix Y;
        kernels::dense_forward(X, W, b, Y);
        std::vector<double> dW(W.size(), 0.0), db(b.size(), 0.0);
        kernels::dense_backward_params(X, G, dW, db);
        auto all = Y.data();
        all.insert(all.end(), dW.begin(), dW.end());
        results.push_back(all);
    }
    omp_set_num_threads(saved);
    for (const auto& r : results) CHECK(r == results.front());
}
