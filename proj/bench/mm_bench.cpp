// Times the OpenMP kernels against the serial reference loops on a
// training-sized batch (160 patches of 16x16x3, hidden 64, embed 32) and a
// larger one. Usage: mm_bench [repeats]

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include "mm/kernels.hpp"
#include "mm/rng.hpp"

using namespace mm;
namespace k = mm::kernels;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    Matrix m(r, c);
    for (double& v : m.data()) v = rng.normal();
    return m;
}

double time_ms(int repeats, const std::function<void()>& f) {
    f();  // warm-up
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < repeats; ++i) f();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() / repeats;
}

void row(const char* name, double serial_ms, double omp_ms) {
    std::printf("%-24s %12.4f %12.4f %8.2fx\n", name, serial_ms, omp_ms, serial_ms / omp_ms);
}

void run(std::size_t n, std::size_t in, std::size_t hidden, std::size_t out, int repeats) {
    Rng rng(42);
    const Matrix X = random_matrix(n, in, rng);
    const Matrix W1 = random_matrix(hidden, in, rng);
    const Matrix G = random_matrix(n, hidden, rng);
    std::vector<double> b(hidden, 0.1), dW(hidden * in), db(hidden), norms(n);
    Matrix Y(n, hidden), dX(n, in), U(n, out), D(n, n);
    const Matrix E = random_matrix(n, out, rng);

    std::vector<Triplet> triplets;
    for (std::size_t i = 0; i < n; ++i) triplets.push_back({i, rng.index(n), rng.index(n)});
    std::vector<double> hinge(n);
    Matrix grads(n, 3 * out);
    k::normalize_rows(E, U, norms, 1e-12);

    std::printf("\nbatch %zu x %zu -> %zu -> %zu, %d threads, %d repeats\n", n, in, hidden, out,
                omp_get_max_threads(), repeats);
    std::printf("%-24s %12s %12s %9s\n", "kernel", "serial ms", "omp ms", "speedup");
    row("dense_forward", time_ms(repeats, [&] { k::serial::dense_forward(X, W1.data(), b, Y); }),
        time_ms(repeats, [&] { k::dense_forward(X, W1.data(), b, Y); }));
    row("dense_backward_params",
        time_ms(repeats, [&] { k::serial::dense_backward_params(X, G, dW, db); }),
        time_ms(repeats, [&] { k::dense_backward_params(X, G, dW, db); }));
    row("dense_backward_input", time_ms(repeats, [&] { k::serial::dense_backward_input(G, W1.data(), dX); }),
        time_ms(repeats, [&] { k::dense_backward_input(G, W1.data(), dX); }));
    Matrix U2(n, out);
    row("normalize_rows", time_ms(repeats, [&] { k::serial::normalize_rows(E, U2, norms, 1e-12); }),
        time_ms(repeats, [&] { k::normalize_rows(E, U2, norms, 1e-12); }));
    row("triplet_terms", time_ms(repeats, [&] { k::serial::triplet_terms(U, triplets, 2.1, hinge, grads); }),
        time_ms(repeats, [&] { k::triplet_terms(U, triplets, 2.1, hinge, grads); }));
    row("pairwise_distances", time_ms(repeats, [&] { k::serial::pairwise_distances(U, D); }),
        time_ms(repeats, [&] { k::pairwise_distances(U, D); }));
}

}  // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 20;
    run(160, 16 * 16 * 3, 64, 32, repeats);
    run(1024, 32 * 32 * 3, 64, 32, std::max(1, repeats / 4));
    return 0;
}
