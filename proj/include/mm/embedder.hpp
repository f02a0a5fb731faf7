#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "mm/data_model.hpp"
#include "mm/matrix.hpp"
#include "mm/rng.hpp"

namespace mm {

/// Fixed per-channel input standardization, estimated from the training set.
/// Stands in for batch normalization.
struct Standardizer {
    std::vector<double> mean;  // per channel
    std::vector<double> stddev;

    bool operator==(const Standardizer&) const = default;
};

Standardizer fit_standardizer(std::span<const LabeledImage> images);

/// Trainable map from flattened (standardized) patch pixels to an embedding.
///
/// Parameters live in one flat vector:
///   Linear:   W1 (embed x input), b1 (embed)
///   TwoLayer: W1 (hidden x input), b1 (hidden), W2 (embed x hidden), b2 (embed)
///   Identity: none; input_dim == embed_dim.
struct Embedder {
    EmbedderVariant variant = EmbedderVariant::TwoLayer;
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t embed_dim = 0;
    std::vector<double> params;
    Standardizer standardizer;  // identity transform when empty

    std::span<const double> w1() const;
    std::span<const double> b1() const;
    std::span<const double> w2() const;
    std::span<const double> b2() const;
    std::size_t first_out() const { return variant == EmbedderVariant::TwoLayer ? hidden_dim : embed_dim; }

    bool operator==(const Embedder&) const = default;
};

std::size_t parameter_count(EmbedderVariant variant, std::size_t input_dim, std::size_t hidden_dim,
                            std::size_t embed_dim);

/// Gaussian initialization (He scaling on the first layer), zero biases.
Embedder make_embedder(EmbedderVariant variant, std::size_t input_dim, std::size_t hidden_dim,
                       std::size_t embed_dim, Rng& rng);

EmbedderVariant parse_variant(std::string_view name);
std::string_view variant_name(EmbedderVariant variant);

/// Applies the standardizer to HWC pixels.
std::vector<double> preprocess(const Embedder& e, std::span<const double> pixels, int channels);

std::vector<double> forward(const Embedder& e, std::span<const double> input);

struct Backward {
    std::vector<double> params;  // same layout as Embedder::params
    std::vector<double> input;
};

/// Gradients of <upstream, forward(input)> w.r.t. parameters and input.
Backward backward(const Embedder& e, std::span<const double> input, std::span<const double> upstream);

/// Batched forward pass (rows are inputs) keeping what backward_batch needs.
struct ForwardCache {
    Matrix input;
    Matrix hidden_pre;  // two-layer only
    Matrix hidden;      // two-layer only
    Matrix output;
};

ForwardCache forward_batch(const Embedder& e, Matrix input);

/// Sum over rows of the per-row parameter gradients for upstream rows G.
std::vector<double> backward_batch(const Embedder& e, const ForwardCache& cache, const Matrix& G);

/// params - rate * grads. Throws NumericError on non-finite gradients or a
/// non-positive rate.
Embedder sgd_step(const Embedder& e, std::span<const double> grads, double rate);
void sgd_step_inplace(Embedder& e, std::span<const double> grads, double rate);

/// Checkpoint layout (little endian):
///   8 bytes magic "MMEMBED1", u32 variant, u32 channels,
///   u64 input_dim, u64 hidden_dim, u64 embed_dim, u64 param_count,
///   f64 mean[channels], f64 stddev[channels], f64 params[param_count].
void save_checkpoint(const Embedder& e, const std::filesystem::path& path);
Embedder load_checkpoint(const std::filesystem::path& path);

}  // namespace mm
