#include "mm/embedder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "mm/errors.hpp"
#include "mm/kernels.hpp"

namespace mm {

Standardizer fit_standardizer(std::span<const LabeledImage> images) {
    if (images.empty()) return {};
    const int C = images.front().channels;
    std::vector<double> sum(C, 0.0), sq(C, 0.0);
    std::size_t count = 0;
    for (const auto& img : images) {
        if (img.channels != C) throw DataError("images disagree on channel count");
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
            sum[i % C] += img.pixels[i];
            sq[i % C] += img.pixels[i] * img.pixels[i];
        }
        count += img.pixels.size() / C;
    }
    Standardizer s;
    for (int c = 0; c < C; ++c) {
        const double mean = sum[c] / count;
        const double var = std::max(sq[c] / count - mean * mean, 0.0);
        s.mean.push_back(mean);
        s.stddev.push_back(std::max(std::sqrt(var), 1e-3));
    }
    return s;
}

std::size_t parameter_count(EmbedderVariant variant, std::size_t input_dim, std::size_t hidden_dim,
                            std::size_t embed_dim) {
    switch (variant) {
        case EmbedderVariant::Identity: return 0;
        case EmbedderVariant::Linear: return embed_dim * input_dim + embed_dim;
        case EmbedderVariant::TwoLayer:
            return hidden_dim * input_dim + hidden_dim + embed_dim * hidden_dim + embed_dim;
    }
    throw ConfigError("unknown embedder variant");
}

std::span<const double> Embedder::w1() const {
    return {params.data(), first_out() * input_dim};
}
std::span<const double> Embedder::b1() const {
    return {params.data() + first_out() * input_dim, first_out()};
}
std::span<const double> Embedder::w2() const {
    return {params.data() + hidden_dim * input_dim + hidden_dim, embed_dim * hidden_dim};
}
std::span<const double> Embedder::b2() const {
    return {params.data() + hidden_dim * input_dim + hidden_dim + embed_dim * hidden_dim, embed_dim};
}

Embedder make_embedder(EmbedderVariant variant, std::size_t input_dim, std::size_t hidden_dim,
                       std::size_t embed_dim, Rng& rng) {
    if (input_dim == 0 || embed_dim == 0) throw ConfigError("embedder dimensions must be positive");
    if (variant == EmbedderVariant::Identity && input_dim != embed_dim)
        throw ConfigError("identity embedder needs input_dim == embed_dim");
    if (variant == EmbedderVariant::TwoLayer && hidden_dim == 0)
        throw ConfigError("two-layer embedder needs a hidden width");
    Embedder e;
    e.variant = variant;
    e.input_dim = input_dim;
    e.hidden_dim = variant == EmbedderVariant::TwoLayer ? hidden_dim : 0;
    e.embed_dim = embed_dim;
    e.params.assign(parameter_count(variant, input_dim, e.hidden_dim, embed_dim), 0.0);
    if (variant == EmbedderVariant::Identity) return e;

    const std::size_t out1 = e.first_out();
    const double s1 = std::sqrt(2.0 / static_cast<double>(input_dim));
    for (std::size_t i = 0; i < out1 * input_dim; ++i) e.params[i] = s1 * rng.normal();
    if (variant == EmbedderVariant::TwoLayer) {
        const std::size_t off = out1 * input_dim + out1;
        const double s2 = std::sqrt(1.0 / static_cast<double>(hidden_dim));
        for (std::size_t i = 0; i < embed_dim * hidden_dim; ++i) e.params[off + i] = s2 * rng.normal();
    }
    return e;
}

EmbedderVariant parse_variant(std::string_view name) {
    if (name == "identity") return EmbedderVariant::Identity;
    if (name == "linear") return EmbedderVariant::Linear;
    if (name == "two-layer" || name == "mlp") return EmbedderVariant::TwoLayer;
    throw ConfigError("unknown embedder variant '" + std::string(name) + "'");
}

std::string_view variant_name(EmbedderVariant variant) {
    switch (variant) {
        case EmbedderVariant::Identity: return "identity";
        case EmbedderVariant::Linear: return "linear";
        case EmbedderVariant::TwoLayer: return "two-layer";
    }
    return "?";
}

std::vector<double> preprocess(const Embedder& e, std::span<const double> pixels, int channels) {
    std::vector<double> out(pixels.begin(), pixels.end());
    if (e.standardizer.mean.empty()) return out;
    if (static_cast<int>(e.standardizer.mean.size()) != channels)
        throw DataError("standardizer channel count does not match patch");
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::size_t c = i % channels;
        out[i] = (out[i] - e.standardizer.mean[c]) / e.standardizer.stddev[c];
    }
    return out;
}

namespace {

void check_input(const Embedder& e, std::size_t n) {
    if (n != e.input_dim)
        throw ConfigError("embedder input has " + std::to_string(n) + " values, expected " +
                          std::to_string(e.input_dim));
}

}  // namespace

// Single-sample paths are written out directly; the batched paths go through
// the kernels.
std::vector<double> forward(const Embedder& e, std::span<const double> input) {
    check_input(e, input.size());
    if (e.variant == EmbedderVariant::Identity) return {input.begin(), input.end()};
    const auto w1 = e.w1();
    const auto b1 = e.b1();
    std::vector<double> h(e.first_out());
    for (std::size_t j = 0; j < h.size(); ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < e.input_dim; ++k) acc += w1[j * e.input_dim + k] * input[k];
        h[j] = acc + b1[j];
    }
    if (e.variant == EmbedderVariant::Linear) return h;
    for (double& v : h) v = std::max(v, 0.0);
    const auto w2 = e.w2();
    const auto b2 = e.b2();
    std::vector<double> y(e.embed_dim);
    for (std::size_t j = 0; j < y.size(); ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < e.hidden_dim; ++k) acc += w2[j * e.hidden_dim + k] * h[k];
        y[j] = acc + b2[j];
    }
    return y;
}

Backward backward(const Embedder& e, std::span<const double> input, std::span<const double> upstream) {
    check_input(e, input.size());
    if (upstream.size() != e.embed_dim) throw ConfigError("upstream gradient dimension mismatch");
    Backward out;
    out.params.assign(e.params.size(), 0.0);
    out.input.assign(e.input_dim, 0.0);
    if (e.variant == EmbedderVariant::Identity) {
        out.input.assign(upstream.begin(), upstream.end());
        return out;
    }
    const std::size_t in = e.input_dim;
    const std::size_t out1 = e.first_out();
    const auto w1 = e.w1();

    // Gradient w.r.t. the first layer's output.
    std::vector<double> g1(upstream.begin(), upstream.end());
    if (e.variant == EmbedderVariant::TwoLayer) {
        const auto b1 = e.b1();
        std::vector<double> pre(out1), h(out1);
        for (std::size_t j = 0; j < out1; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < in; ++k) acc += w1[j * in + k] * input[k];
            pre[j] = acc + b1[j];
            h[j] = std::max(pre[j], 0.0);
        }
        const auto w2 = e.w2();
        const std::size_t off_w2 = out1 * in + out1;
        const std::size_t off_b2 = off_w2 + e.embed_dim * out1;
        g1.assign(out1, 0.0);
        for (std::size_t j = 0; j < e.embed_dim; ++j) {
            for (std::size_t k = 0; k < out1; ++k) {
                out.params[off_w2 + j * out1 + k] = upstream[j] * h[k];
                g1[k] += upstream[j] * w2[j * out1 + k];
            }
            out.params[off_b2 + j] = upstream[j];
        }
        for (std::size_t k = 0; k < out1; ++k)
            if (!(pre[k] > 0.0)) g1[k] = 0.0;
    }
    for (std::size_t j = 0; j < out1; ++j) {
        for (std::size_t k = 0; k < in; ++k) {
            out.params[j * in + k] = g1[j] * input[k];
            out.input[k] += g1[j] * w1[j * in + k];
        }
        out.params[out1 * in + j] = g1[j];
    }
    return out;
}

ForwardCache forward_batch(const Embedder& e, Matrix input) {
    check_input(e, input.cols());
    ForwardCache cache;
    cache.input = std::move(input);
    if (e.variant == EmbedderVariant::Identity) {
        cache.output = cache.input;
        return cache;
    }
    if (e.variant == EmbedderVariant::Linear) {
        kernels::dense_forward(cache.input, e.w1(), e.b1(), cache.output);
        return cache;
    }
    kernels::dense_forward(cache.input, e.w1(), e.b1(), cache.hidden_pre);
    cache.hidden = cache.hidden_pre;
    for (double& v : cache.hidden.data()) v = std::max(v, 0.0);
    kernels::dense_forward(cache.hidden, e.w2(), e.b2(), cache.output);
    return cache;
}

std::vector<double> backward_batch(const Embedder& e, const ForwardCache& cache, const Matrix& G) {
    if (G.rows() != cache.input.rows() || G.cols() != e.embed_dim)
        throw ConfigError("upstream gradient shape mismatch");
    std::vector<double> grads(e.params.size(), 0.0);
    if (e.variant == EmbedderVariant::Identity) return grads;
    const std::size_t in = e.input_dim;
    const std::size_t out1 = e.first_out();
    std::span<double> all(grads);
    if (e.variant == EmbedderVariant::Linear) {
        kernels::dense_backward_params(cache.input, G, all.subspan(0, out1 * in), all.subspan(out1 * in, out1));
        return grads;
    }
    const std::size_t off_w2 = out1 * in + out1;
    const std::size_t off_b2 = off_w2 + e.embed_dim * out1;
    kernels::dense_backward_params(cache.hidden, G, all.subspan(off_w2, e.embed_dim * out1),
                                   all.subspan(off_b2, e.embed_dim));
    Matrix g1;
    kernels::dense_backward_input(G, e.w2(), g1);
    for (std::size_t i = 0; i < g1.data().size(); ++i)
        if (!(cache.hidden_pre.data()[i] > 0.0)) g1.data()[i] = 0.0;
    kernels::dense_backward_params(cache.input, g1, all.subspan(0, out1 * in), all.subspan(out1 * in, out1));
    return grads;
}

void sgd_step_inplace(Embedder& e, std::span<const double> grads, double rate) {
    if (!(rate > 0.0)) throw NumericError("learning rate must be positive");
    if (grads.size() != e.params.size()) throw NumericError("gradient size does not match parameters");
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (!std::isfinite(grads[i]))
            throw NumericError("non-finite gradient at parameter " + std::to_string(i) + " (value " +
                               std::to_string(grads[i]) + ")");
    for (std::size_t i = 0; i < grads.size(); ++i) e.params[i] -= rate * grads[i];
}

Embedder sgd_step(const Embedder& e, std::span<const double> grads, double rate) {
    Embedder next = e;
    sgd_step_inplace(next, grads, rate);
    return next;
}

// --- checkpoint ---------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'M', 'M', 'E', 'M', 'B', 'E', 'D', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    auto bits = std::bit_cast<U>(value);
    char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(buf, sizeof(U));
}

template <typename T>
T get_le(std::istream& in, const std::filesystem::path& path) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    unsigned char buf[sizeof(U)];
    in.read(reinterpret_cast<char*>(buf), sizeof(U));
    if (!in) throw DataError("truncated checkpoint " + path.string());
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
    return std::bit_cast<T>(bits);
}

}  // namespace

void save_checkpoint(const Embedder& e, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof kMagic);
    put_le(out, static_cast<std::uint32_t>(e.variant));
    put_le(out, static_cast<std::uint32_t>(e.standardizer.mean.size()));
    put_le(out, static_cast<std::uint64_t>(e.input_dim));
    put_le(out, static_cast<std::uint64_t>(e.hidden_dim));
    put_le(out, static_cast<std::uint64_t>(e.embed_dim));
    put_le(out, static_cast<std::uint64_t>(e.params.size()));
    for (double v : e.standardizer.mean) put_le(out, v);
    for (double v : e.standardizer.stddev) put_le(out, v);
    for (double v : e.params) put_le(out, v);
    if (!out) throw DataError("write failed for checkpoint " + path.string());
}

Embedder load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw DataError("bad checkpoint magic in " + path.string());
    Embedder e;
    const auto variant = get_le<std::uint32_t>(in, path);
    if (variant > static_cast<std::uint32_t>(EmbedderVariant::TwoLayer))
        throw DataError("unknown embedder variant in " + path.string());
    e.variant = static_cast<EmbedderVariant>(variant);
    const auto channels = get_le<std::uint32_t>(in, path);
    e.input_dim = get_le<std::uint64_t>(in, path);
    e.hidden_dim = get_le<std::uint64_t>(in, path);
    e.embed_dim = get_le<std::uint64_t>(in, path);
    const auto count = get_le<std::uint64_t>(in, path);
    if (count != parameter_count(e.variant, e.input_dim, e.hidden_dim, e.embed_dim) || channels > 4096)
        throw DataError("inconsistent checkpoint header in " + path.string());
    for (std::uint32_t c = 0; c < channels; ++c) e.standardizer.mean.push_back(get_le<double>(in, path));
    for (std::uint32_t c = 0; c < channels; ++c) e.standardizer.stddev.push_back(get_le<double>(in, path));
    e.params.resize(count);
    for (auto& v : e.params) v = get_le<double>(in, path);
    if (in.peek() != std::char_traits<char>::eof())
        throw DataError("trailing bytes in checkpoint " + path.string());
    return e;
}

}  // namespace mm
