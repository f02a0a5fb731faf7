#include "doctest.h"
#include "mm/errors.hpp"
#include "mm/evaluation.hpp"
#include "mm/trainer.hpp"

using namespace mm;

namespace {

RunConfig small_config(std::uint64_t seed) {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.images_per_batch = 4;
    cfg.patches_per_image = 5;
    cfg.patch_resize = 6;
    cfg.embed_dim = 8;
    cfg.hidden_dim = 12;
    cfg.iterations = 24;
    return cfg;
}

LabeledImage flat_image(ClassId label) {
    LabeledImage img;
    img.height = img.width = 16;
    img.pixels.assign(16 * 16 * 3, label == 0 ? 0.2 : 0.8);
    img.labels.assign(16 * 16, label);
    return img;
}

}  // namespace

TEST_CASE("history follows the two-phase schedule") {
    const auto images = make_synthetic(6, 3, 32, 32, 1);
    auto cfg = small_config(3);
    cfg.iterations = 40;
    const auto state = tune(images, cfg, Strategy::Graph);
    REQUIRE(state.history.size() == 40);
    for (const auto& h : state.history) {
        CHECK(h.rate == (h.iteration < 30 ? 0.01 : 0.001));
        CHECK(h.loss >= 0.0);
        CHECK(h.active_fraction >= 0.0);
        CHECK(h.active_fraction <= 1.0);
    }
    for (std::size_t i = 1; i < state.history.size(); ++i)
        CHECK(state.history[i].iteration > state.history[i - 1].iteration);
}

TEST_CASE("tune is reproducible from its seed") {
    const auto images = make_synthetic(6, 3, 32, 32, 2);
    for (auto strategy : {Strategy::Graph, Strategy::Random}) {
        const auto a = tune(images, small_config(7), strategy);
        const auto b = tune(images, small_config(7), strategy);
        CHECK(a.embedder == b.embedder);
        CHECK(a.history.size() == b.history.size());
        for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].loss == b.history[i].loss);
        const auto c = tune(images, small_config(8), strategy);
        CHECK_FALSE(a.embedder == c.embedder);
    }
}

TEST_CASE("both strategies see the same patch stream") {
    const auto images = make_synthetic(6, 3, 32, 32, 4);
    const auto cfg = small_config(11);
    const auto g = tune(images, cfg, Strategy::Graph);
    const auto r = tune(images, cfg, Strategy::Random);
    REQUIRE(g.history.size() == r.history.size());
    for (std::size_t i = 0; i < g.history.size(); ++i) CHECK(g.history[i].nodes == r.history[i].nodes);
    CHECK_FALSE(g.embedder == r.embedder);
}

TEST_CASE("identity variant leaves nothing to update") {
    const auto images = make_synthetic(4, 3, 16, 16, 5);
    auto cfg = small_config(1);
    cfg.variant = EmbedderVariant::Identity;
    cfg.patch_resize = 3;
    const auto state = tune(images, cfg, Strategy::Graph);
    CHECK(state.embedder.params.empty());
    CHECK(state.embedder.embed_dim == 27);
    CHECK(state.history.size() == static_cast<std::size_t>(cfg.iterations));
}

TEST_CASE("linear embedder reduces the loss on separable data (10 seeds)") {
    // Flat two-class images: patches of different classes are linearly separable.
    std::vector<LabeledImage> images;
    for (int i = 0; i < 6; ++i) images.push_back(flat_image(static_cast<ClassId>(i % 2)));
    auto noisy = make_synthetic(6, 2, 16, 16, 9);
    for (std::size_t i = 0; i < images.size(); ++i)
        for (std::size_t k = 0; k < images[i].pixels.size(); ++k)
            images[i].pixels[k] = std::clamp(images[i].pixels[k] + (noisy[i].pixels[k] - 0.5) * 0.2, 0.0, 1.0);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto cfg = small_config(seed);
        cfg.variant = EmbedderVariant::Linear;
        cfg.iterations = 60;
        const Embedder before = initial_embedder(images, cfg);
        const auto state = tune(images, cfg, Strategy::Graph);

        Rng sample_rng(derive_seed(seed, stream::kEval, 1));
        const auto batch = sample_patches(images, cfg, sample_rng);
        Rng trng(seed);
        const auto triplets = make_triplets(batch, Strategy::Graph, trng);
        const double loss_before = triplet_loss(embed_patches(before, batch), triplets, cfg.margin_alpha).loss;
        const double loss_after = triplet_loss(embed_patches(state.embedder, batch), triplets, cfg.margin_alpha).loss;
        CHECK(loss_after <= loss_before);
    }
}

TEST_CASE("transient failures are skipped, persistent ones abort") {
    std::vector<LabeledImage> images{flat_image(0), flat_image(1)};
    auto cfg = small_config(2);
    cfg.images_per_batch = 1;
    CHECK_THROWS_AS(tune(images, cfg, Strategy::Graph), TripletError);

    cfg.images_per_batch = 2;
    cfg.iterations = 30;
    const auto state = tune(images, cfg, Strategy::Graph);
    CHECK(state.skipped.size() > 0);
    CHECK(state.history.size() + state.skipped.size() == 30);
}

TEST_CASE("a single-class dataset is rejected") {
    std::vector<LabeledImage> images{flat_image(1), flat_image(1)};
    CHECK_THROWS_AS(tune(images, small_config(0), Strategy::Graph), TripletError);
}

TEST_CASE("make_triplets yields one triplet per patch for both strategies") {
    const auto images = make_synthetic(4, 4, 32, 32, 6);
    const auto cfg = small_config(0);
    Rng rng(1);
    const auto batch = sample_patches(images, cfg, rng);
    for (auto strategy : {Strategy::Graph, Strategy::Random}) {
        const auto t = make_triplets(batch, strategy, rng);
        CHECK(t.size() == batch.size());
        for (const auto& x : t) {
            CHECK(batch.patches[x.anchor].label == batch.patches[x.positive].label);
            CHECK(batch.patches[x.anchor].label != batch.patches[x.negative].label);
        }
    }
}
