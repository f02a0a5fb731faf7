#include "mm/patch_sampler.hpp"

#include <algorithm>
#include <cmath>

#include "mm/errors.hpp"

namespace mm {

double rect_iou(const Rect& a, const Rect& b) {
    const long ix = std::max(0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const long iy = std::max(0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const long inter = ix * iy;
    const long uni = static_cast<long>(a.w) * a.h + static_cast<long>(b.w) * b.h - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

ClassId central_label(const LabeledImage& image, const Rect& r) {
    return image.label(r.y + r.h / 2, r.x + r.w / 2);
}

std::vector<double> crop_resize(const LabeledImage& image, const Rect& r, int side) {
    const int C = image.channels;
    std::vector<double> out(static_cast<std::size_t>(side) * side * C);
    const double sy = static_cast<double>(r.h) / side;
    const double sx = static_cast<double>(r.w) / side;
    for (int oy = 0; oy < side; ++oy) {
        const double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, r.h - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, r.h - 1);
        const double wy = fy - y0;
        for (int ox = 0; ox < side; ++ox) {
            const double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, r.w - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, r.w - 1);
            const double wx = fx - x0;
            for (int c = 0; c < C; ++c) {
                const double top = (1 - wx) * image.pixel(r.y + y0, r.x + x0, c) +
                                   wx * image.pixel(r.y + y0, r.x + x1, c);
                const double bot = (1 - wx) * image.pixel(r.y + y1, r.x + x0, c) +
                                   wx * image.pixel(r.y + y1, r.x + x1, c);
                out[(static_cast<std::size_t>(oy) * side + ox) * C + c] = (1 - wy) * top + wy * bot;
            }
        }
    }
    return out;
}

namespace {

std::vector<Patch> sample_one(const LabeledImage& image, std::size_t image_index,
                              const RunConfig& cfg, Rng& rng) {
    std::vector<Patch> accepted;
    std::vector<Rect> rects;
    const int m = std::min(image.height, image.width);
    const int side_lo = std::max(1, static_cast<int>(std::ceil(cfg.patch_scale_range.first * m)));
    const int side_hi = std::max(side_lo, static_cast<int>(std::floor(cfg.patch_scale_range.second * m)));
    const int attempts = 10 * cfg.patches_per_image;
    for (int t = 0; t < attempts && static_cast<int>(rects.size()) < cfg.patches_per_image; ++t) {
        const int side = static_cast<int>(rng.between(side_lo, side_hi));
        Rect r{static_cast<int>(rng.between(0, image.width - side)),
               static_cast<int>(rng.between(0, image.height - side)), side, side};
        const ClassId label = central_label(image, r);
        if (image.is_ignored(label)) continue;
        const bool overlaps = std::any_of(rects.begin(), rects.end(), [&](const Rect& o) {
            return rect_iou(r, o) > cfg.overlap_iou_max;
        });
        if (overlaps) continue;
        rects.push_back(r);
        accepted.push_back(Patch{cfg.patch_resize, image.channels,
                                 crop_resize(image, r, cfg.patch_resize), label,
                                 PatchSource{image_index, r}});
    }
    return accepted;
}

}  // namespace

SampleBatch sample_patches(std::span<const LabeledImage> images, const RunConfig& cfg, Rng& rng) {
    cfg.validate();
    const std::uint64_t base = rng.next_seed();
    std::vector<std::vector<Patch>> per_image(images.size());

#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < images.size(); ++i) {
        Rng local(derive_seed(base, i));
        per_image[i] = sample_one(images[i], i, cfg, local);
    }

    SampleBatch batch;
    for (auto& patches : per_image) {
        batch.per_image_counts.push_back(patches.size());
        std::move(patches.begin(), patches.end(), std::back_inserter(batch.patches));
    }
    if (batch.patches.empty()) throw EmptyBatchError("no patch accepted across the whole batch");
    return batch;
}

}  // namespace mm
