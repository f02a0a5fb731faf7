#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mm/data_model.hpp"
#include "mm/rng.hpp"

namespace mm {

struct SampleBatch {
    std::vector<Patch> patches;
    std::vector<std::size_t> per_image_counts;

    std::size_t size() const { return patches.size(); }
};

/// Intersection over union of two pixel rectangles; 0 when disjoint.
double rect_iou(const Rect& a, const Rect& b);

/// Label at (x + w/2, y + h/2), integer division.
ClassId central_label(const LabeledImage& image, const Rect& r);

/// Bilinear resize of the rect of `image` to side x side (HWC output).
std::vector<double> crop_resize(const LabeledImage& image, const Rect& r, int side);

/// Samples up to cfg.patches_per_image patches per image. Candidates whose
/// IoU with an accepted patch of the same image exceeds cfg.overlap_iou_max,
/// or whose central pixel is ignored, are rejected; at most
/// 10 * patches_per_image candidates are drawn per image.
///
/// Each image uses a sub-seed derived from one draw of `rng` and the image
/// index, so the result does not depend on how images are scheduled.
/// Throws EmptyBatchError when nothing was accepted.
SampleBatch sample_patches(std::span<const LabeledImage> images, const RunConfig& cfg, Rng& rng);

}  // namespace mm
