#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

namespace mm {

using ClassId = std::int32_t;

/// Reserved label value for pixels excluded from supervision.
inline constexpr ClassId kIgnoreLabel = 255;

/// Pixel grid plus per-pixel class-label map.
///
/// Pixels are stored interleaved (HWC) with intensities in [0, 1].
struct LabeledImage {
    int height = 0;
    int width = 0;
    int channels = 3;
    std::vector<double> pixels;   // height * width * channels
    std::vector<ClassId> labels;  // height * width
    std::optional<ClassId> ignore_label = kIgnoreLabel;

    double pixel(int y, int x, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    ClassId label(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }
    bool is_ignored(ClassId c) const { return ignore_label && *ignore_label == c; }

    bool operator==(const LabeledImage&) const = default;
};

/// Checks the structural invariants; throws DataError on violation.
/// When num_classes is given, every non-ignore label must be below it.
void validate(const LabeledImage& image, std::optional<ClassId> num_classes = std::nullopt);

struct Rect {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;

    bool operator==(const Rect&) const = default;
};

struct PatchSource {
    std::size_t image = 0;
    Rect rect;
};

/// A cropped, resized pixel block with a single label.
struct Patch {
    int side = 0;
    int channels = 3;
    std::vector<double> pixels;  // side * side * channels, HWC
    ClassId label = 0;
    PatchSource source;
};

struct LrStep {
    std::int64_t iteration = 0;
    double rate = 0.0;
};

enum class EmbedderVariant : std::uint32_t { Identity = 0, Linear = 1, TwoLayer = 2 };

struct RunConfig {
    std::uint64_t seed = 0;
    int images_per_batch = 16;
    int patches_per_image = 10;
    int patch_resize = 32;
    double margin_alpha = 2.1;
    int embed_dim = 32;
    int hidden_dim = 64;
    EmbedderVariant variant = EmbedderVariant::TwoLayer;
    /// Piecewise-constant schedule; empty means the default two-phase one.
    std::vector<LrStep> learning_rate_schedule;
    std::int64_t iterations = 400;
    double overlap_iou_max = 0.5;
    std::pair<double, double> patch_scale_range{0.2, 0.6};

    /// Throws ConfigError when an invariant is violated.
    void validate() const;

    /// 0.01 before three quarters of the run, 0.001 afterwards.
    std::vector<LrStep> effective_schedule() const;
    double rate_at(std::int64_t iteration) const;
};

/// Reads image_k.ppm / label_k.pgm pairs for k = 0..n-1.
/// Label 255 becomes the ignore label.
std::vector<LabeledImage> load_dataset(const std::filesystem::path& root);

/// Writes the layout read by load_dataset. Creates root if needed.
void write_dataset(const std::vector<LabeledImage>& images, const std::filesystem::path& root);

/// Background class 0 plus 1-3 filled rectangles or ellipses per image, each
/// class painted in its own base color with per-pixel noise.
std::vector<LabeledImage> make_synthetic(int num_images, int num_classes, int height, int width,
                                         std::uint64_t seed);

// Low-level netpbm codecs; exposed for tests.
struct Netpbm {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> bytes;
};
Netpbm read_netpbm(const std::filesystem::path& path, int expected_channels);
void write_netpbm(const std::filesystem::path& path, const Netpbm& image);

}  // namespace mm
