#include "mm/data_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "mm/errors.hpp"
#include "mm/rng.hpp"

namespace mm {

namespace fs = std::filesystem;

void validate(const LabeledImage& image, std::optional<ClassId> num_classes) {
    if (image.height < 1 || image.width < 1 || image.channels < 1)
        throw DataError("image has empty extent");
    const auto area = static_cast<std::size_t>(image.height) * image.width;
    if (image.labels.size() != area)
        throw DataError("label map size does not match image extent");
    if (image.pixels.size() != area * image.channels)
        throw DataError("pixel buffer size does not match image extent");
    for (double v : image.pixels)
        if (!(v >= 0.0 && v <= 1.0)) throw DataError("pixel intensity outside [0,1]");
    for (ClassId c : image.labels) {
        if (image.is_ignored(c)) continue;
        if (c < 0 || (num_classes && c >= *num_classes))
            throw DataError("label " + std::to_string(c) + " outside class range");
    }
}

void RunConfig::validate() const {
    if (images_per_batch < 1) throw ConfigError("images_per_batch must be >= 1");
    if (patches_per_image < 1) throw ConfigError("patches_per_image must be >= 1");
    if (patch_resize < 1) throw ConfigError("patch_resize must be >= 1");
    if (!(margin_alpha >= 0.0)) throw ConfigError("margin_alpha must be >= 0");
    if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
    if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
    if (iterations < 0) throw ConfigError("iterations must be >= 0");
    if (!(overlap_iou_max >= 0.0 && overlap_iou_max <= 1.0))
        throw ConfigError("overlap_iou_max must lie in [0,1]");
    const auto [lo, hi] = patch_scale_range;
    if (!(lo > 0.0 && lo <= hi && hi <= 1.0))
        throw ConfigError("patch_scale_range must satisfy 0 < min <= max <= 1");
    for (const auto& step : learning_rate_schedule)
        if (!(step.rate > 0.0) || step.iteration < 0)
            throw ConfigError("learning rates must be positive at non-negative iterations");
}

std::vector<LrStep> RunConfig::effective_schedule() const {
    if (!learning_rate_schedule.empty()) {
        auto s = learning_rate_schedule;
        std::stable_sort(s.begin(), s.end(),
                         [](const LrStep& a, const LrStep& b) { return a.iteration < b.iteration; });
        return s;
    }
    return {{0, 0.01}, {iterations * 3 / 4, 0.001}};
}

double RunConfig::rate_at(std::int64_t iteration) const {
    const auto schedule = effective_schedule();
    double rate = schedule.front().rate;
    for (const auto& step : schedule)
        if (step.iteration <= iteration) rate = step.rate;
    return rate;
}

// --- netpbm -----------------------------------------------------------------

namespace {

int read_header_int(std::istream& in, const fs::path& path) {
    // Skip whitespace and '#' comments.
    for (;;) {
        int ch = in.peek();
        if (ch == EOF) throw DataError("truncated header in " + path.string());
        if (std::isspace(ch)) {
            in.get();
        } else if (ch == '#') {
            std::string line;
            std::getline(in, line);
        } else {
            break;
        }
    }
    int value = 0;
    int digits = 0;
    while (std::isdigit(in.peek())) {
        value = value * 10 + (in.get() - '0');
        if (++digits > 9) throw DataError("header value too large in " + path.string());
    }
    if (digits == 0) throw DataError("malformed header in " + path.string());
    return value;
}

}  // namespace

Netpbm read_netpbm(const fs::path& path, int expected_channels) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    char magic[2] = {};
    in.read(magic, 2);
    const char want = expected_channels == 3 ? '6' : '5';
    if (!in || magic[0] != 'P' || magic[1] != want)
        throw DataError("malformed header in " + path.string() + ": expected P" + want);
    Netpbm img;
    img.channels = expected_channels;
    img.width = read_header_int(in, path);
    img.height = read_header_int(in, path);
    const int maxval = read_header_int(in, path);
    if (img.width < 1 || img.height < 1) throw DataError("empty image in " + path.string());
    if (maxval != 255) throw DataError("unsupported maxval in " + path.string() + " (need 255)");
    if (!std::isspace(in.get())) throw DataError("malformed header in " + path.string());
    img.bytes.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
    in.read(reinterpret_cast<char*>(img.bytes.data()), static_cast<std::streamsize>(img.bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.bytes.size()))
        throw DataError("truncated pixel data in " + path.string());
    return img;
}

void write_netpbm(const fs::path& path, const Netpbm& img) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << 'P' << (img.channels == 3 ? '6' : '5') << '\n'
        << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.bytes.data()),
              static_cast<std::streamsize>(img.bytes.size()));
    if (!out) throw DataError("write failed for " + path.string());
}

// --- dataset ----------------------------------------------------------------

std::vector<LabeledImage> load_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) throw DataError("not a directory: " + root.string());
    std::size_t count = 0;
    for (const auto& entry : fs::directory_iterator(root)) {
        const auto name = entry.path().filename().string();
        if (name.starts_with("image_") && name.ends_with(".ppm")) ++count;
    }
    std::vector<LabeledImage> images;
    images.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const auto image_path = root / ("image_" + std::to_string(k) + ".ppm");
        const auto label_path = root / ("label_" + std::to_string(k) + ".pgm");
        if (!fs::exists(image_path)) throw DataError("missing " + image_path.string());
        if (!fs::exists(label_path)) throw DataError("missing " + label_path.string());
        const Netpbm rgb = read_netpbm(image_path, 3);
        const Netpbm lab = read_netpbm(label_path, 1);
        if (rgb.width != lab.width || rgb.height != lab.height)
            throw DataError("dimension mismatch between " + image_path.string() + " (" +
                            std::to_string(rgb.width) + "x" + std::to_string(rgb.height) +
                            ") and " + label_path.string() + " (" + std::to_string(lab.width) +
                            "x" + std::to_string(lab.height) + ")");
        LabeledImage img;
        img.width = rgb.width;
        img.height = rgb.height;
        img.channels = 3;
        img.ignore_label = kIgnoreLabel;
        img.pixels.resize(rgb.bytes.size());
        std::transform(rgb.bytes.begin(), rgb.bytes.end(), img.pixels.begin(),
                       [](std::uint8_t b) { return b / 255.0; });
        img.labels.assign(lab.bytes.begin(), lab.bytes.end());
        images.push_back(std::move(img));
    }
    return images;
}

void write_dataset(const std::vector<LabeledImage>& images, const fs::path& root) {
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec || !fs::is_directory(root)) throw DataError("cannot create directory " + root.string());
    for (std::size_t k = 0; k < images.size(); ++k) {
        const auto& img = images[k];
        if (img.channels != 3) throw DataError("only 3-channel images can be written as PPM");
        const auto label_path = root / ("label_" + std::to_string(k) + ".pgm");
        Netpbm lab{img.width, img.height, 1, {}};
        lab.bytes.reserve(img.labels.size());
        for (ClassId c : img.labels) {
            const ClassId stored = img.is_ignored(c) ? kIgnoreLabel : c;
            if (stored < 0 || stored > 255)
                throw DataError("label " + std::to_string(c) + " does not fit in 8 bits for " +
                                label_path.string());
            lab.bytes.push_back(static_cast<std::uint8_t>(stored));
        }
        Netpbm rgb{img.width, img.height, 3, {}};
        rgb.bytes.reserve(img.pixels.size());
        for (double v : img.pixels)
            rgb.bytes.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
        write_netpbm(root / ("image_" + std::to_string(k) + ".ppm"), rgb);
        write_netpbm(label_path, lab);
    }
}

// --- synthetic ----------------------------------------------------------------

namespace {

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
    const double hh = std::fmod(h, 1.0) * 6.0;
    const int sector = static_cast<int>(hh);
    const double f = hh - sector;
    const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
    switch (sector) {
        case 0: return {v, t, p};
        case 1: return {q, v, p};
        case 2: return {p, v, t};
        case 3: return {p, q, v};
        case 4: return {t, p, v};
        default: return {v, p, q};
    }
}

}  // namespace

std::vector<LabeledImage> make_synthetic(int num_images, int num_classes, int height, int width,
                                         std::uint64_t seed) {
    if (num_classes < 2) throw ConfigError("make_synthetic needs at least 2 classes");
    if (num_classes > 255) throw ConfigError("make_synthetic supports at most 255 classes");
    if (num_images < 0 || height < 4 || width < 4) throw ConfigError("invalid synthetic extent");

    std::vector<std::array<double, 3>> palette;
    for (int c = 0; c < num_classes; ++c)
        palette.push_back(hsv_to_rgb(static_cast<double>(c) / num_classes, 0.85, c % 2 ? 0.65 : 0.95));

    constexpr double kNoise = 0.08;
    std::vector<LabeledImage> images;
    images.reserve(num_images);
    for (int k = 0; k < num_images; ++k) {
        Rng rng(derive_seed(seed, stream::kSynth, static_cast<std::uint64_t>(k)));
        LabeledImage img;
        img.height = height;
        img.width = width;
        img.channels = 3;
        img.labels.assign(static_cast<std::size_t>(height) * width, 0);
        const int shapes = static_cast<int>(rng.between(1, 3));
        for (int s = 0; s < shapes; ++s) {
            const ClassId cls = static_cast<ClassId>(rng.between(1, num_classes - 1));
            const bool ellipse = rng.index(2) == 1;
            const int sh = static_cast<int>(rng.between(height / 4, height * 3 / 5));
            const int sw = static_cast<int>(rng.between(width / 4, width * 3 / 5));
            const int y0 = static_cast<int>(rng.between(0, height - sh));
            const int x0 = static_cast<int>(rng.between(0, width - sw));
            const double cy = y0 + sh / 2.0, cx = x0 + sw / 2.0;
            for (int y = y0; y < y0 + sh; ++y) {
                for (int x = x0; x < x0 + sw; ++x) {
                    if (ellipse) {
                        const double dy = (y + 0.5 - cy) / (sh / 2.0);
                        const double dx = (x + 0.5 - cx) / (sw / 2.0);
                        if (dy * dy + dx * dx > 1.0) continue;
                    }
                    img.labels[static_cast<std::size_t>(y) * width + x] = cls;
                }
            }
        }
        img.pixels.resize(img.labels.size() * 3);
        for (std::size_t i = 0; i < img.labels.size(); ++i) {
            const auto& base = palette[static_cast<std::size_t>(img.labels[i])];
            for (int c = 0; c < 3; ++c)
                img.pixels[i * 3 + c] = std::clamp(base[c] + rng.uniform(-kNoise, kNoise), 0.0, 1.0);
        }
        images.push_back(std::move(img));
    }
    return images;
}

}  // namespace mm
