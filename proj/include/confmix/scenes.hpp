#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "confmix/detection.hpp"
#include "confmix/image.hpp"
#include "confmix/rng.hpp"

namespace confmix {

/// Synthetic scene recipe: colored shapes (class 0 = rectangle, warm colors;
/// class 1 = ellipse, cool colors) with radial shading over a low-frequency
/// background. Ground truth is exact by construction.
struct SceneSpec {
    int image_size = 64;
    int channels = 3;
    int min_objects = 1;
    int max_objects = 4;
    double min_size = 0.18;     // normalized box side
    double max_size = 0.34;
    double max_gt_iou = 0.3;    // pairwise overlap cap between ground-truth boxes
    double shading = 0.55;      // radial brightness falloff inside a shape
    double bg_low = 0.30;       // background base level range
    double bg_high = 0.42;
    double bg_noise = 0.05;     // low-frequency background modulation amplitude
};

/// Pixel-level transform applied to target-domain images; never touches labels.
struct DomainShift {
    double brightness = 0.0;    // additive delta
    double contrast = 1.0;      // scale around 0.5
    double noise_sigma = 0.0;   // additive Gaussian noise
    double fog = 0.0;           // alpha blend toward fog_gray, <= 0.7 in training configs
    double fog_gray = 0.7;
    double hue_degrees = 0.0;   // rotation around the gray axis

    bool is_identity() const {
        return brightness == 0.0 && contrast == 1.0 && noise_sigma == 0.0 && fog == 0.0 &&
               hue_degrees == 0.0;
    }
};

enum class Domain { Source, Target };

struct LabeledImage {
    Image image;
    std::vector<LabeledBox> boxes;
    Domain domain = Domain::Source;
};

LabeledImage generate_scene(const SceneSpec& spec, Rng& rng);

/// Apply the pixel transform; labels pass through untouched and pixels are
/// clamped back to [0,1].
LabeledImage apply_shift(const LabeledImage& img, const DomainShift& shift, Rng& rng);

struct Dataset {
    std::vector<LabeledImage> items;
    Domain domain = Domain::Source;
    std::uint64_t seed = 0;
    SceneSpec spec;
};

/// Generate `count` scenes from independent per-image streams split off the
/// given seed; `shift` is applied when non-identity.
Dataset generate_dataset(const SceneSpec& spec, const DomainShift& shift, Domain domain,
                         int count, std::uint64_t seed);

// Binary 8-bit PPM I/O (C == 3 only).
void write_ppm(const Image& image, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

/// Directory layout: images/NNNN.ppm + labels/NNNN.txt ("class cx cy w h",
/// normalized, 6 decimals) + meta.json. read(write(d)) == d up to 8-bit
/// pixel quantization and 1e-6 label rounding.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace confmix
