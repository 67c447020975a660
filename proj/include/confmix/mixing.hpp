#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "confmix/detection.hpp"
#include "confmix/image.hpp"
#include "confmix/rng.hpp"

namespace confmix {

enum class MixStrategy {
    FourDivision,      // 2x2 grid, best region (default)
    SixDivision,       // 2x3 grid
    NineDivision,      // 3x3 grid
    VerticalHalves,    // left/right halves
    HorizontalHalves,  // top/bottom halves
    TwoRegionMix,      // 2x2 grid, two best regions
    CutMixRandom,      // random rectangle, confidence-blind
};

const char* to_string(MixStrategy s);
std::optional<MixStrategy> mix_strategy_from_string(const std::string& name);

/// Half-open pixel rectangle [x0,x1) x [y0,y1).
struct PixelRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    long area() const { return static_cast<long>(width()) * height(); }
    bool contains(double px, double py) const {
        return px >= x0 && px < x1 && py >= y0 && py < y1;
    }
};

struct MixPlan {
    MixStrategy strategy = MixStrategy::FourDivision;
    std::vector<PixelRect> regions;                    // tiles the image, row-major
    std::vector<std::optional<double>> region_conf;    // nullopt marks an empty region
    std::vector<int> selected;                         // indices into regions
    std::vector<std::uint8_t> mask;                    // W*H; 1 = source pixel, 0 = target pixel
    int width = 0, height = 0;
    bool no_mix = false;                               // every region empty: skip mixing
};

/// Grid tiling for the non-random strategies, row-major region order.
std::vector<PixelRect> make_regions(MixStrategy strategy, int width, int height);

/// Partition detections over regions by box center (half-open boundary rule).
/// Returns one list of detection indices per region.
std::vector<std::vector<int>> assign_regions(const std::vector<Detection>& dets,
                                             const std::vector<PixelRect>& regions,
                                             int width, int height);

/// Mean selected confidence over the given detections; empty -> nullopt,
/// which is never selectable.
std::optional<double> region_confidence(const std::vector<Detection>& dets,
                                        const std::vector<int>& indices,
                                        const ScoreFn& score);

/// Build the full mixing plan for one target image: tile, score regions,
/// select (argmax; top-2 for TwoRegionMix; rng rectangle for CutMixRandom)
/// and emit the pixel mask. No target detections -> "no-mix" plan.
MixPlan plan_mix(const std::vector<Detection>& target_dets, MixStrategy strategy,
                 int width, int height, Rng& rng, const ScoreFn& score);

/// x_M = mask (.) x_S + (1-mask) (.) x_T, pixel-wise.
Image compose(const Image& source, const Image& target, const std::vector<std::uint8_t>& mask);

/// Combined pseudo-label set for the mixed image: target detections centered
/// inside a selected region plus source detections centered outside, each
/// clipped to its region rectangle. Clipped boxes thinner than eps_box
/// (normalized) are dropped.
std::vector<Detection> combine_labels(const std::vector<Detection>& target_dets,
                                      const std::vector<Detection>& source_dets,
                                      const MixPlan& plan, double eps_box = 1e-3);

}  // namespace confmix
