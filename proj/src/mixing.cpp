#include "confmix/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace confmix {

const char* to_string(MixStrategy s) {
    switch (s) {
        case MixStrategy::FourDivision: return "four_division";
        case MixStrategy::SixDivision: return "six_division";
        case MixStrategy::NineDivision: return "nine_division";
        case MixStrategy::VerticalHalves: return "vertical_halves";
        case MixStrategy::HorizontalHalves: return "horizontal_halves";
        case MixStrategy::TwoRegionMix: return "two_region_mix";
        case MixStrategy::CutMixRandom: return "cutmix_random";
    }
    return "?";
}

std::optional<MixStrategy> mix_strategy_from_string(const std::string& name) {
    for (MixStrategy s : {MixStrategy::FourDivision, MixStrategy::SixDivision,
                          MixStrategy::NineDivision, MixStrategy::VerticalHalves,
                          MixStrategy::HorizontalHalves, MixStrategy::TwoRegionMix,
                          MixStrategy::CutMixRandom})
        if (name == to_string(s)) return s;
    return std::nullopt;
}

namespace {

std::vector<PixelRect> grid_regions(int rows, int cols, int width, int height) {
    std::vector<PixelRect> regions;
    regions.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
        const int y0 = static_cast<int>(static_cast<long>(height) * r / rows);
        const int y1 = static_cast<int>(static_cast<long>(height) * (r + 1) / rows);
        for (int c = 0; c < cols; ++c) {
            const int x0 = static_cast<int>(static_cast<long>(width) * c / cols);
            const int x1 = static_cast<int>(static_cast<long>(width) * (c + 1) / cols);
            regions.push_back({x0, y0, x1, y1});
        }
    }
    return regions;
}

/// Partition the image along the edges of an inner rectangle so that every
/// piece is a rectangle and one of them is the inner rectangle itself.
std::vector<PixelRect> partition_around(const PixelRect& inner, int width, int height,
                                        int* inner_index) {
    std::vector<int> xs{0, inner.x0, inner.x1, width};
    std::vector<int> ys{0, inner.y0, inner.y1, height};
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

    std::vector<PixelRect> regions;
    *inner_index = -1;
    for (std::size_t r = 0; r + 1 < ys.size(); ++r)
        for (std::size_t c = 0; c + 1 < xs.size(); ++c) {
            PixelRect rect{xs[c], ys[r], xs[c + 1], ys[r + 1]};
            if (rect.x0 == inner.x0 && rect.y0 == inner.y0 && rect.x1 == inner.x1 &&
                rect.y1 == inner.y1)
                *inner_index = static_cast<int>(regions.size());
            regions.push_back(rect);
        }
    return regions;
}

std::vector<std::uint8_t> build_mask(const std::vector<PixelRect>& regions,
                                     const std::vector<int>& selected, int width,
                                     int height) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(width) * height, 1);
    for (int idx : selected) {
        const PixelRect& r = regions[idx];
        for (int y = r.y0; y < r.y1; ++y)
            for (int x = r.x0; x < r.x1; ++x)
                mask[static_cast<std::size_t>(y) * width + x] = 0;
    }
    return mask;
}

}  // namespace

std::vector<PixelRect> make_regions(MixStrategy strategy, int width, int height) {
    switch (strategy) {
        case MixStrategy::FourDivision:
        case MixStrategy::TwoRegionMix: return grid_regions(2, 2, width, height);
        case MixStrategy::SixDivision: return grid_regions(2, 3, width, height);
        case MixStrategy::NineDivision: return grid_regions(3, 3, width, height);
        case MixStrategy::VerticalHalves: return grid_regions(1, 2, width, height);
        case MixStrategy::HorizontalHalves: return grid_regions(2, 1, width, height);
        case MixStrategy::CutMixRandom:
            throw std::invalid_argument("make_regions: CutMixRandom tiles around a sampled rectangle");
    }
    return {};
}

std::vector<std::vector<int>> assign_regions(const std::vector<Detection>& dets,
                                             const std::vector<PixelRect>& regions,
                                             int width, int height) {
    std::vector<std::vector<int>> per_region(regions.size());
    for (int i = 0; i < static_cast<int>(dets.size()); ++i) {
        const double px = dets[i].gbox.mu.cx * width;
        const double py = dets[i].gbox.mu.cy * height;
        for (std::size_t r = 0; r < regions.size(); ++r) {
            if (regions[r].contains(px, py)) {
                per_region[r].push_back(i);
                break;
            }
        }
    }
    return per_region;
}

std::optional<double> region_confidence(const std::vector<Detection>& dets,
                                        const std::vector<int>& indices,
                                        const ScoreFn& score) {
    if (indices.empty()) return std::nullopt;
    double sum = 0.0;
    for (int i : indices) sum += score(dets[i]);
    return sum / static_cast<double>(indices.size());
}

MixPlan plan_mix(const std::vector<Detection>& target_dets, MixStrategy strategy,
                 int width, int height, Rng& rng, const ScoreFn& score) {
    MixPlan plan;
    plan.strategy = strategy;
    plan.width = width;
    plan.height = height;

    if (target_dets.empty()) {
        plan.no_mix = true;
        plan.regions = strategy == MixStrategy::CutMixRandom
                           ? std::vector<PixelRect>{{0, 0, width, height}}
                           : make_regions(strategy, width, height);
        plan.region_conf.assign(plan.regions.size(), std::nullopt);
        plan.mask.assign(static_cast<std::size_t>(width) * height, 1);
        return plan;
    }

    if (strategy == MixStrategy::CutMixRandom) {
        // Confidence-blind baseline: area ratio in [0.25,0.5], aspect in [0.5,2].
        const double area = rng.uniform(0.25, 0.5);
        const double aspect = rng.uniform(0.5, 2.0);
        const double wf = std::min(1.0, std::sqrt(area * aspect));
        const double hf = std::min(1.0, std::sqrt(area / aspect));
        const int rw = std::max(1, static_cast<int>(std::lround(wf * width)));
        const int rh = std::max(1, static_cast<int>(std::lround(hf * height)));
        const int x0 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(width - rw + 1)));
        const int y0 = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(height - rh + 1)));

        int inner = -1;
        plan.regions = partition_around({x0, y0, x0 + rw, y0 + rh}, width, height, &inner);
        plan.selected = {inner};
    } else {
        plan.regions = make_regions(strategy, width, height);
    }

    const auto per_region = assign_regions(target_dets, plan.regions, width, height);
    plan.region_conf.resize(plan.regions.size());
    for (std::size_t r = 0; r < plan.regions.size(); ++r)
        plan.region_conf[r] = region_confidence(target_dets, per_region[r], score);

    if (strategy != MixStrategy::CutMixRandom) {
        // Rank non-empty regions by confidence, ties by lower index.
        std::vector<int> candidates;
        for (int r = 0; r < static_cast<int>(plan.regions.size()); ++r)
            if (plan.region_conf[r]) candidates.push_back(r);
        std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
            return *plan.region_conf[a] > *plan.region_conf[b];
        });
        const std::size_t want = strategy == MixStrategy::TwoRegionMix ? 2 : 1;
        for (std::size_t i = 0; i < candidates.size() && i < want; ++i)
            plan.selected.push_back(candidates[i]);
        std::sort(plan.selected.begin(), plan.selected.end());
    }

    plan.mask = build_mask(plan.regions, plan.selected, width, height);
    return plan;
}

Image compose(const Image& source, const Image& target,
              const std::vector<std::uint8_t>& mask) {
    if (!source.same_shape(target))
        throw std::invalid_argument("compose: source/target shapes differ");
    if (mask.size() != static_cast<std::size_t>(source.width) * source.height)
        throw std::invalid_argument("compose: mask size mismatch");

    Image out(source.width, source.height, source.channels);
    const int c = source.channels;
    for (int y = 0; y < source.height; ++y)
        for (int x = 0; x < source.width; ++x) {
            const Image& side = mask[static_cast<std::size_t>(y) * source.width + x] ? source : target;
            for (int ch = 0; ch < c; ++ch) out.at(x, y, ch) = side.at(x, y, ch);
        }
    return out;
}

namespace {

/// Clip a detection's mean box to a pixel region; nullopt when the clipped
/// box degenerates below eps_box in either dimension.
std::optional<Detection> clip_to_region(const Detection& det, const PixelRect& region,
                                        int width, int height, double eps_box) {
    Rect corners = det.gbox.mu.corners();
    Rect bounds{static_cast<double>(region.x0) / width, static_cast<double>(region.y0) / height,
                static_cast<double>(region.x1) / width, static_cast<double>(region.y1) / height};
    Rect clipped = intersect(corners, bounds);
    if (clipped.width() <= eps_box || clipped.height() <= eps_box) return std::nullopt;
    Detection out = det;
    out.gbox.mu = box_from_corners(clipped);
    return out;
}

}  // namespace

std::vector<Detection> combine_labels(const std::vector<Detection>& target_dets,
                                      const std::vector<Detection>& source_dets,
                                      const MixPlan& plan, double eps_box) {
    if (plan.no_mix) throw std::invalid_argument("combine_labels: no-mix plan");

    std::vector<char> is_selected(plan.regions.size(), 0);
    for (int idx : plan.selected) is_selected[idx] = 1;

    const auto region_of = [&](const Detection& d) -> int {
        const double px = d.gbox.mu.cx * plan.width;
        const double py = d.gbox.mu.cy * plan.height;
        for (std::size_t r = 0; r < plan.regions.size(); ++r)
            if (plan.regions[r].contains(px, py)) return static_cast<int>(r);
        return -1;
    };

    std::vector<Detection> combined;
    for (const Detection& d : target_dets) {
        const int r = region_of(d);
        if (r < 0 || !is_selected[r]) continue;
        if (auto clipped = clip_to_region(d, plan.regions[r], plan.width, plan.height, eps_box))
            combined.push_back(*clipped);
    }
    for (const Detection& d : source_dets) {
        const int r = region_of(d);
        if (r < 0 || is_selected[r]) continue;
        if (auto clipped = clip_to_region(d, plan.regions[r], plan.width, plan.height, eps_box))
            combined.push_back(*clipped);
    }
    return combined;
}

}  // namespace confmix
