// Shared generators and brute-force reference implementations. The oracles
// restate the contracts directly and stay independent of the library code
// paths they are used to check.
#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "confmix/detection.hpp"
#include "confmix/mixing.hpp"
#include "confmix/rng.hpp"

namespace testsupport {

using namespace confmix;

inline Detection random_detection(Rng& rng, int n_classes = 2) {
    Box mu;
    mu.w = rng.uniform(0.05, 0.4);
    mu.h = rng.uniform(0.05, 0.4);
    mu.cx = rng.uniform(0.0, 1.0);
    mu.cy = rng.uniform(0.0, 1.0);
    std::array<double, 4> sigma{};
    for (double& s : sigma) s = rng.uniform(0.01, 0.99);
    return make_detection({mu, sigma}, static_cast<int>(rng.uniform_int(n_classes)),
                          rng.uniform(0.0, 1.0));
}

inline std::vector<Detection> random_detections(Rng& rng, int count, int n_classes = 2) {
    std::vector<Detection> dets;
    dets.reserve(count);
    for (int i = 0; i < count; ++i) dets.push_back(random_detection(rng, n_classes));
    return dets;
}

/// Reference NMS: repeatedly scan the remaining pool for the best-scoring
/// detection (ties by lower index), keep it, erase same-class overlaps.
inline std::vector<Detection> nms_oracle(const std::vector<Detection>& dets,
                                         double iou_thresh, double conf_thresh,
                                         const ScoreFn& score) {
    std::vector<int> pool;
    for (int i = 0; i < static_cast<int>(dets.size()); ++i)
        if (score(dets[i]) >= conf_thresh) pool.push_back(i);

    std::vector<Detection> kept;
    while (!pool.empty()) {
        int best = pool[0];
        for (int i : pool)
            if (score(dets[i]) > score(dets[best])) best = i;
        kept.push_back(dets[best]);
        std::vector<int> next;
        for (int i : pool) {
            if (i == best) continue;
            if (dets[i].class_id == dets[best].class_id &&
                iou(dets[i].gbox.mu, dets[best].gbox.mu) > iou_thresh)
                continue;
            next.push_back(i);
        }
        pool = std::move(next);
    }
    return kept;
}

/// Reference region assignment: per detection, test every rectangle.
inline std::vector<std::vector<int>> assign_regions_oracle(
    const std::vector<Detection>& dets, const std::vector<PixelRect>& regions, int width,
    int height) {
    std::vector<std::vector<int>> out(regions.size());
    for (int i = 0; i < static_cast<int>(dets.size()); ++i) {
        const double px = dets[i].gbox.mu.cx * width;
        const double py = dets[i].gbox.mu.cy * height;
        for (std::size_t r = 0; r < regions.size(); ++r) {
            const PixelRect& rect = regions[r];
            if (px >= rect.x0 && px < rect.x1 && py >= rect.y0 && py < rect.y1) {
                out[r].push_back(i);
                break;
            }
        }
    }
    return out;
}

/// Reference combined-label construction: center test, clip, drop degenerate.
inline std::vector<Detection> combine_labels_oracle(const std::vector<Detection>& target_dets,
                                                    const std::vector<Detection>& source_dets,
                                                    const MixPlan& plan,
                                                    double eps_box = 1e-3) {
    const auto find_region = [&](const Detection& d) {
        const double px = d.gbox.mu.cx * plan.width;
        const double py = d.gbox.mu.cy * plan.height;
        for (std::size_t r = 0; r < plan.regions.size(); ++r)
            if (px >= plan.regions[r].x0 && px < plan.regions[r].x1 &&
                py >= plan.regions[r].y0 && py < plan.regions[r].y1)
                return static_cast<int>(r);
        return -1;
    };
    const auto selected = [&](int r) {
        return std::find(plan.selected.begin(), plan.selected.end(), r) != plan.selected.end();
    };
    const auto clip = [&](const Detection& d, int r) -> std::optional<Detection> {
        const PixelRect& rect = plan.regions[r];
        const double bx0 = std::max(d.gbox.mu.cx - d.gbox.mu.w / 2,
                                    static_cast<double>(rect.x0) / plan.width);
        const double by0 = std::max(d.gbox.mu.cy - d.gbox.mu.h / 2,
                                    static_cast<double>(rect.y0) / plan.height);
        const double bx1 = std::min(d.gbox.mu.cx + d.gbox.mu.w / 2,
                                    static_cast<double>(rect.x1) / plan.width);
        const double by1 = std::min(d.gbox.mu.cy + d.gbox.mu.h / 2,
                                    static_cast<double>(rect.y1) / plan.height);
        if (bx1 - bx0 <= eps_box || by1 - by0 <= eps_box) return std::nullopt;
        Detection out = d;
        out.gbox.mu = {(bx0 + bx1) / 2, (by0 + by1) / 2, bx1 - bx0, by1 - by0};
        return out;
    };

    std::vector<Detection> combined;
    for (const Detection& d : target_dets) {
        const int r = find_region(d);
        if (r < 0 || !selected(r)) continue;
        if (auto c = clip(d, r)) combined.push_back(*c);
    }
    for (const Detection& d : source_dets) {
        const int r = find_region(d);
        if (r < 0 || selected(r)) continue;
        if (auto c = clip(d, r)) combined.push_back(*c);
    }
    return combined;
}

inline bool same_box(const Box& a, const Box& b, double tol = 1e-12) {
    return std::abs(a.cx - b.cx) <= tol && std::abs(a.cy - b.cy) <= tol &&
           std::abs(a.w - b.w) <= tol && std::abs(a.h - b.h) <= tol;
}

inline bool same_detections(const std::vector<Detection>& a, const std::vector<Detection>& b,
                            double tol = 1e-12) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].class_id != b[i].class_id) return false;
        if (!same_box(a[i].gbox.mu, b[i].gbox.mu, tol)) return false;
        if (std::abs(a[i].c_det - b[i].c_det) > tol) return false;
    }
    return true;
}

}  // namespace testsupport
