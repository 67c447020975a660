#pragma once

#include <algorithm>
#include <stdexcept>

namespace confmix {

/// Axis-aligned rectangle in corner form, continuous coordinates.
struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
};

inline Rect intersect(const Rect& a, const Rect& b) {
    return {std::max(a.x0, b.x0), std::max(a.y0, b.y0),
            std::min(a.x1, b.x1), std::min(a.y1, b.y1)};
}

/// Intersection-over-union of two corner-form rectangles.
inline double iou(const Rect& a, const Rect& b) {
    const double inter = intersect(a, b).area();
    if (inter <= 0.0) return 0.0;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

/// Bounding box in center form, coordinates normalized to [0,1] relative to
/// the image. Width/height may spill past the image edge; the clipped corner
/// form stays inside the unit square.
struct Box {
    double cx = 0.0, cy = 0.0, w = 0.0, h = 0.0;

    Rect corners() const { return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2}; }

    Rect clipped_corners() const {
        const Rect r = corners();
        return {std::clamp(r.x0, 0.0, 1.0), std::clamp(r.y0, 0.0, 1.0),
                std::clamp(r.x1, 0.0, 1.0), std::clamp(r.y1, 0.0, 1.0)};
    }

    bool valid() const {
        return cx >= 0.0 && cx <= 1.0 && cy >= 0.0 && cy <= 1.0 && w > 0.0 && h > 0.0;
    }
};

inline Box box_from_corners(const Rect& r) {
    return {(r.x0 + r.x1) / 2, (r.y0 + r.y1) / 2, r.x1 - r.x0, r.y1 - r.y0};
}

inline double iou(const Box& a, const Box& b) { return iou(a.corners(), b.corners()); }

}  // namespace confmix
