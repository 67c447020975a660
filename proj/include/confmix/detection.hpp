#pragma once

#include <array>
#include <functional>
#include <vector>

#include "confmix/geometry.hpp"

namespace confmix {

/// Gaussian bounding box: four coordinate means plus one predicted variance
/// per coordinate. Variances come out of a sigmoid squash, so they live
/// strictly inside (0,1).
struct GaussianBox {
    Box mu;
    std::array<double, 4> sigma{};  // variances for (cx, cy, w, h)
};

GaussianBox make_gaussian_box(const Box& mu, const std::array<double, 4>& sigma);

/// 1 minus the mean predicted coordinate variance.
double box_confidence(const GaussianBox& gbox);

/// Product of detector confidence and box confidence.
double combined_confidence(double c_det, double c_box);

/// One predicted object. The three confidence values are cached at
/// construction; c_comb == c_det * c_box and c_box == 1 - mean(sigma) hold
/// to within 1e-12 by construction.
struct Detection {
    GaussianBox gbox;
    int class_id = 0;
    double c_det = 0.0;
    double c_box = 0.0;
    double c_comb = 0.0;
};

Detection make_detection(const GaussianBox& gbox, int class_id, double c_det);

/// A plain box with a class label: ground truth or a frozen pseudo target.
struct LabeledBox {
    Box box;
    int class_id = 0;
};

/// Selects which confidence ranks and filters a detection inside nms and the
/// region scoring (c_det, c_comb, or the blended schedule metric).
using ScoreFn = std::function<double(const Detection&)>;

inline double score_c_det(const Detection& d) { return d.c_det; }
inline double score_c_comb(const Detection& d) { return d.c_comb; }

/// Class-aware greedy non-maximum suppression. Detections scoring below
/// conf_thresh are dropped, the rest are ranked by score (ties broken by
/// lower input index) and any same-class detection overlapping a kept one
/// with IoU > iou_thresh is suppressed. Output is sorted by descending score.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thresh,
                           double conf_thresh, const ScoreFn& score);

}  // namespace confmix
