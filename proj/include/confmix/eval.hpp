#pragma once

#include <map>
#include <string>
#include <vector>

#include "confmix/detection.hpp"

namespace confmix {

enum class DetRole { TP, FP };

struct DetFlag {
    double score = 0.0;
    int class_id = 0;
    DetRole role = DetRole::FP;
    int matched_gt = -1;  // index into the ground-truth list, -1 for FP
};

struct MatchResult {
    std::vector<DetFlag> det_flags;   // one per detection, input order
    std::vector<bool> gt_matched;     // one per ground-truth box
};

/// Greedy matching at a fixed IoU threshold: detections in descending score
/// order claim the highest-IoU unmatched same-class ground truth with
/// IoU >= iou_thresh; duplicates become FP, unclaimed ground truths are FN.
MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<LabeledBox>& gts,
                             double iou_thresh = 0.5);

/// All-point interpolated AP (area under the precision envelope) from
/// (score, is_tp) pairs of one class and the class's ground-truth count.
double average_precision(std::vector<std::pair<double, bool>> scored_flags, int n_gt);

/// Mean of the per-class APs (classes present in ground truth only).
double mean_ap(const std::map<int, double>& per_class_ap);

struct APReport {
    std::map<int, double> per_class_ap;
    std::map<int, int> gt_count;
    double map = 0.0;
};

/// Dataset-level AP: detections and ground truths are parallel per-image
/// lists; scores rank with c_det.
APReport evaluate_detections(const std::vector<std::vector<Detection>>& dets_per_image,
                             const std::vector<std::vector<LabeledBox>>& gts_per_image,
                             double iou_thresh = 0.5);

/// TP/FP/FN overlay rows ("image_id role class cx cy w h [score]") for
/// qualitative dumps.
std::string overlay_text(int image_id, const std::vector<Detection>& dets,
                         const std::vector<LabeledBox>& gts, double iou_thresh = 0.5);

}  // namespace confmix
