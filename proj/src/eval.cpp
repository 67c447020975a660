#include "confmix/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace confmix {

MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<LabeledBox>& gts, double iou_thresh) {
    MatchResult result;
    result.det_flags.resize(dets.size());
    result.gt_matched.assign(gts.size(), false);

    std::vector<int> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return dets[a].c_det > dets[b].c_det; });

    for (int i : order) {
        DetFlag& flag = result.det_flags[i];
        flag.score = dets[i].c_det;
        flag.class_id = dets[i].class_id;
        double best_iou = 0.0;
        int best_gt = -1;
        for (int g = 0; g < static_cast<int>(gts.size()); ++g) {
            if (result.gt_matched[g] || gts[g].class_id != dets[i].class_id) continue;
            const double v = iou(dets[i].gbox.mu, gts[g].box);
            if (v >= iou_thresh && v > best_iou) {
                best_iou = v;
                best_gt = g;
            }
        }
        if (best_gt >= 0) {
            flag.role = DetRole::TP;
            flag.matched_gt = best_gt;
            result.gt_matched[best_gt] = true;
        }
    }
    return result;
}

double average_precision(std::vector<std::pair<double, bool>> scored_flags, int n_gt) {
    if (n_gt <= 0 || scored_flags.empty()) return 0.0;
    std::stable_sort(scored_flags.begin(), scored_flags.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    // cumulative precision/recall sweep
    std::vector<double> precision(scored_flags.size()), recall(scored_flags.size());
    int tp = 0;
    for (std::size_t i = 0; i < scored_flags.size(); ++i) {
        if (scored_flags[i].second) ++tp;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(tp) / n_gt;
    }
    // precision envelope from the right, then area under it
    for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i)
        precision[i] = std::max(precision[i], precision[i + 1]);
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
        ap += (recall[i] - prev_recall) * precision[i];
        prev_recall = recall[i];
    }
    return ap;
}

double mean_ap(const std::map<int, double>& per_class_ap) {
    if (per_class_ap.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [cls, ap] : per_class_ap) sum += ap;
    return sum / static_cast<double>(per_class_ap.size());
}

APReport evaluate_detections(const std::vector<std::vector<Detection>>& dets_per_image,
                             const std::vector<std::vector<LabeledBox>>& gts_per_image,
                             double iou_thresh) {
    APReport report;
    std::map<int, std::vector<std::pair<double, bool>>> flags_by_class;
    for (const auto& gts : gts_per_image)
        for (const LabeledBox& gt : gts) ++report.gt_count[gt.class_id];

    for (std::size_t i = 0; i < dets_per_image.size(); ++i) {
        const MatchResult mr =
            match_detections(dets_per_image[i], gts_per_image[i], iou_thresh);
        for (const DetFlag& flag : mr.det_flags)
            flags_by_class[flag.class_id].push_back({flag.score, flag.role == DetRole::TP});
    }

    for (const auto& [cls, n_gt] : report.gt_count) {
        auto it = flags_by_class.find(cls);
        report.per_class_ap[cls] =
            it == flags_by_class.end() ? 0.0 : average_precision(it->second, n_gt);
    }
    report.map = mean_ap(report.per_class_ap);
    return report;
}

std::string overlay_text(int image_id, const std::vector<Detection>& dets,
                         const std::vector<LabeledBox>& gts, double iou_thresh) {
    const MatchResult mr = match_detections(dets, gts, iou_thresh);
    std::ostringstream os;
    char line[192];
    for (std::size_t i = 0; i < dets.size(); ++i) {
        const Box& b = dets[i].gbox.mu;
        std::snprintf(line, sizeof(line), "%04d %s %d %.6f %.6f %.6f %.6f %.4f\n", image_id,
                      mr.det_flags[i].role == DetRole::TP ? "TP" : "FP", dets[i].class_id,
                      b.cx, b.cy, b.w, b.h, dets[i].c_det);
        os << line;
    }
    for (std::size_t g = 0; g < gts.size(); ++g) {
        if (mr.gt_matched[g]) continue;
        const Box& b = gts[g].box;
        std::snprintf(line, sizeof(line), "%04d FN %d %.6f %.6f %.6f %.6f\n", image_id,
                      gts[g].class_id, b.cx, b.cy, b.w, b.h);
        os << line;
    }
    return os.str();
}

}  // namespace confmix
