#include "confmix/detection.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace confmix {

GaussianBox make_gaussian_box(const Box& mu, const std::array<double, 4>& sigma) {
    if (!mu.valid()) throw std::invalid_argument("GaussianBox: invalid mean box");
    for (double s : sigma)
        if (!(s > 0.0 && s < 1.0))
            throw std::invalid_argument("GaussianBox: variances must lie in (0,1)");
    return {mu, sigma};
}

double box_confidence(const GaussianBox& gbox) {
    const double mean =
        (gbox.sigma[0] + gbox.sigma[1] + gbox.sigma[2] + gbox.sigma[3]) / 4.0;
    return 1.0 - mean;
}

double combined_confidence(double c_det, double c_box) { return c_det * c_box; }

Detection make_detection(const GaussianBox& gbox, int class_id, double c_det) {
    if (class_id < 0) throw std::invalid_argument("Detection: negative class id");
    if (!(c_det >= 0.0 && c_det <= 1.0))
        throw std::invalid_argument("Detection: c_det outside [0,1]");
    Detection d;
    d.gbox = gbox;
    d.class_id = class_id;
    d.c_det = c_det;
    d.c_box = box_confidence(gbox);
    d.c_comb = combined_confidence(c_det, d.c_box);
    return d;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thresh,
                           double conf_thresh, const ScoreFn& score) {
    std::vector<int> order;
    order.reserve(dets.size());
    for (int i = 0; i < static_cast<int>(dets.size()); ++i)
        if (score(dets[i]) >= conf_thresh) order.push_back(i);

    // descending score, ties by lower input index
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return score(dets[a]) > score(dets[b]); });

    std::vector<Detection> kept;
    std::vector<char> suppressed(dets.size(), 0);
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
        const int i = order[oi];
        if (suppressed[i]) continue;
        kept.push_back(dets[i]);
        for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
            const int j = order[oj];
            if (suppressed[j] || dets[j].class_id != dets[i].class_id) continue;
            if (iou(dets[i].gbox.mu, dets[j].gbox.mu) > iou_thresh) suppressed[j] = 1;
        }
    }
    return kept;
}

}  // namespace confmix
