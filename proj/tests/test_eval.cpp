#include "doctest.h"

#include "confmix/eval.hpp"
#include "test_support.hpp"

using namespace confmix;
using namespace testsupport;

namespace {

Detection det_for(const Box& b, int class_id, double score) {
    return make_detection({b, {0.1, 0.1, 0.1, 0.1}}, class_id, score);
}

/// Independent matcher: walks detections in score order (stable on ties) and
/// recomputes every IoU from scratch against the not-yet-claimed ground truths.
MatchResult match_oracle(const std::vector<Detection>& dets,
                         const std::vector<LabeledBox>& gts, double iou_thresh) {
    MatchResult res;
    res.det_flags.resize(dets.size());
    res.gt_matched.assign(gts.size(), false);
    std::vector<int> order(dets.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return dets[a].c_det > dets[b].c_det; });
    for (int i : order) {
        res.det_flags[i] = {dets[i].c_det, dets[i].class_id, DetRole::FP, -1};
        int pick = -1;
        double pick_iou = 0.0;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (res.gt_matched[g] || gts[g].class_id != dets[i].class_id) continue;
            const double v = iou(dets[i].gbox.mu, gts[g].box);
            if (v >= iou_thresh && v > pick_iou) {
                pick = static_cast<int>(g);
                pick_iou = v;
            }
        }
        if (pick >= 0) {
            res.det_flags[i].role = DetRole::TP;
            res.det_flags[i].matched_gt = pick;
            res.gt_matched[pick] = true;
        }
    }
    return res;
}

}  // namespace

TEST_CASE("perfect detections are all TPs") {
    Rng rng(81);
    std::vector<LabeledBox> gts;
    std::vector<Detection> dets;
    for (int i = 0; i < 4; ++i) {
        Box b{0.2 + 0.2 * i, 0.5, 0.1, 0.1};
        gts.push_back({b, i % 2});
        dets.push_back(det_for(b, i % 2, 0.9 - 0.1 * i));
    }
    const MatchResult mr = match_detections(dets, gts, 0.5);
    for (const DetFlag& f : mr.det_flags) CHECK(f.role == DetRole::TP);
    for (bool m : mr.gt_matched) CHECK(m);
}

TEST_CASE("wrong-class detections are all FPs") {
    std::vector<LabeledBox> gts{{Box{0.5, 0.5, 0.2, 0.2}, 0}};
    std::vector<Detection> dets{det_for(Box{0.5, 0.5, 0.2, 0.2}, 1, 0.9)};
    const MatchResult mr = match_detections(dets, gts, 0.5);
    CHECK(mr.det_flags[0].role == DetRole::FP);
    CHECK(!mr.gt_matched[0]);
}

TEST_CASE("duplicate detections: best score claims the ground truth") {
    std::vector<LabeledBox> gts{{Box{0.5, 0.5, 0.2, 0.2}, 0}};
    std::vector<Detection> dets{det_for(Box{0.5, 0.5, 0.2, 0.2}, 0, 0.6),
                                det_for(Box{0.51, 0.5, 0.2, 0.2}, 0, 0.9)};
    const MatchResult mr = match_detections(dets, gts, 0.5);
    CHECK(mr.det_flags[0].role == DetRole::FP);
    CHECK(mr.det_flags[1].role == DetRole::TP);
}

TEST_CASE("match_detections agrees with the exhaustive oracle") {
    Rng rng(82);
    for (int trial = 0; trial < 500; ++trial) {
        const int n_gt = 1 + static_cast<int>(rng.uniform_int(10));
        std::vector<LabeledBox> gts;
        for (int i = 0; i < n_gt; ++i) {
            const Detection d = random_detection(rng);
            gts.push_back({d.gbox.mu, d.class_id});
        }
        std::vector<Detection> dets;
        const int n_det = 1 + static_cast<int>(rng.uniform_int(15));
        for (int i = 0; i < n_det; ++i) {
            if (rng.uniform() < 0.6 && !gts.empty()) {
                // jittered copy of a ground truth so matches actually occur
                const LabeledBox& gt = gts[rng.uniform_int(gts.size())];
                Box b = gt.box;
                b.cx = std::clamp(b.cx + rng.uniform(-0.05, 0.05), 0.0, 1.0);
                b.cy = std::clamp(b.cy + rng.uniform(-0.05, 0.05), 0.0, 1.0);
                dets.push_back(det_for(b, gt.class_id, rng.uniform()));
            } else {
                dets.push_back(random_detection(rng));
            }
        }
        const MatchResult got = match_detections(dets, gts, 0.5);
        const MatchResult want = match_oracle(dets, gts, 0.5);
        REQUIRE(got.det_flags.size() == want.det_flags.size());
        for (std::size_t i = 0; i < got.det_flags.size(); ++i) {
            CHECK(got.det_flags[i].role == want.det_flags[i].role);
            CHECK(got.det_flags[i].matched_gt == want.det_flags[i].matched_gt);
        }
        CHECK(got.gt_matched == want.gt_matched);
    }
}

TEST_CASE("average_precision closed forms") {
    CHECK(average_precision({{0.7, true}}, 1) == doctest::Approx(1.0));
    // FP ranked above the TP: precision at full recall is 1/2
    CHECK(average_precision({{0.9, false}, {0.5, true}}, 1) == doctest::Approx(0.5));
    CHECK(average_precision({}, 3) == doctest::Approx(0.0));
}

TEST_CASE("ap is invariant under monotone score rescaling") {
    Rng rng(83);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::pair<double, bool>> flags;
        const int n = 3 + static_cast<int>(rng.uniform_int(20));
        for (int i = 0; i < n; ++i) flags.push_back({rng.uniform(), rng.uniform() < 0.5});
        const int n_gt = 1 + static_cast<int>(rng.uniform_int(10));
        auto rescaled = flags;
        for (auto& [s, tp] : rescaled) s = 0.1 + 0.5 * s * s + s;  // strictly monotone
        CHECK(average_precision(flags, n_gt) ==
              doctest::Approx(average_precision(rescaled, n_gt)));
    }
}

TEST_CASE("zero-score FPs never raise ap; fresh TPs never lower it") {
    Rng rng(84);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::pair<double, bool>> flags;
        const int n = 3 + static_cast<int>(rng.uniform_int(15));
        for (int i = 0; i < n; ++i)
            flags.push_back({rng.uniform(0.05, 1.0), rng.uniform() < 0.5});
        const int n_gt = static_cast<int>(flags.size()) + 2;
        const double base = average_precision(flags, n_gt);

        auto with_fp = flags;
        with_fp.push_back({0.0, false});
        CHECK(average_precision(with_fp, n_gt) <= base + 1e-12);

        auto with_tp = flags;
        with_tp.push_back({rng.uniform(), true});
        CHECK(average_precision(with_tp, n_gt) >= base - 1e-12);
    }
}

TEST_CASE("mean_ap averages classes present in the ground truth") {
    CHECK(mean_ap({{0, 0.7}}) == doctest::Approx(0.7));
    CHECK(mean_ap({{0, 1.0}, {1, 0.0}}) == doctest::Approx(0.5));
    CHECK(mean_ap({}) == doctest::Approx(0.0));
}

TEST_CASE("evaluate_detections matches a per-class recomputation") {
    Rng rng(85);
    const int n_classes = 8;
    std::vector<std::vector<Detection>> dets(6);
    std::vector<std::vector<LabeledBox>> gts(6);
    for (int img = 0; img < 6; ++img) {
        for (int i = 0; i < 6; ++i) {
            const Detection d = random_detection(rng, n_classes);
            gts[img].push_back({d.gbox.mu, d.class_id});
        }
        for (int i = 0; i < 8; ++i) dets[img].push_back(random_detection(rng, n_classes));
        // plant some true positives
        for (int i = 0; i < 3; ++i) {
            const LabeledBox& gt = gts[img][i];
            dets[img].push_back(det_for(gt.box, gt.class_id, rng.uniform(0.5, 1.0)));
        }
    }
    const APReport report = evaluate_detections(dets, gts, 0.5);

    // recompute each class AP independently
    std::map<int, std::vector<std::pair<double, bool>>> flags;
    std::map<int, int> n_gt;
    for (int img = 0; img < 6; ++img) {
        const MatchResult mr = match_detections(dets[img], gts[img], 0.5);
        for (const DetFlag& f : mr.det_flags)
            flags[f.class_id].push_back({f.score, f.role == DetRole::TP});
        for (const LabeledBox& gt : gts[img]) ++n_gt[gt.class_id];
    }
    double sum = 0.0;
    int cnt = 0;
    for (const auto& [cls, count] : n_gt) {
        const double ap = average_precision(flags[cls], count);
        CHECK(report.per_class_ap.at(cls) == doctest::Approx(ap));
        sum += ap;
        ++cnt;
    }
    CHECK(report.map == doctest::Approx(sum / cnt));
}

TEST_CASE("overlay text labels every row with a role") {
    std::vector<LabeledBox> gts{{Box{0.5, 0.5, 0.2, 0.2}, 0}, {Box{0.2, 0.2, 0.1, 0.1}, 1}};
    std::vector<Detection> dets{det_for(Box{0.5, 0.5, 0.2, 0.2}, 0, 0.9)};
    const std::string text = overlay_text(3, dets, gts, 0.5);
    CHECK(text.find("0003 TP 0") != std::string::npos);
    CHECK(text.find("0003 FN 1") != std::string::npos);
    CHECK(text.find("FP") == std::string::npos);
}
