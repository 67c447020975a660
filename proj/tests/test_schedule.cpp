#include "doctest.h"

#include <cmath>

#include "confmix/schedule.hpp"
#include "test_support.hpp"

using namespace confmix;
using namespace testsupport;

namespace {

// extended-precision reference for the shifting weight
long double shifting_weight_ref(long double r, long double alpha) {
    return 2.0L / (1.0L + std::exp(-alpha * r)) - 1.0L;
}

Detection det_with_conf(double c_det, const std::array<double, 4>& sigma) {
    return make_detection({{0.5, 0.5, 0.2, 0.2}, sigma}, 0, c_det);
}

}  // namespace

TEST_CASE("progress_ratio endpoints and midpoint") {
    Schedule s;
    s.total_epochs = 5;
    s.batches_per_epoch = 100;
    CHECK(progress_ratio({0}, s) == doctest::Approx(0.0));
    CHECK(progress_ratio({500}, s) == doctest::Approx(1.0));
    CHECK(progress_ratio({250}, s) == doctest::Approx(0.5));
    CHECK_THROWS_AS(progress_ratio({501}, s), std::invalid_argument);
}

TEST_CASE("shifting_weight against the extended-precision oracle") {
    CHECK(shifting_weight(0.0, 5.0) == doctest::Approx(0.0));
    CHECK(std::abs(shifting_weight(1.0, 5.0) -
                   static_cast<double>(shifting_weight_ref(1.0L, 5.0L))) < 1e-12);
    CHECK(std::abs(shifting_weight(0.5, 5.0) -
                   static_cast<double>(shifting_weight_ref(0.5L, 5.0L))) < 1e-12);
    CHECK(shifting_weight(1.0, 5.0) == doctest::Approx(0.986614).epsilon(1e-6));
    CHECK(shifting_weight(0.5, 5.0) == doctest::Approx(0.848284).epsilon(1e-6));
    // same curve as tanh(alpha*r/2)
    CHECK(shifting_weight(0.31, 7.3) == doctest::Approx(std::tanh(7.3 * 0.31 / 2)));
}

TEST_CASE("shifting_weight is strictly increasing and stays below 1") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const double alpha = rng.uniform(0.5, 12.0);
        const double r1 = rng.uniform(0.0, 1.0);
        const double r2 = rng.uniform(0.0, 1.0);
        const double lo = std::min(r1, r2), hi = std::max(r1, r2);
        if (hi - lo > 1e-9)
            CHECK(shifting_weight(hi, alpha) > shifting_weight(lo, alpha));
        CHECK(shifting_weight(hi, alpha) < 1.0);
        CHECK(shifting_weight(lo, alpha) >= 0.0);
    }
}

TEST_CASE("blended_confidence endpoint semantics") {
    const Detection d = det_with_conf(0.8, {0.2, 0.3, 0.3, 0.2});  // c_box = 0.75
    CHECK(blended_confidence(d, 0.0, ScheduleMode::DetToCombDelta) == doctest::Approx(0.8));
    CHECK(blended_confidence(d, 1.0, ScheduleMode::DetToCombDelta) ==
          doctest::Approx(d.c_comb));
    CHECK(blended_confidence(d, 0.3, ScheduleMode::DetOnly) == doctest::Approx(0.8));
    CHECK(blended_confidence(d, 0.3, ScheduleMode::CombOnly) == doctest::Approx(d.c_comb));
    // reversed direction swaps the endpoints
    CHECK(blended_confidence(d, 0.0, ScheduleMode::CombToDetDelta) ==
          doctest::Approx(d.c_comb));
    CHECK(blended_confidence(d, 1.0, ScheduleMode::CombToDetDelta) == doctest::Approx(0.8));
}

TEST_CASE("blended_confidence worked example") {
    // c_det = 0.8, c_comb = 0.6 -> 0.25 blend gives 0.75
    const Detection d = det_with_conf(0.8, {0.25, 0.25, 0.25, 0.25});
    CHECK(d.c_comb == doctest::Approx(0.6));
    CHECK(blended_confidence(d, 0.25, ScheduleMode::DetToCombDelta) == doctest::Approx(0.75));
}

TEST_CASE("blend_weight by mode") {
    Schedule s;
    s.alpha = 5.0;
    s.total_epochs = 10;
    s.batches_per_epoch = 10;
    const Clock half{50};
    s.mode = ScheduleMode::DetToCombLinear;
    CHECK(blend_weight(half, s) == doctest::Approx(0.5));
    s.mode = ScheduleMode::DetToCombDelta;
    CHECK(blend_weight(half, s) == doctest::Approx(shifting_weight(0.5, 5.0)));
    s.mode = ScheduleMode::DetOnly;
    CHECK(blend_weight(half, s) == doctest::Approx(0.0));
}

TEST_CASE("filter_pseudo keeps strictly above the threshold") {
    const Detection low = det_with_conf(0.2, {0.5, 0.5, 0.5, 0.5});
    const Detection edge = det_with_conf(0.25, {0.2, 0.2, 0.2, 0.2});
    const Detection high = det_with_conf(0.9, {0.2, 0.2, 0.2, 0.2});
    const auto kept = filter_pseudo({low, edge, high}, 0.25, 0.0, ScheduleMode::DetToCombDelta);
    REQUIRE(kept.size() == 1);  // 0.25 is not > 0.25
    CHECK(kept[0].c_det == doctest::Approx(0.9));

    // delta endpoints flip the verdict for a detection with weak c_comb
    const Detection d = det_with_conf(0.3, {0.9, 0.9, 0.9, 0.9});  // c_comb = 0.03
    CHECK(filter_pseudo({d}, 0.25, 0.0, ScheduleMode::DetToCombDelta).size() == 1);
    CHECK(filter_pseudo({d}, 0.25, 1.0, ScheduleMode::DetToCombDelta).empty());
}

TEST_CASE("filter_pseudo equals the per-detection threshold check") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const auto dets = random_detections(rng, 20);
        const double c_th = rng.uniform(0.1, 0.6);
        const double w = rng.uniform(0.0, 1.0);
        const auto kept = filter_pseudo(dets, c_th, w, ScheduleMode::DetToCombDelta);
        std::vector<Detection> expected;
        for (const Detection& d : dets)
            if ((1.0 - w) * d.c_det + w * d.c_comb > c_th) expected.push_back(d);
        CHECK(same_detections(kept, expected));
    }
}

TEST_CASE("kept set tightens monotonically as the weight grows") {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const auto dets = random_detections(rng, 30);
        double w1 = rng.uniform(0.0, 1.0), w2 = rng.uniform(0.0, 1.0);
        if (w1 > w2) std::swap(w1, w2);
        const auto kept1 = filter_pseudo(dets, 0.25, w1, ScheduleMode::DetToCombDelta);
        const auto kept2 = filter_pseudo(dets, 0.25, w2, ScheduleMode::DetToCombDelta);
        CHECK(kept2.size() <= kept1.size());
        // c_comb <= c_det makes the blend non-increasing in w, so kept2 is a subset
        for (const Detection& d : kept2) {
            bool found = false;
            for (const Detection& e : kept1)
                if (same_box(d.gbox.mu, e.gbox.mu) && d.c_det == e.c_det) found = true;
            CHECK(found);
        }
    }
}

TEST_CASE("det_to_comb at r=0 keeps exactly the det-only set") {
    Rng rng(14);
    const auto dets = random_detections(rng, 40);
    Schedule s;
    s.mode = ScheduleMode::DetToCombDelta;
    s.total_epochs = 5;
    s.batches_per_epoch = 10;
    const double w = blend_weight({0}, s);
    CHECK(same_detections(filter_pseudo(dets, 0.25, w, ScheduleMode::DetToCombDelta),
                          filter_pseudo(dets, 0.25, 0.0, ScheduleMode::DetOnly)));
}

TEST_CASE("schedule mode names round trip") {
    for (ScheduleMode m : {ScheduleMode::DetOnly, ScheduleMode::CombOnly,
                           ScheduleMode::DetToCombLinear, ScheduleMode::CombToDetLinear,
                           ScheduleMode::DetToCombDelta, ScheduleMode::CombToDetDelta})
        CHECK(schedule_mode_from_string(to_string(m)) == m);
    CHECK(!schedule_mode_from_string("bogus"));
}
