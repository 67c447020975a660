#pragma once

#include <optional>
#include <string>
#include <vector>

#include "confmix/detection.hpp"

namespace confmix {

/// How the pseudo-label confidence metric evolves over the adaptive run.
enum class ScheduleMode {
    DetOnly,         // always c_det
    CombOnly,        // always c_comb
    DetToCombLinear, // c_det -> c_comb, weight r
    CombToDetLinear, // c_comb -> c_det, weight r
    DetToCombDelta,  // c_det -> c_comb, weight delta(r) (default)
    CombToDetDelta,  // c_comb -> c_det, weight delta(r)
};

const char* to_string(ScheduleMode m);
std::optional<ScheduleMode> schedule_mode_from_string(const std::string& name);

struct Schedule {
    double alpha = 5.0;        // scale modulator of the shifting weight
    int total_epochs = 1;      // e
    int batches_per_epoch = 1; // N_b
    ScheduleMode mode = ScheduleMode::DetToCombDelta;
};

/// Global iteration counter over the adaptive run, 0-based.
struct Clock {
    long t = 0;
};

/// r = t / (N_b * e), in [0,1].
double progress_ratio(const Clock& clock, const Schedule& sched);

/// delta = 2 / (1 + exp(-alpha * r)) - 1, in [0,1) for finite alpha*r.
double shifting_weight(double r, double alpha);

/// The blend weight the current mode feeds to blended_confidence: delta(r)
/// for the non-linear modes, r itself for the linear ones, 0 for the fixed
/// metrics (where the weight is unused).
double blend_weight(const Clock& clock, const Schedule& sched);

/// C = (1-w)*c_det + w*c_comb for the det->comb directions (endpoints swap
/// for comb->det); the fixed modes return the single metric.
double blended_confidence(const Detection& det, double w, ScheduleMode mode);

/// Score selector closing over the schedule state, for nms / region scoring.
ScoreFn blended_score(double w, ScheduleMode mode);

/// Keep post-NMS detections whose blended confidence strictly exceeds c_th.
std::vector<Detection> filter_pseudo(const std::vector<Detection>& dets, double c_th,
                                     double w, ScheduleMode mode);

}  // namespace confmix
