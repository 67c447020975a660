#include "confmix/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace confmix {

const char* to_string(ScheduleMode m) {
    switch (m) {
        case ScheduleMode::DetOnly: return "det_only";
        case ScheduleMode::CombOnly: return "comb_only";
        case ScheduleMode::DetToCombLinear: return "det_to_comb_linear";
        case ScheduleMode::CombToDetLinear: return "comb_to_det_linear";
        case ScheduleMode::DetToCombDelta: return "det_to_comb_delta";
        case ScheduleMode::CombToDetDelta: return "comb_to_det_delta";
    }
    return "?";
}

std::optional<ScheduleMode> schedule_mode_from_string(const std::string& name) {
    for (ScheduleMode m : {ScheduleMode::DetOnly, ScheduleMode::CombOnly,
                           ScheduleMode::DetToCombLinear, ScheduleMode::CombToDetLinear,
                           ScheduleMode::DetToCombDelta, ScheduleMode::CombToDetDelta})
        if (name == to_string(m)) return m;
    return std::nullopt;
}

double progress_ratio(const Clock& clock, const Schedule& sched) {
    if (sched.total_epochs < 1 || sched.batches_per_epoch < 1)
        throw std::invalid_argument("Schedule: total_epochs and batches_per_epoch must be >= 1");
    const double total = static_cast<double>(sched.batches_per_epoch) * sched.total_epochs;
    if (clock.t < 0 || clock.t > total)
        throw std::invalid_argument("Clock: t outside [0, N_b * e]");
    return static_cast<double>(clock.t) / total;
}

double shifting_weight(double r, double alpha) {
    return 2.0 / (1.0 + std::exp(-alpha * r)) - 1.0;
}

double blend_weight(const Clock& clock, const Schedule& sched) {
    switch (sched.mode) {
        case ScheduleMode::DetOnly:
        case ScheduleMode::CombOnly:
            return 0.0;  // unused by the fixed metrics
        case ScheduleMode::DetToCombLinear:
        case ScheduleMode::CombToDetLinear:
            return progress_ratio(clock, sched);
        case ScheduleMode::DetToCombDelta:
        case ScheduleMode::CombToDetDelta:
            return shifting_weight(progress_ratio(clock, sched), sched.alpha);
    }
    return 0.0;
}

double blended_confidence(const Detection& det, double w, ScheduleMode mode) {
    switch (mode) {
        case ScheduleMode::DetOnly: return det.c_det;
        case ScheduleMode::CombOnly: return det.c_comb;
        case ScheduleMode::DetToCombLinear:
        case ScheduleMode::DetToCombDelta:
            return (1.0 - w) * det.c_det + w * det.c_comb;
        case ScheduleMode::CombToDetLinear:
        case ScheduleMode::CombToDetDelta:
            return (1.0 - w) * det.c_comb + w * det.c_det;
    }
    return det.c_det;
}

ScoreFn blended_score(double w, ScheduleMode mode) {
    return [w, mode](const Detection& d) { return blended_confidence(d, w, mode); };
}

std::vector<Detection> filter_pseudo(const std::vector<Detection>& dets, double c_th,
                                     double w, ScheduleMode mode) {
    std::vector<Detection> kept;
    for (const Detection& d : dets)
        if (blended_confidence(d, w, mode) > c_th) kept.push_back(d);
    return kept;
}

}  // namespace confmix
