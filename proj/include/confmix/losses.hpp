#pragma once

#include <array>
#include <span>
#include <vector>

#include "confmix/detection.hpp"
#include "confmix/schedule.hpp"

namespace confmix {

struct LossOptions {
    bool raw_pdf = false;     // literal Gaussian pdf (clamped to [0,1]) instead of the kernel
    double sigma_min = 1e-3;  // variance floor
    // term weights for the assembled detector loss
    double lambda_box = 1.0;
    double lambda_obj = 1.0;
    double lambda_cl = 1.0;
};

/// One regression/classification target paired with the cell prediction
/// responsible for it.
struct MatchedPair {
    GaussianBox pred;
    double objectness = 0.0;
    std::vector<double> class_scores;
    Box target;
    int target_class = 0;
};

struct BoxPairGrad {
    std::array<double, 4> d_mu{};
    std::array<double, 4> d_sigma{};
};

struct BoxLossResult {
    double loss = 0.0;
    std::vector<BoxPairGrad> grads;  // one entry per pair
};

/// L_box = (1/N) sum_i (1 - mean_k p(y_k | mu_k, sigma_k)). The default
/// per-coordinate likelihood is exp(-(y-mu)^2 / (2*sigma)), which keeps the
/// loss in [0,1); raw_pdf switches to the literal normal pdf clamped to
/// [0,1]. Variances are floored at sigma_min. Empty input -> loss 0.
BoxLossResult gaussian_box_loss(const std::vector<MatchedPair>& pairs,
                                const LossOptions& opts = {});

struct ScalarLossResult {
    double loss = 0.0;
    std::vector<double> grad;  // w.r.t. the predictions
};

/// Mean binary cross-entropy over cells; predictions must be squashed into (0,1).
ScalarLossResult objectness_loss(std::span<const double> pred, std::span<const double> target);

/// One-vs-all BCE over the class scores of one matched cell, averaged over classes.
ScalarLossResult classification_loss(std::span<const double> class_scores, int target_class);

/// gamma = fraction of the combined pseudo detections whose blended
/// confidence is >= c_th_gamma; empty set -> 0.
double consistency_weight(const std::vector<Detection>& combined, double c_th_gamma,
                          double w, ScheduleMode mode);

/// L_total = l_det + gamma * l_cons.
double total_loss(double l_det, double l_cons, double gamma);

struct LossBreakdown {
    double l_box = 0.0;
    double l_obj = 0.0;
    double l_cl = 0.0;
    double l_det = 0.0;
    double l_cons = 0.0;
    double gamma = 0.0;
    double l_total = 0.0;
};

}  // namespace confmix
