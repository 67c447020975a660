#include "confmix/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace confmix {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
constexpr double kBceEps = 1e-12;

struct CoordLikelihood {
    double p = 0.0;      // clamped likelihood value
    double dp_dmu = 0.0;
    double dp_dsigma = 0.0;
};

CoordLikelihood coord_likelihood(double y, double mu, double sigma, const LossOptions& opts) {
    const bool floored = sigma < opts.sigma_min;
    const double s = floored ? opts.sigma_min : sigma;
    const double diff = y - mu;
    const double kernel = std::exp(-diff * diff / (2.0 * s));

    CoordLikelihood out;
    if (!opts.raw_pdf) {
        out.p = kernel;
        out.dp_dmu = kernel * diff / s;
        out.dp_dsigma = floored ? 0.0 : kernel * diff * diff / (2.0 * s * s);
        return out;
    }
    const double pdf = kernel / std::sqrt(kTwoPi * s);
    if (pdf >= 1.0) {
        out.p = 1.0;  // clamp; gradient dies with it
        return out;
    }
    out.p = pdf;
    out.dp_dmu = pdf * diff / s;
    out.dp_dsigma = floored ? 0.0 : pdf * (diff * diff / (2.0 * s * s) - 1.0 / (2.0 * s));
    return out;
}

}  // namespace

BoxLossResult gaussian_box_loss(const std::vector<MatchedPair>& pairs,
                                const LossOptions& opts) {
    BoxLossResult result;
    result.grads.resize(pairs.size());
    if (pairs.empty()) return result;

    const double n = static_cast<double>(pairs.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const MatchedPair& pair = pairs[i];
        const double y[4] = {pair.target.cx, pair.target.cy, pair.target.w, pair.target.h};
        const double mu[4] = {pair.pred.mu.cx, pair.pred.mu.cy, pair.pred.mu.w, pair.pred.mu.h};
        double mean_p = 0.0;
        for (int k = 0; k < 4; ++k) {
            const CoordLikelihood cl = coord_likelihood(y[k], mu[k], pair.pred.sigma[k], opts);
            mean_p += cl.p / 4.0;
            result.grads[i].d_mu[k] = -cl.dp_dmu / (4.0 * n);
            result.grads[i].d_sigma[k] = -cl.dp_dsigma / (4.0 * n);
        }
        loss += (1.0 - mean_p) / n;
    }
    result.loss = loss;
    return result;
}

ScalarLossResult objectness_loss(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size())
        throw std::invalid_argument("objectness_loss: size mismatch");
    ScalarLossResult result;
    result.grad.resize(pred.size());
    if (pred.empty()) return result;

    const double m = static_cast<double>(pred.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = std::clamp(pred[i], kBceEps, 1.0 - kBceEps);
        const double t = target[i];
        loss -= (t * std::log(p) + (1.0 - t) * std::log(1.0 - p)) / m;
        result.grad[i] = (p - t) / (p * (1.0 - p)) / m;
    }
    result.loss = loss;
    return result;
}

ScalarLossResult classification_loss(std::span<const double> class_scores, int target_class) {
    if (target_class < 0 || target_class >= static_cast<int>(class_scores.size()))
        throw std::invalid_argument("classification_loss: target class out of range");
    std::vector<double> onehot(class_scores.size(), 0.0);
    onehot[target_class] = 1.0;
    return objectness_loss(class_scores, onehot);
}

double consistency_weight(const std::vector<Detection>& combined, double c_th_gamma,
                          double w, ScheduleMode mode) {
    if (combined.empty()) return 0.0;
    std::size_t above = 0;
    for (const Detection& d : combined)
        if (blended_confidence(d, w, mode) >= c_th_gamma) ++above;
    return static_cast<double>(above) / static_cast<double>(combined.size());
}

double total_loss(double l_det, double l_cons, double gamma) {
    return l_det + gamma * l_cons;
}

}  // namespace confmix
