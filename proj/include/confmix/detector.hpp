#pragma once

#include <filesystem>
#include <vector>

#include "confmix/detection.hpp"
#include "confmix/image.hpp"
#include "confmix/losses.hpp"
#include "confmix/rng.hpp"

namespace confmix {

struct DetectorConfig {
    int grid = 8;       // G: cells per image side
    int classes = 2;    // K
    int hidden = 32;    // MLP hidden width
    int channels = 3;   // image channels the descriptor expects
    double sigma_bias = -2.0;  // initial variance-head bias (post-squash ~0.12)
};

inline int descriptor_dim(const DetectorConfig& cfg) { return 3 * cfg.channels + 4; }
inline int output_dim(const DetectorConfig& cfg) { return 1 + cfg.classes + 4 + 4; }

/// Per-cell two-layer perceptron heads over the patch descriptors. Every
/// grid cell owns its own weights, so a loss term touching one cell moves
/// only that cell's parameters. Raw outputs per cell: [objectness logit,
/// K class logits, 4 center/extent logits, 4 variance logits].
struct ToyDetectorParams {
    DetectorConfig cfg;
    std::vector<double> w1;  // cells x hidden x descriptor_dim
    std::vector<double> b1;  // cells x hidden
    std::vector<double> w2;  // cells x output_dim x hidden
    std::vector<double> b2;  // cells x output_dim

    std::size_t count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
};

ToyDetectorParams init_params(const DetectorConfig& cfg, Rng& rng);

/// Gradient (or velocity) buffers shaped like the parameters.
struct ParamGrads {
    std::vector<double> w1, b1, w2, b2;

    ParamGrads() = default;
    explicit ParamGrads(const ToyDetectorParams& p)
        : w1(p.w1.size()), b1(p.b1.size()), w2(p.w2.size()), b2(p.b2.size()) {}

    void add_scaled(const ParamGrads& o, double s);
    void clear();
};

/// Per-cell descriptor: the cell's own per-channel mean, then per-channel
/// mean and standard deviation over a one-cell context window, then a 4-bin
/// signed gradient-orientation histogram of the context window. Length
/// grid*grid*descriptor_dim, cell-major (row-major cells).
std::vector<double> patch_descriptors(const Image& image, const DetectorConfig& cfg);

struct CellPrediction {
    double objectness = 0.0;            // in (0,1)
    std::vector<double> class_probs;    // independent sigmoids
    GaussianBox gbox;                   // decoded box + variances
    int best_class = 0;
    double c_det = 0.0;                 // objectness * max class prob
};

struct ForwardResult {
    int grid = 0;
    std::vector<CellPrediction> cells;   // G*G raw grid predictions
    std::vector<Detection> detections;   // one decoded detection per cell
};

/// Run the head over every cell. Image sides must be divisible by the grid.
ForwardResult forward(const ToyDetectorParams& params, const Image& image);

struct CellTarget {
    bool matched = false;
    Box box;
    int class_id = -1;
};

/// YOLO-style center-cell assignment: each target lands in the cell holding
/// its center (half-open rule); if several share a cell the largest-area one
/// wins. Objectness target is 1 exactly on matched cells.
std::vector<CellTarget> match_targets(const std::vector<LabeledBox>& targets, int grid);

struct BackwardResult {
    double loss = 0.0;   // l_box + l_obj + l_cl
    double l_box = 0.0;
    double l_obj = 0.0;
    double l_cl = 0.0;
    ParamGrads grads;
};

/// Loss of one image against per-cell targets, with analytic gradients for
/// every parameter.
BackwardResult backward(const ToyDetectorParams& params, const Image& image,
                        const std::vector<CellTarget>& targets,
                        const LossOptions& opts = {});

/// Momentum update: v = momentum*v + g; p -= lr*v.
void sgd_step(ToyDetectorParams& params, const ParamGrads& grads, ParamGrads& velocity,
              double lr, double momentum);

/// Versioned binary checkpoint, bit-exact round trip.
void save_checkpoint(const ToyDetectorParams& params, const std::filesystem::path& path);
ToyDetectorParams load_checkpoint(const std::filesystem::path& path);

}  // namespace confmix
