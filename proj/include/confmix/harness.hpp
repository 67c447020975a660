#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "confmix/detector.hpp"
#include "confmix/eval.hpp"
#include "confmix/mixing.hpp"
#include "confmix/scenes.hpp"
#include "confmix/schedule.hpp"

namespace confmix {

struct DataConfig {
    std::string root;  // dataset root directory; empty -> generate in memory
    int n_source_train = 200;
    int n_source_test = 100;
    int n_target_train = 200;
    int n_target_test = 100;
    SceneSpec spec;
    DomainShift shift;  // source -> target appearance transform
};

struct TrainConfig {
    int epochs_pretrain = 30;
    int epochs_adapt = 50;
    int epochs_oracle = 50;
    double lr = 0.01;
    double momentum = 0.9;
    // detector-loss term weights, shared by L_det and L_cons
    double lambda_box = 1.0;
    double lambda_obj = 8.0;
    double lambda_cl = 1.0;
};

enum class GammaMode { Dynamic, Constant };

struct ConfMixConfig {
    double c_th = 0.25;        // pseudo-detection confidence threshold
    double c_th_gamma = 0.5;   // threshold inside the consistency weight
    double alpha = 5.0;
    ScheduleMode schedule_mode = ScheduleMode::DetToCombDelta;
    MixStrategy mix_strategy = MixStrategy::FourDivision;
    GammaMode gamma_mode = GammaMode::Dynamic;
    double gamma_constant = 0.6;
    bool raw_pdf = false;
    double sigma_min = 1e-3;
    double nms_iou = 0.5;
    bool source_gt_labels = false;  // combined label set takes source ground truth instead of predictions
};

/// Full declarative run description; serializable to/from JSON so one file
/// drives the whole pipeline, with dotted-key CLI overrides on top.
struct RunConfig {
    std::uint64_t seed = 7;
    std::string out_dir = "runs/default";
    DataConfig data;
    DetectorConfig detector;
    TrainConfig train;
    ConfMixConfig confmix;

    static RunConfig load(const std::filesystem::path& json_path);
    static RunConfig parse_json(const std::string& text);
    std::string to_json_string(int indent = 2) const;

    /// Apply one "section.key=value" override (value parsed as JSON scalar).
    void set_override(const std::string& dotted_key, const std::string& value);

    /// out_dir, re-rooted under $CONFMIX_OUTPUT_ROOT when that is set and
    /// out_dir is relative.
    std::filesystem::path resolved_out_dir() const;
};

struct EpochMetrics {
    int epoch = 0;
    double l_det = 0.0;
    double l_cons = 0.0;
    double gamma_mean = 0.0;
    double delta = 0.0;        // shifting weight at the epoch's last iteration
    double kept_pseudo = 0.0;  // mean filtered target pseudo detections per iteration
    int no_mix = 0;            // iterations skipped for lack of pseudo detections
    double eval_map = 0.0;     // pretrain/oracle: own test split; adapt: target test
};

struct MetricsLog {
    std::vector<EpochMetrics> rows;
    std::string to_csv() const;
};

struct BenchmarkData {
    Dataset source_train, source_test, target_train, target_test;
};

/// Load the four splits from data.root, or generate them from the seed.
BenchmarkData load_or_generate_data(const RunConfig& cfg);

struct TrainedModel {
    ToyDetectorParams params;
    MetricsLog log;
};

/// Supervised source training from random initialization.
TrainedModel run_pretrain(const RunConfig& cfg, const BenchmarkData& data);

/// Supervised training on labelled target data (upper bound).
TrainedModel run_oracle(const RunConfig& cfg, const BenchmarkData& data);

/// The adaptive loop: per iteration, predict on a source and a target image,
/// filter pseudo detections with the blended confidence, mix the most
/// confident target region into the source image, and descend on
/// L_det + gamma * L_cons against the frozen combined label set.
TrainedModel run_adapt(const RunConfig& cfg, const BenchmarkData& data,
                       const ToyDetectorParams& start);

/// Forward + NMS (c_det scoring, conf 0.25, IoU 0.5) over a test split.
APReport evaluate_model(const RunConfig& cfg, const ToyDetectorParams& params,
                        const Dataset& testset);

struct SweepRow {
    std::string value;
    double map = 0.0;
};

/// One adaptation run per axis value under a shared seed and a shared
/// pretrained checkpoint; rows come back ranked by mAP. Axes: mix_strategy,
/// schedule_mode, gamma_weight, alpha, c_th, c_th_gamma.
std::vector<SweepRow> run_sweep(const RunConfig& cfg, const std::string& axis,
                                const BenchmarkData& data);

// ---------------------------------------------------------------------------
// Command layer: one function per CLI verb. These own the file side effects
// (checkpoints, metrics CSVs, JSON summaries) under resolved_out_dir().
// ---------------------------------------------------------------------------

void command_gen_data(const RunConfig& cfg, const std::string& out_dir);
std::filesystem::path command_pretrain(const RunConfig& cfg);
std::filesystem::path command_adapt(const RunConfig& cfg, const std::filesystem::path& ckpt_in);
std::filesystem::path command_oracle(const RunConfig& cfg);
std::string command_eval(const RunConfig& cfg, const std::filesystem::path& ckpt,
                         const std::string& dataset_dir);
std::string command_sweep(const RunConfig& cfg, const std::string& axis);

}  // namespace confmix
