#include "confmix/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "confmix/losses.hpp"

namespace confmix {

namespace {

using nlohmann::json;

// fixed evaluation protocol, independent of the training-time thresholds
constexpr double kEvalConf = 0.25;
constexpr double kEvalIou = 0.5;

// rng stream ids
constexpr std::uint64_t kStreamSourceTrain = 101;
constexpr std::uint64_t kStreamSourceTest = 102;
constexpr std::uint64_t kStreamTargetTrain = 103;
constexpr std::uint64_t kStreamTargetTest = 104;
constexpr std::uint64_t kStreamInit = 11;
constexpr std::uint64_t kStreamPretrainOrder = 12;
constexpr std::uint64_t kStreamAdaptSource = 13;
constexpr std::uint64_t kStreamAdaptOrder = 14;
constexpr std::uint64_t kStreamAdaptMix = 15;
constexpr std::uint64_t kStreamOracleOrder = 16;

json shift_to_json(const DomainShift& s) {
    return json{{"brightness", s.brightness}, {"contrast", s.contrast},
                {"noise_sigma", s.noise_sigma}, {"fog", s.fog},
                {"fog_gray", s.fog_gray},       {"hue_degrees", s.hue_degrees}};
}

DomainShift shift_from_json(const json& j) {
    DomainShift s;
    s.brightness = j.value("brightness", s.brightness);
    s.contrast = j.value("contrast", s.contrast);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.fog = j.value("fog", s.fog);
    s.fog_gray = j.value("fog_gray", s.fog_gray);
    s.hue_degrees = j.value("hue_degrees", s.hue_degrees);
    return s;
}

json scene_spec_to_json(const SceneSpec& s) {
    return json{{"image_size", s.image_size},   {"channels", s.channels},
                {"min_objects", s.min_objects}, {"max_objects", s.max_objects},
                {"min_size", s.min_size},       {"max_size", s.max_size},
                {"max_gt_iou", s.max_gt_iou},   {"shading", s.shading},
                {"bg_low", s.bg_low},           {"bg_high", s.bg_high},
                {"bg_noise", s.bg_noise}};
}

SceneSpec scene_spec_from_json(const json& j, SceneSpec s) {
    s.image_size = j.value("image_size", s.image_size);
    s.channels = j.value("channels", s.channels);
    s.min_objects = j.value("min_objects", s.min_objects);
    s.max_objects = j.value("max_objects", s.max_objects);
    s.min_size = j.value("min_size", s.min_size);
    s.max_size = j.value("max_size", s.max_size);
    s.max_gt_iou = j.value("max_gt_iou", s.max_gt_iou);
    s.shading = j.value("shading", s.shading);
    s.bg_low = j.value("bg_low", s.bg_low);
    s.bg_high = j.value("bg_high", s.bg_high);
    s.bg_noise = j.value("bg_noise", s.bg_noise);
    return s;
}

json config_to_json(const RunConfig& c) {
    return json{
        {"seed", c.seed},
        {"out_dir", c.out_dir},
        {"data",
         {{"root", c.data.root},
          {"n_source_train", c.data.n_source_train},
          {"n_source_test", c.data.n_source_test},
          {"n_target_train", c.data.n_target_train},
          {"n_target_test", c.data.n_target_test},
          {"spec", scene_spec_to_json(c.data.spec)},
          {"shift", shift_to_json(c.data.shift)}}},
        {"detector",
         {{"grid", c.detector.grid},
          {"classes", c.detector.classes},
          {"hidden", c.detector.hidden},
          {"channels", c.detector.channels},
          {"sigma_bias", c.detector.sigma_bias}}},
        {"train",
         {{"epochs_pretrain", c.train.epochs_pretrain},
          {"epochs_adapt", c.train.epochs_adapt},
          {"epochs_oracle", c.train.epochs_oracle},
          {"lr", c.train.lr},
          {"momentum", c.train.momentum},
          {"lambda_box", c.train.lambda_box},
          {"lambda_obj", c.train.lambda_obj},
          {"lambda_cl", c.train.lambda_cl}}},
        {"confmix",
         {{"c_th", c.confmix.c_th},
          {"c_th_gamma", c.confmix.c_th_gamma},
          {"alpha", c.confmix.alpha},
          {"schedule_mode", to_string(c.confmix.schedule_mode)},
          {"mix_strategy", to_string(c.confmix.mix_strategy)},
          {"gamma_mode", c.confmix.gamma_mode == GammaMode::Dynamic ? "dynamic" : "constant"},
          {"gamma_constant", c.confmix.gamma_constant},
          {"raw_pdf", c.confmix.raw_pdf},
          {"sigma_min", c.confmix.sigma_min},
          {"nms_iou", c.confmix.nms_iou},
          {"source_gt_labels", c.confmix.source_gt_labels}}}};
}

RunConfig config_from_json(const json& j) {
    RunConfig c;
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);
    if (j.contains("data")) {
        const json& d = j["data"];
        c.data.root = d.value("root", c.data.root);
        c.data.n_source_train = d.value("n_source_train", c.data.n_source_train);
        c.data.n_source_test = d.value("n_source_test", c.data.n_source_test);
        c.data.n_target_train = d.value("n_target_train", c.data.n_target_train);
        c.data.n_target_test = d.value("n_target_test", c.data.n_target_test);
        if (d.contains("spec")) c.data.spec = scene_spec_from_json(d["spec"], c.data.spec);
        if (d.contains("shift")) c.data.shift = shift_from_json(d["shift"]);
    }
    if (j.contains("detector")) {
        const json& d = j["detector"];
        c.detector.grid = d.value("grid", c.detector.grid);
        c.detector.classes = d.value("classes", c.detector.classes);
        c.detector.hidden = d.value("hidden", c.detector.hidden);
        c.detector.channels = d.value("channels", c.detector.channels);
        c.detector.sigma_bias = d.value("sigma_bias", c.detector.sigma_bias);
    }
    if (j.contains("train")) {
        const json& t = j["train"];
        c.train.epochs_pretrain = t.value("epochs_pretrain", c.train.epochs_pretrain);
        c.train.epochs_adapt = t.value("epochs_adapt", c.train.epochs_adapt);
        c.train.epochs_oracle = t.value("epochs_oracle", c.train.epochs_oracle);
        c.train.lr = t.value("lr", c.train.lr);
        c.train.momentum = t.value("momentum", c.train.momentum);
        c.train.lambda_box = t.value("lambda_box", c.train.lambda_box);
        c.train.lambda_obj = t.value("lambda_obj", c.train.lambda_obj);
        c.train.lambda_cl = t.value("lambda_cl", c.train.lambda_cl);
    }
    if (j.contains("confmix")) {
        const json& m = j["confmix"];
        c.confmix.c_th = m.value("c_th", c.confmix.c_th);
        c.confmix.c_th_gamma = m.value("c_th_gamma", c.confmix.c_th_gamma);
        c.confmix.alpha = m.value("alpha", c.confmix.alpha);
        if (m.contains("schedule_mode")) {
            const auto mode = schedule_mode_from_string(m["schedule_mode"].get<std::string>());
            if (!mode) throw std::invalid_argument("config: unknown schedule_mode");
            c.confmix.schedule_mode = *mode;
        }
        if (m.contains("mix_strategy")) {
            const auto strat = mix_strategy_from_string(m["mix_strategy"].get<std::string>());
            if (!strat) throw std::invalid_argument("config: unknown mix_strategy");
            c.confmix.mix_strategy = *strat;
        }
        if (m.contains("gamma_mode")) {
            const std::string gm = m["gamma_mode"].get<std::string>();
            if (gm == "dynamic") c.confmix.gamma_mode = GammaMode::Dynamic;
            else if (gm == "constant") c.confmix.gamma_mode = GammaMode::Constant;
            else throw std::invalid_argument("config: gamma_mode must be dynamic or constant");
        }
        c.confmix.gamma_constant = m.value("gamma_constant", c.confmix.gamma_constant);
        c.confmix.raw_pdf = m.value("raw_pdf", c.confmix.raw_pdf);
        c.confmix.sigma_min = m.value("sigma_min", c.confmix.sigma_min);
        c.confmix.nms_iou = m.value("nms_iou", c.confmix.nms_iou);
        c.confmix.source_gt_labels = m.value("source_gt_labels", c.confmix.source_gt_labels);
    }
    return c;
}

LossOptions loss_options(const RunConfig& c) {
    LossOptions opts;
    opts.raw_pdf = c.confmix.raw_pdf;
    opts.sigma_min = c.confmix.sigma_min;
    opts.lambda_box = c.train.lambda_box;
    opts.lambda_obj = c.train.lambda_obj;
    opts.lambda_cl = c.train.lambda_cl;
    return opts;
}

void validate(const RunConfig& c) {
    const auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(c.confmix.c_th) || !in01(c.confmix.c_th_gamma) || !in01(c.confmix.nms_iou) ||
        !in01(c.confmix.gamma_constant))
        throw std::invalid_argument("config: thresholds must lie in [0,1]");
    if (c.confmix.alpha <= 0.0) throw std::invalid_argument("config: alpha must be > 0");
    if (c.train.lr <= 0.0) throw std::invalid_argument("config: lr must be > 0");
    if (c.train.momentum < 0.0 || c.train.momentum >= 1.0)
        throw std::invalid_argument("config: momentum must lie in [0,1)");
    if (c.train.epochs_pretrain < 0 || c.train.epochs_adapt < 0 || c.train.epochs_oracle < 0)
        throw std::invalid_argument("config: epoch counts must be >= 0");
    if (c.data.shift.fog < 0.0 || c.data.shift.fog > 0.7)
        throw std::invalid_argument("config: fog strength must lie in [0, 0.7]");
    if (!c.data.root.empty() && !std::filesystem::exists(c.data.root))
        throw std::invalid_argument("config: data.root does not exist: " + c.data.root);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    os << text;
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& json_path) {
    std::ifstream is(json_path);
    if (!is) throw std::runtime_error("config: cannot open " + json_path.string());
    return config_from_json(json::parse(is));
}

RunConfig RunConfig::parse_json(const std::string& text) {
    return config_from_json(json::parse(text));
}

std::string RunConfig::to_json_string(int indent) const {
    return config_to_json(*this).dump(indent);
}

void RunConfig::set_override(const std::string& dotted_key, const std::string& value) {
    json root = config_to_json(*this);
    json* node = &root;
    std::string key = dotted_key;
    for (std::size_t pos = key.find('.'); pos != std::string::npos; pos = key.find('.')) {
        node = &(*node)[key.substr(0, pos)];
        key = key.substr(pos + 1);
    }
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;  // bare strings (e.g. mode names) pass through
    }
    (*node)[key] = parsed;
    *this = config_from_json(root);
}

std::filesystem::path RunConfig::resolved_out_dir() const {
    std::filesystem::path dir(out_dir);
    const char* root = std::getenv("CONFMIX_OUTPUT_ROOT");
    if (root && *root && dir.is_relative()) return std::filesystem::path(root) / dir;
    return dir;
}

std::string MetricsLog::to_csv() const {
    std::ostringstream os;
    os << "epoch,l_det,l_cons,gamma_mean,delta,kept_pseudo,no_mix,eval_map\n";
    for (const EpochMetrics& r : rows) {
        os << r.epoch << ',' << format_double(r.l_det) << ',' << format_double(r.l_cons)
           << ',' << format_double(r.gamma_mean) << ',' << format_double(r.delta) << ','
           << format_double(r.kept_pseudo) << ',' << r.no_mix << ','
           << format_double(r.eval_map) << '\n';
    }
    return os.str();
}

BenchmarkData load_or_generate_data(const RunConfig& cfg) {
    BenchmarkData data;
    if (!cfg.data.root.empty()) {
        const std::filesystem::path root(cfg.data.root);
        data.source_train = read_dataset(root / "source_train");
        data.source_test = read_dataset(root / "source_test");
        data.target_train = read_dataset(root / "target_train");
        data.target_test = read_dataset(root / "target_test");
        return data;
    }
    const Rng base(cfg.seed);
    const DomainShift identity;
    data.source_train = generate_dataset(cfg.data.spec, identity, Domain::Source,
                                         cfg.data.n_source_train,
                                         base.split(kStreamSourceTrain).seed());
    data.source_test = generate_dataset(cfg.data.spec, identity, Domain::Source,
                                        cfg.data.n_source_test,
                                        base.split(kStreamSourceTest).seed());
    data.target_train = generate_dataset(cfg.data.spec, cfg.data.shift, Domain::Target,
                                         cfg.data.n_target_train,
                                         base.split(kStreamTargetTrain).seed());
    data.target_test = generate_dataset(cfg.data.spec, cfg.data.shift, Domain::Target,
                                        cfg.data.n_target_test,
                                        base.split(kStreamTargetTest).seed());
    return data;
}

APReport evaluate_model(const RunConfig& cfg, const ToyDetectorParams& params,
                        const Dataset& testset) {
    if (testset.items.empty()) throw std::invalid_argument("evaluate: empty dataset");
    std::vector<std::vector<Detection>> dets;
    std::vector<std::vector<LabeledBox>> gts;
    dets.reserve(testset.items.size());
    gts.reserve(testset.items.size());
    for (const LabeledImage& item : testset.items) {
        const ForwardResult fw = forward(params, item.image);
        dets.push_back(nms(fw.detections, kEvalIou, kEvalConf, score_c_det));
        gts.push_back(item.boxes);
    }
    (void)cfg;
    return evaluate_detections(dets, gts, kEvalIou);
}

namespace {

/// One supervised pass over a labelled dataset (pretrain and oracle).
TrainedModel train_supervised(const RunConfig& cfg, const Dataset& train,
                              const Dataset& test, int epochs, std::uint64_t order_stream) {
    validate(cfg);
    const LossOptions opts = loss_options(cfg);
    Rng init_rng = Rng(cfg.seed).split(kStreamInit);
    Rng order_rng = Rng(cfg.seed).split(order_stream);

    TrainedModel model;
    model.params = init_params(cfg.detector, init_rng);
    ParamGrads velocity(model.params);

    std::vector<int> order(train.items.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        order_rng.shuffle(order);
        double l_det_sum = 0.0;
        for (int idx : order) {
            const LabeledImage& item = train.items[idx];
            const auto targets = match_targets(item.boxes, cfg.detector.grid);
            const BackwardResult bw = backward(model.params, item.image, targets, opts);
            sgd_step(model.params, bw.grads, velocity, cfg.train.lr, cfg.train.momentum);
            l_det_sum += bw.loss;
        }
        EpochMetrics row;
        row.epoch = epoch;
        row.l_det = l_det_sum / static_cast<double>(order.size());
        row.eval_map = evaluate_model(cfg, model.params, test).map;
        model.log.rows.push_back(row);
    }
    return model;
}

std::vector<Detection> detections_from_ground_truth(const std::vector<LabeledBox>& boxes) {
    std::vector<Detection> dets;
    dets.reserve(boxes.size());
    for (const LabeledBox& lb : boxes) {
        GaussianBox gb{lb.box, {1e-6, 1e-6, 1e-6, 1e-6}};
        dets.push_back(make_detection(gb, lb.class_id, 1.0));
    }
    return dets;
}

}  // namespace

TrainedModel run_pretrain(const RunConfig& cfg, const BenchmarkData& data) {
    return train_supervised(cfg, data.source_train, data.source_test,
                            cfg.train.epochs_pretrain, kStreamPretrainOrder);
}

TrainedModel run_oracle(const RunConfig& cfg, const BenchmarkData& data) {
    return train_supervised(cfg, data.target_train, data.target_test,
                            cfg.train.epochs_oracle, kStreamOracleOrder);
}

TrainedModel run_adapt(const RunConfig& cfg, const BenchmarkData& data,
                       const ToyDetectorParams& start) {
    validate(cfg);
    if (data.target_train.items.empty() || data.source_train.items.empty())
        throw std::invalid_argument("run_adapt: empty training split");

    const LossOptions opts = loss_options(cfg);
    const ConfMixConfig& cm = cfg.confmix;
    const int n_src = static_cast<int>(data.source_train.items.size());
    const int n_tgt = static_cast<int>(data.target_train.items.size());

    Schedule sched;
    sched.alpha = cm.alpha;
    sched.total_epochs = std::max(1, cfg.train.epochs_adapt);
    sched.batches_per_epoch = n_tgt;
    sched.mode = cm.schedule_mode;

    Rng src_rng = Rng(cfg.seed).split(kStreamAdaptSource);
    Rng order_rng = Rng(cfg.seed).split(kStreamAdaptOrder);
    Rng mix_rng = Rng(cfg.seed).split(kStreamAdaptMix);

    TrainedModel model;
    model.params = start;
    ParamGrads velocity(model.params);

    std::vector<int> order(n_tgt);
    std::iota(order.begin(), order.end(), 0);
    Clock clock;

    for (int epoch = 0; epoch < cfg.train.epochs_adapt; ++epoch) {
        order_rng.shuffle(order);
        double l_det_sum = 0.0, l_cons_sum = 0.0, gamma_sum = 0.0, kept_sum = 0.0;
        int no_mix = 0;

        for (int j = 0; j < n_tgt; ++j) {
            const LabeledImage& tgt = data.target_train.items[order[j]];
            const LabeledImage& src =
                data.source_train.items[src_rng.uniform_int(static_cast<std::uint64_t>(n_src))];
            const double w = blend_weight(clock, sched);

            // supervised branch on the source image
            const auto src_targets = match_targets(src.boxes, cfg.detector.grid);
            BackwardResult bw = backward(model.params, src.image, src_targets, opts);

            // pseudo detections on the target image: NMS on the detector
            // confidence, then the progressive blended-confidence filter
            const ForwardResult fw_t = forward(model.params, tgt.image);
            const auto dets_t = nms(fw_t.detections, cm.nms_iou, cm.c_th, score_c_det);
            const auto pseudo_t = filter_pseudo(dets_t, cm.c_th, w, sched.mode);
            kept_sum += static_cast<double>(pseudo_t.size());

            MixPlan plan = plan_mix(pseudo_t, cm.mix_strategy, tgt.image.width,
                                    tgt.image.height, mix_rng, blended_score(w, sched.mode));

            double gamma = 0.0, l_cons = 0.0;
            bool mixed = false;
            if (!plan.no_mix) {
                std::vector<Detection> pseudo_s;
                if (cm.source_gt_labels) {
                    pseudo_s = detections_from_ground_truth(src.boxes);
                } else {
                    const ForwardResult fw_s = forward(model.params, src.image);
                    const auto dets_s = nms(fw_s.detections, cm.nms_iou, cm.c_th, score_c_det);
                    pseudo_s = filter_pseudo(dets_s, cm.c_th, w, sched.mode);
                }
                const auto combined = combine_labels(pseudo_t, pseudo_s, plan);
                if (!combined.empty()) {
                    mixed = true;
                    const Image x_m = compose(src.image, tgt.image, plan.mask);
                    std::vector<LabeledBox> frozen;  // pseudo targets detach here
                    frozen.reserve(combined.size());
                    for (const Detection& d : combined)
                        frozen.push_back({d.gbox.mu, d.class_id});
                    const auto cons_targets = match_targets(frozen, cfg.detector.grid);
                    const BackwardResult bw_cons =
                        backward(model.params, x_m, cons_targets, opts);
                    l_cons = bw_cons.loss;
                    gamma = cm.gamma_mode == GammaMode::Dynamic
                                ? consistency_weight(combined, cm.c_th_gamma, w, sched.mode)
                                : cm.gamma_constant;
                    if (gamma > 0.0) bw.grads.add_scaled(bw_cons.grads, gamma);
                }
            }
            if (!mixed) ++no_mix;

            sgd_step(model.params, bw.grads, velocity, cfg.train.lr, cfg.train.momentum);
            l_det_sum += bw.loss;
            l_cons_sum += l_cons;
            gamma_sum += gamma;
            clock.t += 1;
        }

        EpochMetrics row;
        row.epoch = epoch;
        row.l_det = l_det_sum / n_tgt;
        row.l_cons = l_cons_sum / n_tgt;
        row.gamma_mean = gamma_sum / n_tgt;
        row.delta = shifting_weight(
            progress_ratio(Clock{clock.t - 1}, sched), sched.alpha);
        row.kept_pseudo = kept_sum / n_tgt;
        row.no_mix = no_mix;
        row.eval_map = evaluate_model(cfg, model.params, data.target_test).map;
        model.log.rows.push_back(row);
    }
    return model;
}

std::vector<SweepRow> run_sweep(const RunConfig& cfg, const std::string& axis,
                                const BenchmarkData& data) {
    struct AxisValue {
        std::string label;
        std::function<void(RunConfig&)> apply;
    };
    std::vector<AxisValue> values;

    // "name" sweeps the default grid; "name=v1,v2" pins the value list
    std::string name = axis;
    std::vector<std::string> picked;
    if (const std::size_t eq = axis.find('='); eq != std::string::npos) {
        name = axis.substr(0, eq);
        std::string rest = axis.substr(eq + 1);
        while (!rest.empty()) {
            const std::size_t comma = rest.find(',');
            picked.push_back(rest.substr(0, comma));
            if (comma == std::string::npos) break;
            rest = rest.substr(comma + 1);
        }
        if (picked.empty()) throw std::invalid_argument("sweep: empty value list");
    }
    const auto wanted = [&](const std::string& label) {
        return picked.empty() ||
               std::find(picked.begin(), picked.end(), label) != picked.end();
    };
    const auto numeric_values = [&](std::vector<double> defaults) {
        if (picked.empty()) return defaults;
        std::vector<double> vals;
        for (const std::string& s : picked) vals.push_back(std::stod(s));
        return vals;
    };

    if (name == "mix_strategy") {
        for (MixStrategy s : {MixStrategy::FourDivision, MixStrategy::SixDivision,
                              MixStrategy::NineDivision, MixStrategy::VerticalHalves,
                              MixStrategy::HorizontalHalves, MixStrategy::TwoRegionMix,
                              MixStrategy::CutMixRandom})
            if (wanted(to_string(s)))
                values.push_back({to_string(s), [s](RunConfig& c) { c.confmix.mix_strategy = s; }});
    } else if (name == "schedule_mode") {
        for (ScheduleMode m : {ScheduleMode::DetOnly, ScheduleMode::CombOnly,
                               ScheduleMode::DetToCombLinear, ScheduleMode::CombToDetLinear,
                               ScheduleMode::DetToCombDelta, ScheduleMode::CombToDetDelta})
            if (wanted(to_string(m)))
                values.push_back({to_string(m), [m](RunConfig& c) { c.confmix.schedule_mode = m; }});
    } else if (name == "gamma_weight") {
        if (wanted("dynamic"))
            values.push_back(
                {"dynamic", [](RunConfig& c) { c.confmix.gamma_mode = GammaMode::Dynamic; }});
        for (double gval : {0.2, 0.4, 0.6, 0.8, 1.0})
            if (wanted(format_double(gval)))
                values.push_back({format_double(gval), [gval](RunConfig& c) {
                                      c.confmix.gamma_mode = GammaMode::Constant;
                                      c.confmix.gamma_constant = gval;
                                  }});
    } else if (name == "alpha") {
        for (double a : numeric_values({1.0, 3.0, 5.0, 10.0}))
            values.push_back({format_double(a), [a](RunConfig& c) { c.confmix.alpha = a; }});
    } else if (name == "c_th") {
        for (double v : numeric_values({0.1, 0.25, 0.5, 0.7}))
            values.push_back({format_double(v), [v](RunConfig& c) { c.confmix.c_th = v; }});
    } else if (name == "c_th_gamma") {
        for (double v : numeric_values({0.4, 0.5, 0.6, 0.7, 0.8, 0.9}))
            values.push_back({format_double(v), [v](RunConfig& c) { c.confmix.c_th_gamma = v; }});
    } else {
        throw std::invalid_argument("sweep: unknown axis " + name);
    }
    if (values.empty()) throw std::invalid_argument("sweep: no values matched " + axis);

    const TrainedModel pre = run_pretrain(cfg, data);  // shared starting point
    std::vector<SweepRow> rows;
    for (const AxisValue& v : values) {
        RunConfig sub = cfg;
        v.apply(sub);
        const TrainedModel adapted = run_adapt(sub, data, pre.params);
        rows.push_back({v.label, evaluate_model(sub, adapted.params, data.target_test).map});
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const SweepRow& a, const SweepRow& b) { return a.map > b.map; });
    return rows;
}

// ---------------------------------------------------------------------------
// command layer
// ---------------------------------------------------------------------------

namespace {

std::filesystem::path ensure_out_dir(const RunConfig& cfg) {
    const std::filesystem::path dir = cfg.resolved_out_dir();
    std::filesystem::create_directories(dir);
    return dir;
}

json report_to_json(const APReport& report) {
    json per_class = json::object();
    for (const auto& [cls, ap] : report.per_class_ap)
        per_class[std::to_string(cls)] = ap;
    json counts = json::object();
    for (const auto& [cls, n] : report.gt_count) counts[std::to_string(cls)] = n;
    return json{{"map", report.map}, {"per_class_ap", per_class}, {"gt_count", counts}};
}

void write_model_outputs(const RunConfig& cfg, const std::filesystem::path& dir,
                         const std::string& stage, const TrainedModel& model,
                         const APReport& report) {
    save_checkpoint(model.params, dir / (stage + ".ckpt"));
    write_text_file(dir / (stage + "_metrics.csv"), model.log.to_csv());
    json summary{{"stage", stage},
                 {"seed", cfg.seed},
                 {"epochs", model.log.rows.size()},
                 {"report", report_to_json(report)}};
    write_text_file(dir / (stage + "_summary.json"), summary.dump(2) + "\n");
}

}  // namespace

void command_gen_data(const RunConfig& cfg, const std::string& out_dir) {
    validate(cfg);
    const std::filesystem::path root =
        out_dir.empty() ? ensure_out_dir(cfg) / "data" : std::filesystem::path(out_dir);
    RunConfig gen = cfg;
    gen.data.root.clear();  // always generate fresh
    const BenchmarkData data = load_or_generate_data(gen);
    write_dataset(data.source_train, root / "source_train");
    write_dataset(data.source_test, root / "source_test");
    write_dataset(data.target_train, root / "target_train");
    write_dataset(data.target_test, root / "target_test");
}

std::filesystem::path command_pretrain(const RunConfig& cfg) {
    validate(cfg);
    const std::filesystem::path dir = ensure_out_dir(cfg);
    const BenchmarkData data = load_or_generate_data(cfg);
    const TrainedModel model = run_pretrain(cfg, data);
    write_model_outputs(cfg, dir, "pretrain", model,
                        evaluate_model(cfg, model.params, data.source_test));
    return dir / "pretrain.ckpt";
}

std::filesystem::path command_adapt(const RunConfig& cfg,
                                    const std::filesystem::path& ckpt_in) {
    validate(cfg);
    const std::filesystem::path dir = ensure_out_dir(cfg);
    const BenchmarkData data = load_or_generate_data(cfg);
    const ToyDetectorParams start = load_checkpoint(ckpt_in);
    const TrainedModel model = run_adapt(cfg, data, start);
    write_model_outputs(cfg, dir, "adapt", model,
                        evaluate_model(cfg, model.params, data.target_test));
    return dir / "adapt.ckpt";
}

std::filesystem::path command_oracle(const RunConfig& cfg) {
    validate(cfg);
    const std::filesystem::path dir = ensure_out_dir(cfg);
    const BenchmarkData data = load_or_generate_data(cfg);
    const TrainedModel model = run_oracle(cfg, data);
    write_model_outputs(cfg, dir, "oracle", model,
                        evaluate_model(cfg, model.params, data.target_test));
    return dir / "oracle.ckpt";
}

std::string command_eval(const RunConfig& cfg, const std::filesystem::path& ckpt,
                         const std::string& dataset_dir) {
    validate(cfg);
    const std::filesystem::path dir = ensure_out_dir(cfg);
    const ToyDetectorParams params = load_checkpoint(ckpt);

    Dataset testset;
    if (dataset_dir.empty()) {
        testset = load_or_generate_data(cfg).target_test;
    } else {
        testset = read_dataset(dataset_dir);
    }
    const APReport report = evaluate_model(cfg, params, testset);

    std::string overlays;
    for (std::size_t i = 0; i < testset.items.size(); ++i) {
        const ForwardResult fw = forward(params, testset.items[i].image);
        const auto dets = nms(fw.detections, kEvalIou, kEvalConf, score_c_det);
        overlays += overlay_text(static_cast<int>(i), dets, testset.items[i].boxes, kEvalIou);
    }
    write_text_file(dir / "overlays.txt", overlays);

    const std::string text = report_to_json(report).dump(2) + "\n";
    write_text_file(dir / "eval_report.json", text);
    return text;
}

std::string command_sweep(const RunConfig& cfg, const std::string& axis) {
    validate(cfg);
    const std::filesystem::path dir = ensure_out_dir(cfg);
    const BenchmarkData data = load_or_generate_data(cfg);
    const auto rows = run_sweep(cfg, axis, data);

    std::ostringstream csv;
    csv << "value,map\n";
    json jrows = json::array();
    for (const SweepRow& r : rows) {
        csv << r.value << ',' << format_double(r.map) << '\n';
        jrows.push_back({{"value", r.value}, {"map", r.map}});
    }
    const std::string stem = "sweep_" + axis.substr(0, axis.find('='));
    write_text_file(dir / (stem + ".csv"), csv.str());
    const std::string text = json{{"axis", axis}, {"rows", jrows}}.dump(2) + "\n";
    write_text_file(dir / (stem + ".json"), text);
    return text;
}

}  // namespace confmix
