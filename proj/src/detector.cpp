#include "confmix/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace confmix {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kPi = 3.14159265358979323846;

struct CellLayout {
    int grid;
    int cell_w, cell_h;
};

CellLayout layout_for(const Image& image, const DetectorConfig& cfg) {
    if (image.channels != cfg.channels)
        throw std::invalid_argument("detector: image channel count mismatch");
    if (image.width % cfg.grid != 0 || image.height % cfg.grid != 0)
        throw std::invalid_argument("detector: image dims must be divisible by the grid");
    return {cfg.grid, image.width / cfg.grid, image.height / cfg.grid};
}

}  // namespace

ToyDetectorParams init_params(const DetectorConfig& cfg, Rng& rng) {
    ToyDetectorParams p;
    p.cfg = cfg;
    const int cells = cfg.grid * cfg.grid;
    const int d = descriptor_dim(cfg);
    const int o = output_dim(cfg);
    p.w1.resize(static_cast<std::size_t>(cells) * cfg.hidden * d);
    p.b1.assign(static_cast<std::size_t>(cells) * cfg.hidden, 0.0);
    p.w2.resize(static_cast<std::size_t>(cells) * o * cfg.hidden);
    p.b2.assign(static_cast<std::size_t>(cells) * o, 0.0);

    const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(cfg.hidden));
    for (double& w : p.w1) w = rng.normal(0.0, s1);
    for (double& w : p.w2) w = rng.normal(0.0, s2);
    // keep early box confidence high so pseudo labelling is not starved
    for (int c = 0; c < cells; ++c)
        for (int k = 0; k < 4; ++k)
            p.b2[static_cast<std::size_t>(c) * o + 1 + cfg.classes + 4 + k] = cfg.sigma_bias;
    return p;
}

void ParamGrads::add_scaled(const ParamGrads& o, double s) {
    for (std::size_t i = 0; i < w1.size(); ++i) w1[i] += s * o.w1[i];
    for (std::size_t i = 0; i < b1.size(); ++i) b1[i] += s * o.b1[i];
    for (std::size_t i = 0; i < w2.size(); ++i) w2[i] += s * o.w2[i];
    for (std::size_t i = 0; i < b2.size(); ++i) b2[i] += s * o.b2[i];
}

void ParamGrads::clear() {
    std::fill(w1.begin(), w1.end(), 0.0);
    std::fill(b1.begin(), b1.end(), 0.0);
    std::fill(w2.begin(), w2.end(), 0.0);
    std::fill(b2.begin(), b2.end(), 0.0);
}

std::vector<double> patch_descriptors(const Image& image, const DetectorConfig& cfg) {
    const CellLayout lay = layout_for(image, cfg);
    const int g = lay.grid;
    const int nc = cfg.channels;
    const int d = descriptor_dim(cfg);
    std::vector<double> out(static_cast<std::size_t>(g) * g * d, 0.0);

    // luminance for the orientation histogram
    std::vector<double> lum(static_cast<std::size_t>(image.width) * image.height);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            double s = 0.0;
            for (int c = 0; c < nc; ++c) s += image.at(x, y, c);
            lum[static_cast<std::size_t>(y) * image.width + x] = s / nc;
        }
    const auto lum_at = [&](int x, int y) {
        x = std::clamp(x, 0, image.width - 1);
        y = std::clamp(y, 0, image.height - 1);
        return lum[static_cast<std::size_t>(y) * image.width + x];
    };

    for (int gy = 0; gy < g; ++gy)
        for (int gx = 0; gx < g; ++gx) {
            double* f = &out[(static_cast<std::size_t>(gy) * g + gx) * d];
            const int cx0 = gx * lay.cell_w, cx1 = cx0 + lay.cell_w;
            const int cy0 = gy * lay.cell_h, cy1 = cy0 + lay.cell_h;
            // context window: one extra cell on every side, clamped
            const int wx0 = std::max(0, cx0 - lay.cell_w);
            const int wx1 = std::min(image.width, cx1 + lay.cell_w);
            const int wy0 = std::max(0, cy0 - lay.cell_h);
            const int wy1 = std::min(image.height, cy1 + lay.cell_h);

            // per-channel mean over the cell itself
            const double cell_n = static_cast<double>(lay.cell_w) * lay.cell_h;
            for (int c = 0; c < nc; ++c) {
                double sum = 0.0;
                for (int y = cy0; y < cy1; ++y)
                    for (int x = cx0; x < cx1; ++x) sum += image.at(x, y, c);
                f[c] = sum / cell_n;
            }
            // per-channel mean and stddev over the context window
            const double win_n = static_cast<double>(wx1 - wx0) * (wy1 - wy0);
            for (int c = 0; c < nc; ++c) {
                double sum = 0.0, sum2 = 0.0;
                for (int y = wy0; y < wy1; ++y)
                    for (int x = wx0; x < wx1; ++x) {
                        const double v = image.at(x, y, c);
                        sum += v;
                        sum2 += v * v;
                    }
                const double mean = sum / win_n;
                f[nc + c] = mean;
                f[2 * nc + c] = std::sqrt(std::max(0.0, sum2 / win_n - mean * mean));
            }
            // signed 4-bin orientation histogram of the context window,
            // magnitude weighted and normalized to a distribution
            double hist[4] = {0, 0, 0, 0};
            for (int y = wy0; y < wy1; ++y)
                for (int x = wx0; x < wx1; ++x) {
                    const double dx = (lum_at(x + 1, y) - lum_at(x - 1, y)) / 2.0;
                    const double dy = (lum_at(x, y + 1) - lum_at(x, y - 1)) / 2.0;
                    const double mag = std::sqrt(dx * dx + dy * dy);
                    if (mag <= 1e-12) continue;
                    const double ang = std::atan2(dy, dx);  // (-pi, pi]
                    int bin = static_cast<int>(std::floor((ang + kPi + kPi / 4) / (kPi / 2)));
                    bin = ((bin % 4) + 4) % 4;
                    hist[bin] += mag;
                }
            const double total = hist[0] + hist[1] + hist[2] + hist[3];
            for (int b = 0; b < 4; ++b) f[3 * nc + b] = total > 0.0 ? hist[b] / total : 0.0;
        }
    return out;
}

namespace {

struct CellActivations {
    std::vector<double> a1;   // hidden, post-tanh
    std::vector<double> out;  // raw head outputs
};

// offsets of one cell's weight blocks
struct CellSlice {
    std::size_t w1, b1, w2, b2;
};

CellSlice slice_for(const DetectorConfig& cfg, std::size_t cell) {
    const std::size_t d = static_cast<std::size_t>(descriptor_dim(cfg));
    const std::size_t h = static_cast<std::size_t>(cfg.hidden);
    const std::size_t o = static_cast<std::size_t>(output_dim(cfg));
    return {cell * h * d, cell * h, cell * o * h, cell * o};
}

void run_cell(const ToyDetectorParams& p, std::size_t cell, const double* x,
              CellActivations& act) {
    const int d = descriptor_dim(p.cfg);
    const int h = p.cfg.hidden;
    const int o = output_dim(p.cfg);
    const CellSlice s = slice_for(p.cfg, cell);
    act.a1.resize(h);
    act.out.resize(o);
    for (int i = 0; i < h; ++i) {
        double z = p.b1[s.b1 + i];
        const double* row = &p.w1[s.w1 + static_cast<std::size_t>(i) * d];
        for (int j = 0; j < d; ++j) z += row[j] * x[j];
        act.a1[i] = std::tanh(z);
    }
    for (int i = 0; i < o; ++i) {
        double z = p.b2[s.b2 + i];
        const double* row = &p.w2[s.w2 + static_cast<std::size_t>(i) * h];
        for (int j = 0; j < h; ++j) z += row[j] * act.a1[j];
        act.out[i] = z;
    }
}

CellPrediction decode_cell(const DetectorConfig& cfg, const std::vector<double>& out,
                           int gx, int gy) {
    const int k = cfg.classes;
    CellPrediction cell;
    cell.objectness = sigmoid(out[0]);
    cell.class_probs.resize(k);
    for (int c = 0; c < k; ++c) cell.class_probs[c] = sigmoid(out[1 + c]);

    const double g = static_cast<double>(cfg.grid);
    Box mu;
    mu.cx = (gx + sigmoid(out[1 + k + 0])) / g;  // center confined to the cell
    mu.cy = (gy + sigmoid(out[1 + k + 1])) / g;
    mu.w = sigmoid(out[1 + k + 2]);
    mu.h = sigmoid(out[1 + k + 3]);
    std::array<double, 4> sigma{};
    for (int j = 0; j < 4; ++j) sigma[j] = sigmoid(out[1 + k + 4 + j]);
    cell.gbox = {mu, sigma};

    cell.best_class = 0;
    for (int c = 1; c < k; ++c)
        if (cell.class_probs[c] > cell.class_probs[cell.best_class]) cell.best_class = c;
    cell.c_det = cell.objectness * cell.class_probs[cell.best_class];
    return cell;
}

}  // namespace

ForwardResult forward(const ToyDetectorParams& params, const Image& image) {
    const CellLayout lay = layout_for(image, params.cfg);
    const std::vector<double> desc = patch_descriptors(image, params.cfg);
    const int d = descriptor_dim(params.cfg);

    ForwardResult result;
    result.grid = lay.grid;
    result.cells.reserve(static_cast<std::size_t>(lay.grid) * lay.grid);
    result.detections.reserve(result.cells.capacity());

    CellActivations act;
    for (int gy = 0; gy < lay.grid; ++gy)
        for (int gx = 0; gx < lay.grid; ++gx) {
            const std::size_t ci = static_cast<std::size_t>(gy) * lay.grid + gx;
            run_cell(params, ci, &desc[ci * d], act);
            CellPrediction cell = decode_cell(params.cfg, act.out, gx, gy);
            result.detections.push_back(
                make_detection(cell.gbox, cell.best_class, cell.c_det));
            result.cells.push_back(std::move(cell));
        }
    return result;
}

std::vector<CellTarget> match_targets(const std::vector<LabeledBox>& targets, int grid) {
    std::vector<CellTarget> cells(static_cast<std::size_t>(grid) * grid);
    for (const LabeledBox& t : targets) {
        int gx = static_cast<int>(t.box.cx * grid);  // half-open cell intervals
        int gy = static_cast<int>(t.box.cy * grid);
        gx = std::clamp(gx, 0, grid - 1);  // cx == 1.0 belongs to the last cell
        gy = std::clamp(gy, 0, grid - 1);
        CellTarget& cell = cells[static_cast<std::size_t>(gy) * grid + gx];
        if (cell.matched && cell.box.w * cell.box.h >= t.box.w * t.box.h) continue;
        cell.matched = true;
        cell.box = t.box;
        cell.class_id = t.class_id;
    }
    return cells;
}

BackwardResult backward(const ToyDetectorParams& params, const Image& image,
                        const std::vector<CellTarget>& targets, const LossOptions& opts) {
    const CellLayout lay = layout_for(image, params.cfg);
    const int g = lay.grid;
    if (targets.size() != static_cast<std::size_t>(g) * g)
        throw std::invalid_argument("backward: targets must cover every cell");

    const std::vector<double> desc = patch_descriptors(image, params.cfg);
    const int d = descriptor_dim(params.cfg);
    const int k = params.cfg.classes;
    const int h = params.cfg.hidden;
    const int o = output_dim(params.cfg);

    // forward pass, keeping activations and assembling the matched pairs
    std::vector<CellActivations> acts(static_cast<std::size_t>(g) * g);
    std::vector<CellPrediction> cells(acts.size());
    std::vector<double> obj_pred(acts.size()), obj_target(acts.size(), 0.0);
    std::vector<MatchedPair> pairs;
    std::vector<int> pair_cell;
    for (int gy = 0; gy < g; ++gy)
        for (int gx = 0; gx < g; ++gx) {
            const std::size_t ci = static_cast<std::size_t>(gy) * g + gx;
            run_cell(params, ci, &desc[ci * d], acts[ci]);
            cells[ci] = decode_cell(params.cfg, acts[ci].out, gx, gy);
            obj_pred[ci] = cells[ci].objectness;
            if (targets[ci].matched) {
                obj_target[ci] = 1.0;
                MatchedPair pair;
                pair.pred = cells[ci].gbox;
                pair.objectness = cells[ci].objectness;
                pair.class_scores = cells[ci].class_probs;
                pair.target = targets[ci].box;
                pair.target_class = targets[ci].class_id;
                pairs.push_back(std::move(pair));
                pair_cell.push_back(static_cast<int>(ci));
            }
        }

    const BoxLossResult box = gaussian_box_loss(pairs, opts);
    const ScalarLossResult obj = objectness_loss(obj_pred, obj_target);

    double l_cl = 0.0;
    const double n_matched = pairs.empty() ? 1.0 : static_cast<double>(pairs.size());

    // per-cell gradient on the raw head outputs
    std::vector<double> g_out(acts.size() * o, 0.0);
    const double m = static_cast<double>(acts.size());
    for (std::size_t ci = 0; ci < acts.size(); ++ci)
        g_out[ci * o + 0] =
            opts.lambda_obj * (obj_pred[ci] - obj_target[ci]) / m;  // BCE through sigmoid

    for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
        const std::size_t ci = static_cast<std::size_t>(pair_cell[pi]);
        const CellPrediction& cell = cells[ci];
        const int tc = pairs[pi].target_class;
        l_cl += classification_loss(cell.class_probs, tc).loss / n_matched;
        for (int c = 0; c < k; ++c) {
            const double t = c == tc ? 1.0 : 0.0;
            g_out[ci * o + 1 + c] =
                opts.lambda_cl * (cell.class_probs[c] - t) / (n_matched * k);
        }
        // box head: chain the analytic loss gradients through the decode
        const double* raw = acts[ci].out.data();
        const double gsz = static_cast<double>(g);
        const double mu_scale[4] = {1.0 / gsz, 1.0 / gsz, 1.0, 1.0};
        for (int j = 0; j < 4; ++j) {
            const double sj = sigmoid(raw[1 + k + j]);
            g_out[ci * o + 1 + k + j] =
                opts.lambda_box * box.grads[pi].d_mu[j] * mu_scale[j] * sj * (1.0 - sj);
            const double sv = sigmoid(raw[1 + k + 4 + j]);
            g_out[ci * o + 1 + k + 4 + j] =
                opts.lambda_box * box.grads[pi].d_sigma[j] * sv * (1.0 - sv);
        }
    }

    // backprop through each cell's own head
    BackwardResult result;
    result.grads = ParamGrads(params);
    std::vector<double> g_a1(h);
    for (std::size_t ci = 0; ci < acts.size(); ++ci) {
        const double* go = &g_out[ci * o];
        bool live = false;
        for (int i = 0; i < o && !live; ++i) live = go[i] != 0.0;
        if (!live) continue;

        const CellSlice s = slice_for(params.cfg, ci);
        const CellActivations& act = acts[ci];
        const double* x = &desc[ci * d];
        std::fill(g_a1.begin(), g_a1.end(), 0.0);
        for (int i = 0; i < o; ++i) {
            if (go[i] == 0.0) continue;
            result.grads.b2[s.b2 + i] += go[i];
            double* w2row = &result.grads.w2[s.w2 + static_cast<std::size_t>(i) * h];
            const double* w2p = &params.w2[s.w2 + static_cast<std::size_t>(i) * h];
            for (int j = 0; j < h; ++j) {
                w2row[j] += go[i] * act.a1[j];
                g_a1[j] += go[i] * w2p[j];
            }
        }
        for (int i = 0; i < h; ++i) {
            const double gz = g_a1[i] * (1.0 - act.a1[i] * act.a1[i]);
            if (gz == 0.0) continue;
            result.grads.b1[s.b1 + i] += gz;
            double* w1row = &result.grads.w1[s.w1 + static_cast<std::size_t>(i) * d];
            for (int j = 0; j < d; ++j) w1row[j] += gz * x[j];
        }
    }

    result.l_box = box.loss;
    result.l_obj = obj.loss;
    result.l_cl = l_cl;
    result.loss =
        opts.lambda_box * box.loss + opts.lambda_obj * obj.loss + opts.lambda_cl * l_cl;
    return result;
}

void sgd_step(ToyDetectorParams& params, const ParamGrads& grads, ParamGrads& velocity,
              double lr, double momentum) {
    const auto update = [lr, momentum](std::vector<double>& p, const std::vector<double>& g,
                                       std::vector<double>& v) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            v[i] = momentum * v[i] + g[i];
            p[i] -= lr * v[i];
        }
    };
    update(params.w1, grads.w1, velocity.w1);
    update(params.b1, grads.b1, velocity.b1);
    update(params.w2, grads.w2, velocity.w2);
    update(params.b2, grads.b2, velocity.b2);
}

namespace {

constexpr char kMagic[4] = {'C', 'M', 'T', 'D'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_doubles(std::ostream& os, const std::vector<double>& v) {
    write_u32(os, static_cast<std::uint32_t>(v.size()));
    for (double x : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, 8);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
        os.write(reinterpret_cast<const char*>(b), 8);
    }
}

std::vector<double> read_doubles(std::istream& is) {
    const std::uint32_t n = read_u32(is);
    std::vector<double> v(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        unsigned char b[8];
        is.read(reinterpret_cast<char*>(b), 8);
        std::uint64_t bits = 0;
        for (int j = 0; j < 8; ++j) bits |= static_cast<std::uint64_t>(b[j]) << (8 * j);
        std::memcpy(&v[i], &bits, 8);
    }
    return v;
}

}  // namespace

void save_checkpoint(const ToyDetectorParams& params, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    write_u32(os, static_cast<std::uint32_t>(params.cfg.grid));
    write_u32(os, static_cast<std::uint32_t>(params.cfg.classes));
    write_u32(os, static_cast<std::uint32_t>(params.cfg.hidden));
    write_u32(os, static_cast<std::uint32_t>(params.cfg.channels));
    std::vector<double> bias{params.cfg.sigma_bias};
    write_doubles(os, bias);
    write_doubles(os, params.w1);
    write_doubles(os, params.b1);
    write_doubles(os, params.w2);
    write_doubles(os, params.b2);
    if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

ToyDetectorParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path.string());
    const std::uint32_t version = read_u32(is);
    if (version != kVersion)
        throw std::runtime_error("load_checkpoint: unsupported version in " + path.string());

    ToyDetectorParams p;
    p.cfg.grid = static_cast<int>(read_u32(is));
    p.cfg.classes = static_cast<int>(read_u32(is));
    p.cfg.hidden = static_cast<int>(read_u32(is));
    p.cfg.channels = static_cast<int>(read_u32(is));
    const std::vector<double> bias = read_doubles(is);
    if (bias.size() != 1) throw std::runtime_error("load_checkpoint: corrupt header");
    p.cfg.sigma_bias = bias[0];
    p.w1 = read_doubles(is);
    p.b1 = read_doubles(is);
    p.w2 = read_doubles(is);
    p.b2 = read_doubles(is);
    if (!is) throw std::runtime_error("load_checkpoint: truncated file " + path.string());

    const std::size_t cells = static_cast<std::size_t>(p.cfg.grid) * p.cfg.grid;
    const std::size_t d = static_cast<std::size_t>(descriptor_dim(p.cfg));
    const std::size_t o = static_cast<std::size_t>(output_dim(p.cfg));
    const std::size_t hd = static_cast<std::size_t>(p.cfg.hidden);
    if (p.w1.size() != cells * hd * d || p.b1.size() != cells * hd ||
        p.w2.size() != cells * o * hd || p.b2.size() != cells * o)
        throw std::runtime_error("load_checkpoint: dimension mismatch in " + path.string());
    return p;
}

}  // namespace confmix
