#include "confmix/scenes.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace confmix {

namespace {

using nlohmann::json;

constexpr int kNoiseGrid = 4;  // background modulation control points per side

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

struct ShapeColor {
    double rgb[3];
};

// class 0 (rectangle) is warm, class 1 (ellipse) is cool; the per-channel
// cell means stay separable under moderate domain shifts
ShapeColor sample_color(int class_id, Rng& rng) {
    const double hi = rng.uniform(0.68, 0.95);
    const double lo1 = rng.uniform(0.08, 0.30);
    const double lo2 = rng.uniform(0.08, 0.30);
    if (class_id == 0) return {{hi, lo1, lo2}};
    return {{lo1, lo2, hi}};
}

}  // namespace

LabeledImage generate_scene(const SceneSpec& spec, Rng& rng) {
    const int n = spec.image_size;
    LabeledImage scene;
    scene.image = Image(n, n, spec.channels);

    // background: flat base + bilinear low-frequency modulation
    const double base = rng.uniform(spec.bg_low, spec.bg_high);
    double noise[kNoiseGrid + 1][kNoiseGrid + 1];
    for (int gy = 0; gy <= kNoiseGrid; ++gy)
        for (int gx = 0; gx <= kNoiseGrid; ++gx)
            noise[gy][gx] = rng.uniform(-spec.bg_noise, spec.bg_noise);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double fx = static_cast<double>(x) / n * kNoiseGrid;
            const double fy = static_cast<double>(y) / n * kNoiseGrid;
            const int ix = std::min(static_cast<int>(fx), kNoiseGrid - 1);
            const int iy = std::min(static_cast<int>(fy), kNoiseGrid - 1);
            const double tx = fx - ix, ty = fy - iy;
            const double v = noise[iy][ix] * (1 - tx) * (1 - ty) +
                             noise[iy][ix + 1] * tx * (1 - ty) +
                             noise[iy + 1][ix] * (1 - tx) * ty +
                             noise[iy + 1][ix + 1] * tx * ty;
            for (int c = 0; c < spec.channels; ++c)
                scene.image.at(x, y, c) = clamp01(base + v);
        }

    // objects: rejection-sample boxes with bounded pairwise overlap
    const int count = spec.min_objects +
                      static_cast<int>(rng.uniform_int(
                          static_cast<std::uint64_t>(spec.max_objects - spec.min_objects + 1)));
    const double pad = 1.0 / n;
    for (int obj = 0; obj < count; ++obj) {
        Box box;
        bool placed = false;
        for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
            box.w = rng.uniform(spec.min_size, spec.max_size);
            box.h = box.w * rng.uniform(0.8, 1.25);
            box.h = std::clamp(box.h, spec.min_size, spec.max_size);
            box.cx = rng.uniform(box.w / 2 + pad, 1.0 - box.w / 2 - pad);
            box.cy = rng.uniform(box.h / 2 + pad, 1.0 - box.h / 2 - pad);
            placed = true;
            for (const LabeledBox& other : scene.boxes)
                if (iou(box, other.box) > spec.max_gt_iou) {
                    placed = false;
                    break;
                }
        }
        if (!placed) break;  // scene too crowded; keep what fits

        const int class_id = static_cast<int>(rng.uniform_int(2));
        const ShapeColor color = sample_color(class_id, rng);

        const double hw = box.w / 2 * n, hh = box.h / 2 * n;
        const double ox = box.cx * n, oy = box.cy * n;
        const int x0 = std::max(0, static_cast<int>(std::floor(ox - hw)));
        const int x1 = std::min(n - 1, static_cast<int>(std::ceil(ox + hw)));
        const int y0 = std::max(0, static_cast<int>(std::floor(oy - hh)));
        const int y1 = std::min(n - 1, static_cast<int>(std::ceil(oy + hh)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double dx = (x + 0.5 - ox) / hw;
                const double dy = (y + 0.5 - oy) / hh;
                // radial distance hits 1 on the shape boundary; the shading
                // gradient is what gives the detector sub-cell position cues
                const double dist = class_id == 0
                                        ? std::max(std::abs(dx), std::abs(dy))
                                        : std::sqrt(dx * dx + dy * dy);
                if (dist > 1.0) continue;
                const double shade = 1.0 - spec.shading * dist;
                for (int c = 0; c < spec.channels && c < 3; ++c)
                    scene.image.at(x, y, c) = clamp01(color.rgb[c] * shade);
            }
        scene.boxes.push_back({box, class_id});
    }
    return scene;
}

LabeledImage apply_shift(const LabeledImage& img, const DomainShift& shift, Rng& rng) {
    LabeledImage out = img;
    if (shift.is_identity()) return out;

    const bool rotate_hue = shift.hue_degrees != 0.0 && img.image.channels == 3;
    double m[3][3];
    if (rotate_hue) {
        const double a = shift.hue_degrees * 3.14159265358979323846 / 180.0;
        const double c = std::cos(a), s = std::sin(a);
        const double t = (1.0 - c) / 3.0, u = std::sqrt(1.0 / 3.0) * s;
        m[0][0] = c + t; m[0][1] = t - u; m[0][2] = t + u;
        m[1][0] = t + u; m[1][1] = c + t; m[1][2] = t - u;
        m[2][0] = t - u; m[2][1] = t + u; m[2][2] = c + t;
    }

    const int nc = img.image.channels;
    std::vector<double> px(nc);
    for (int y = 0; y < img.image.height; ++y)
        for (int x = 0; x < img.image.width; ++x) {
            for (int c = 0; c < nc; ++c) {
                double v = img.image.at(x, y, c);
                v = (v - 0.5) * shift.contrast + 0.5 + shift.brightness;
                px[c] = v;
            }
            if (rotate_hue) {
                const double r = px[0], g = px[1], b = px[2];
                px[0] = m[0][0] * r + m[0][1] * g + m[0][2] * b;
                px[1] = m[1][0] * r + m[1][1] * g + m[1][2] * b;
                px[2] = m[2][0] * r + m[2][1] * g + m[2][2] * b;
            }
            for (int c = 0; c < nc; ++c) {
                double v = (1.0 - shift.fog) * px[c] + shift.fog * shift.fog_gray;
                if (shift.noise_sigma > 0.0) v += rng.normal(0.0, shift.noise_sigma);
                out.image.at(x, y, c) = clamp01(v);
            }
        }
    return out;
}

Dataset generate_dataset(const SceneSpec& spec, const DomainShift& shift, Domain domain,
                         int count, std::uint64_t seed) {
    Dataset ds;
    ds.domain = domain;
    ds.seed = seed;
    ds.spec = spec;
    ds.items.reserve(count);
    const Rng base(seed);
    for (int i = 0; i < count; ++i) {
        Rng rng = base.split(static_cast<std::uint64_t>(i));
        LabeledImage img = generate_scene(spec, rng);
        if (!shift.is_identity()) img = apply_shift(img, shift, rng);
        img.domain = domain;
        ds.items.push_back(std::move(img));
    }
    return ds;
}

// ---------------------------------------------------------------------------
// PPM + dataset directory I/O
// ---------------------------------------------------------------------------

void write_ppm(const Image& image, const std::filesystem::path& path) {
    if (image.channels != 3)
        throw std::invalid_argument("write_ppm: only 3-channel images supported");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_ppm: cannot open " + path.string());
    os << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(image.width) * 3);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < 3; ++c)
                row[static_cast<std::size_t>(x) * 3 + c] = static_cast<unsigned char>(
                    std::lround(std::clamp(image.at(x, y, c), 0.0f, 1.0f) * 255.0));
        os.write(reinterpret_cast<const char*>(row.data()), static_cast<long>(row.size()));
    }
    if (!os) throw std::runtime_error("write_ppm: write failed for " + path.string());
}

namespace {

int next_ppm_token(std::istream& is) {
    // skip whitespace and '#' comment lines, then read one integer
    int c = is.get();
    while (c != EOF && (std::isspace(c) || c == '#')) {
        if (c == '#')
            while (c != EOF && c != '\n') c = is.get();
        c = is.get();
    }
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = is.get();
    }
    if (!any) throw std::runtime_error("read_ppm: malformed header");
    return value;
}

}  // namespace

Image read_ppm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_ppm: cannot open " + path.string());
    char magic[2];
    is.read(magic, 2);
    if (!is || magic[0] != 'P' || magic[1] != '6')
        throw std::runtime_error("read_ppm: not a binary PPM: " + path.string());
    const int width = next_ppm_token(is);
    const int height = next_ppm_token(is);
    const int maxval = next_ppm_token(is);
    if (maxval != 255)
        throw std::runtime_error("read_ppm: unsupported maxval in " + path.string());

    Image image(width, height, 3);
    std::vector<unsigned char> row(static_cast<std::size_t>(width) * 3);
    for (int y = 0; y < height; ++y) {
        is.read(reinterpret_cast<char*>(row.data()), static_cast<long>(row.size()));
        if (!is) throw std::runtime_error("read_ppm: truncated pixel data in " + path.string());
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c)
                image.at(x, y, c) =
                    static_cast<float>(row[static_cast<std::size_t>(x) * 3 + c]) / 255.0f;
    }
    return image;
}

namespace {

std::string index_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", i);
    return buf;
}

json spec_to_json(const SceneSpec& s) {
    return json{{"image_size", s.image_size},   {"channels", s.channels},
                {"min_objects", s.min_objects}, {"max_objects", s.max_objects},
                {"min_size", s.min_size},       {"max_size", s.max_size},
                {"max_gt_iou", s.max_gt_iou},   {"shading", s.shading},
                {"bg_low", s.bg_low},           {"bg_high", s.bg_high},
                {"bg_noise", s.bg_noise}};
}

SceneSpec spec_from_json(const json& j) {
    SceneSpec s;
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

}  // namespace

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "labels");

    for (std::size_t i = 0; i < ds.items.size(); ++i) {
        const std::string name = index_name(static_cast<int>(i));
        write_ppm(ds.items[i].image, dir / "images" / (name + ".ppm"));
        std::ofstream os(dir / "labels" / (name + ".txt"));
        if (!os) throw std::runtime_error("write_dataset: cannot write labels for " + name);
        for (const LabeledBox& lb : ds.items[i].boxes) {
            char line[160];
            std::snprintf(line, sizeof(line), "%d %.6f %.6f %.6f %.6f\n", lb.class_id,
                          lb.box.cx, lb.box.cy, lb.box.w, lb.box.h);
            os << line;
        }
    }

    json meta{{"domain", ds.domain == Domain::Source ? "source" : "target"},
              {"seed", ds.seed},
              {"count", ds.items.size()},
              {"spec", spec_to_json(ds.spec)}};
    std::ofstream os(dir / "meta.json");
    os << meta.dump(2) << "\n";
    if (!os) throw std::runtime_error("write_dataset: cannot write meta.json");
}

namespace {

std::vector<LabeledBox> read_labels(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_dataset: cannot open " + path.string());
    std::vector<LabeledBox> boxes;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        LabeledBox lb;
        std::string extra;
        if (!(ls >> lb.class_id >> lb.box.cx >> lb.box.cy >> lb.box.w >> lb.box.h) ||
            (ls >> extra) || lb.class_id < 0 || !lb.box.valid())
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": malformed label line (want: class cx cy w h)");
        boxes.push_back(lb);
    }
    return boxes;
}

}  // namespace

Dataset read_dataset(const std::filesystem::path& dir) {
    std::ifstream ms(dir / "meta.json");
    if (!ms) throw std::runtime_error("read_dataset: missing meta.json in " + dir.string());
    json meta = json::parse(ms, nullptr, /*allow_exceptions=*/true);

    Dataset ds;
    const std::string domain = meta.value("domain", "source");
    ds.domain = domain == "target" ? Domain::Target : Domain::Source;
    ds.seed = meta.value("seed", std::uint64_t{0});
    if (meta.contains("spec")) ds.spec = spec_from_json(meta["spec"]);
    const int count = meta.value("count", 0);

    ds.items.reserve(count);
    for (int i = 0; i < count; ++i) {
        const std::string name = index_name(i);
        LabeledImage item;
        item.image = read_ppm(dir / "images" / (name + ".ppm"));
        item.boxes = read_labels(dir / "labels" / (name + ".txt"));
        item.domain = ds.domain;
        ds.items.push_back(std::move(item));
    }
    return ds;
}

}  // namespace confmix
