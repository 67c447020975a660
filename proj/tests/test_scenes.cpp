#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "confmix/scenes.hpp"
#include "test_support.hpp"

using namespace confmix;
using namespace testsupport;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() /
                     ("confmix_scenes_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// object pixels break the gray background's channel equality
bool is_object_pixel(const Image& img, int x, int y) {
    return std::abs(img.at(x, y, 0) - img.at(x, y, 2)) > 0.1f;
}

}  // namespace

TEST_CASE("zero object count yields a background-only scene") {
    SceneSpec spec;
    spec.min_objects = 0;
    spec.max_objects = 0;
    Rng rng(71);
    const LabeledImage scene = generate_scene(spec, rng);
    CHECK(scene.boxes.empty());
    for (int y = 0; y < spec.image_size; ++y)
        for (int x = 0; x < spec.image_size; ++x) CHECK(!is_object_pixel(scene.image, x, y));
}

TEST_CASE("generation is bit-identical under a fixed seed") {
    SceneSpec spec;
    Rng a(72), b(72);
    const LabeledImage s1 = generate_scene(spec, a);
    const LabeledImage s2 = generate_scene(spec, b);
    CHECK(s1.image.pixels == s2.image.pixels);
    REQUIRE(s1.boxes.size() == s2.boxes.size());
    for (std::size_t i = 0; i < s1.boxes.size(); ++i)
        CHECK(same_box(s1.boxes[i].box, s2.boxes[i].box));
}

TEST_CASE("scene invariants: boxes inside the image with bounded overlap") {
    SceneSpec spec;
    Rng rng(73);
    for (int trial = 0; trial < 50; ++trial) {
        const LabeledImage scene = generate_scene(spec, rng);
        for (const LabeledBox& lb : scene.boxes) {
            CHECK(lb.box.valid());
            const Rect c = lb.box.corners();
            CHECK(c.x0 >= 0.0);
            CHECK(c.y0 >= 0.0);
            CHECK(c.x1 <= 1.0);
            CHECK(c.y1 <= 1.0);
        }
        for (std::size_t i = 0; i < scene.boxes.size(); ++i)
            for (std::size_t j = i + 1; j < scene.boxes.size(); ++j)
                CHECK(iou(scene.boxes[i].box, scene.boxes[j].box) <= 0.3 + 1e-12);
    }
}

TEST_CASE("labels tightly bound the rendered pixels") {
    SceneSpec spec;
    spec.min_objects = 1;
    spec.max_objects = 1;  // single object so occlusion cannot shrink the mask
    Rng rng(74);
    const double px = 1.0 / spec.image_size;
    for (int trial = 0; trial < 30; ++trial) {
        const LabeledImage scene = generate_scene(spec, rng);
        REQUIRE(scene.boxes.size() == 1);
        int x0 = spec.image_size, x1 = -1, y0 = spec.image_size, y1 = -1;
        for (int y = 0; y < spec.image_size; ++y)
            for (int x = 0; x < spec.image_size; ++x)
                if (is_object_pixel(scene.image, x, y)) {
                    x0 = std::min(x0, x);
                    x1 = std::max(x1, x);
                    y0 = std::min(y0, y);
                    y1 = std::max(y1, y);
                }
        REQUIRE(x1 >= 0);
        const Rect want = scene.boxes[0].box.corners();
        // pixel-scan extent within one pixel of the labelled corners
        CHECK(std::abs((x0 + 0.5) * px - want.x0) <= px);
        CHECK(std::abs((x1 + 0.5) * px - want.x1) <= px);
        CHECK(std::abs((y0 + 0.5) * px - want.y0) <= px);
        CHECK(std::abs((y1 + 0.5) * px - want.y1) <= px);
        // rendered pixels never leave the labelled box
        CHECK((x0 + 0.5) * px >= want.x0 - 1e-9);
        CHECK((x1 + 0.5) * px <= want.x1 + 1e-9);
    }
}

TEST_CASE("identity shift leaves the image untouched") {
    SceneSpec spec;
    Rng rng(75);
    const LabeledImage scene = generate_scene(spec, rng);
    Rng shift_rng(1);
    const LabeledImage shifted = apply_shift(scene, DomainShift{}, shift_rng);
    CHECK(shifted.image.pixels == scene.image.pixels);
}

TEST_CASE("full fog collapses to the fog gray") {
    SceneSpec spec;
    Rng rng(76);
    const LabeledImage scene = generate_scene(spec, rng);
    DomainShift shift;
    shift.fog = 1.0;  // boundary case, disallowed in training configs
    shift.fog_gray = 0.6;
    Rng shift_rng(1);
    const LabeledImage foggy = apply_shift(scene, shift, shift_rng);
    for (float p : foggy.image.pixels) CHECK(p == doctest::Approx(0.6).epsilon(1e-6));
}

TEST_CASE("shifts never touch the labels and stay in range") {
    SceneSpec spec;
    Rng rng(77);
    const LabeledImage scene = generate_scene(spec, rng);
    DomainShift shift;
    shift.brightness = -0.2;
    shift.contrast = 0.7;
    shift.noise_sigma = 0.05;
    shift.fog = 0.4;
    shift.hue_degrees = 30.0;
    Rng shift_rng(9);
    const LabeledImage shifted = apply_shift(scene, shift, shift_rng);
    REQUIRE(shifted.boxes.size() == scene.boxes.size());
    for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
        CHECK(same_box(shifted.boxes[i].box, scene.boxes[i].box));
        CHECK(shifted.boxes[i].class_id == scene.boxes[i].class_id);
    }
    for (float p : shifted.image.pixels) {
        CHECK(p >= 0.0f);
        CHECK(p <= 1.0f);
    }
}

TEST_CASE("generate_dataset is reproducible from its seed") {
    SceneSpec spec;
    DomainShift shift;
    shift.fog = 0.3;
    shift.noise_sigma = 0.02;
    const Dataset a = generate_dataset(spec, shift, Domain::Target, 5, 123);
    const Dataset b = generate_dataset(spec, shift, Domain::Target, 5, 123);
    REQUIRE(a.items.size() == 5);
    for (std::size_t i = 0; i < a.items.size(); ++i)
        CHECK(a.items[i].image.pixels == b.items[i].image.pixels);
}

TEST_CASE("ppm round-trips within quantization error") {
    TempDir tmp;
    Rng rng(78);
    Image img(16, 16, 3);
    for (float& p : img.pixels) p = static_cast<float>(rng.uniform());
    write_ppm(img, tmp.path / "img.ppm");
    const Image back = read_ppm(tmp.path / "img.ppm");
    REQUIRE(back.width == 16);
    REQUIRE(back.channels == 3);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        CHECK(std::abs(img.pixels[i] - back.pixels[i]) <= 1.0f / 255.0f);
}

TEST_CASE("empty dataset round-trips") {
    TempDir tmp;
    Dataset ds;
    ds.domain = Domain::Target;
    ds.seed = 42;
    write_dataset(ds, tmp.path / "empty");
    const Dataset back = read_dataset(tmp.path / "empty");
    CHECK(back.items.empty());
    CHECK(back.domain == Domain::Target);
    CHECK(back.seed == 42);
}

TEST_CASE("dataset round-trips with quantized pixels and rounded labels") {
    TempDir tmp;
    SceneSpec spec;
    const Dataset ds = generate_dataset(spec, DomainShift{}, Domain::Source, 10, 7);
    write_dataset(ds, tmp.path / "ds");
    const Dataset back = read_dataset(tmp.path / "ds");
    REQUIRE(back.items.size() == 10);
    CHECK(back.spec.image_size == spec.image_size);
    for (std::size_t i = 0; i < ds.items.size(); ++i) {
        const auto& orig = ds.items[i];
        const auto& copy = back.items[i];
        REQUIRE(copy.boxes.size() == orig.boxes.size());
        for (std::size_t b = 0; b < orig.boxes.size(); ++b) {
            CHECK(copy.boxes[b].class_id == orig.boxes[b].class_id);
            CHECK(same_box(copy.boxes[b].box, orig.boxes[b].box, 1e-6));
        }
        float max_err = 0.0f;
        for (std::size_t p = 0; p < orig.image.pixels.size(); ++p)
            max_err = std::max(max_err, std::abs(orig.image.pixels[p] - copy.image.pixels[p]));
        CHECK(max_err <= 1.0f / 255.0f);
    }
}

TEST_CASE("malformed label lines are reported with file and line") {
    TempDir tmp;
    SceneSpec spec;
    const Dataset ds = generate_dataset(spec, DomainShift{}, Domain::Source, 2, 3);
    write_dataset(ds, tmp.path / "bad");
    {
        std::ofstream os(tmp.path / "bad" / "labels" / "0001.txt", std::ios::app);
        os << "0 0.5 oops 0.2 0.2\n";
    }
    try {
        read_dataset(tmp.path / "bad");
        FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("0001.txt") != std::string::npos);
        CHECK(msg.find("malformed") != std::string::npos);
    }
}
