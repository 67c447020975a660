#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace confmix {

/// Dense pixel grid, interleaved channels, values in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> pixels;

    Image() = default;

    Image(int w, int h, int c, float fill = 0.0f)
        : width(w), height(h), channels(c),
          pixels(static_cast<std::size_t>(w) * h * c, fill) {
        if (w < 8 || h < 8 || c < 1)
            throw std::invalid_argument("Image: width/height must be >= 8 and channels >= 1");
    }

    float& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

}  // namespace confmix
