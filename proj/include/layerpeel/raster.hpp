#pragma once

#include "layerpeel/bitmask.hpp"
#include "layerpeel/color.hpp"
#include "layerpeel/svg.hpp"

#include <cstdint>
#include <vector>

namespace layerpeel {

/// Row-major 8-bit RGBA image.
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, ColorRGBA fill = ColorRGBA::transparent());

    int width() const { return width_; }
    int height() const { return height_; }

    ColorRGBA pixel(int x, int y) const {
        const std::uint8_t* p = &data_[offset(x, y)];
        return {p[0], p[1], p[2], p[3]};
    }
    void set_pixel(int x, int y, ColorRGBA c) {
        std::uint8_t* p = &data_[offset(x, y)];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
        p[3] = c.a;
    }

    const std::vector<std::uint8_t>& data() const { return data_; }
    std::vector<std::uint8_t>& data() { return data_; }

    friend bool operator==(const RasterImage&, const RasterImage&) = default;

private:
    std::size_t offset(int x, int y) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 4;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Strict max-channel threshold used by diff_mask.
class DiffThreshold {
public:
    static constexpr int kDefault = 20;
    constexpr DiffThreshold() = default;
    explicit DiffThreshold(int rho);
    int rho() const { return rho_; }

private:
    int rho_ = kDefault;
};

enum class RasterMode {
    HardEdged,   // pixel-center sampling; used for every exactness test
    Antialiased, // 4x4 supersampled; display only
};

/// Painter's-algorithm render of `doc` onto `background`.
RasterImage rasterize(const SvgDoc& doc, int size = 512, ColorRGBA background = ColorRGBA::white(),
                      RasterMode mode = RasterMode::HardEdged);

/// Bit set iff max over RGB of |a - b| > rho. Throws DimensionMismatch.
BitMask diff_mask(const RasterImage& a, const RasterImage& b, DiffThreshold threshold = {});

/// Source pixels where the mask is set (forced opaque), transparent elsewhere.
RasterImage extract_region(const RasterImage& src, const BitMask& mask);

/// True iff every RGB channel of every pixel is >= 255 - tolerance.
bool is_blank(const RasterImage& img, int tolerance = 0);

/// Source-over compositing of `top` onto `bottom`. Throws DimensionMismatch.
RasterImage composite_over(const RasterImage& top, const RasterImage& bottom);

/// Paints `color` onto `img` wherever `mask` is set.
void paint_mask(RasterImage& img, const BitMask& mask, ColorRGBA color);

/// Morphological closing (3x3 dilation then erosion); optional cleanup for
/// generative backends.
BitMask close_mask(const BitMask& mask);

/// Number of pixels that differ in any channel.
std::size_t count_differing_pixels(const RasterImage& a, const RasterImage& b);

} // namespace layerpeel
