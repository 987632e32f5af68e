#include "layerpeel/raster.hpp"

#include "layerpeel/error.hpp"
#include "layerpeel/occlusion.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

namespace layerpeel {

RasterImage::RasterImage(int width, int height, ColorRGBA fill) : width_(width), height_(height) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("RasterImage dimensions must be positive");
    data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 4);
    for (std::size_t i = 0; i < data_.size(); i += 4) {
        data_[i] = fill.r;
        data_[i + 1] = fill.g;
        data_[i + 2] = fill.b;
        data_[i + 3] = fill.a;
    }
}

DiffThreshold::DiffThreshold(int rho) : rho_(rho) {
    if (rho < 0 || rho > 255)
        throw std::invalid_argument("rho must lie in [0, 255]");
}

namespace {

void require_same_size(const RasterImage& a, const RasterImage& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw DimensionMismatch("image dimensions differ");
}

void require_same_size(const RasterImage& a, const BitMask& m) {
    if (a.width() != m.width() || a.height() != m.height())
        throw DimensionMismatch("image and mask dimensions differ");
}

} // namespace

void paint_mask(RasterImage& img, const BitMask& mask, ColorRGBA color) {
    require_same_size(img, mask);
    mask.for_each_set([&](int x, int y) { img.set_pixel(x, y, color); });
}

RasterImage rasterize(const SvgDoc& doc, int size, ColorRGBA background, RasterMode mode) {
    if (mode == RasterMode::HardEdged) {
        RasterImage img(size, size, background);
        for (const auto& p : doc.paths)
            paint_mask(img, coverage_mask(p, size, doc.viewbox), p.fill);
        return img;
    }
    constexpr int kSS = 4;
    const RasterImage big = rasterize(doc, size * kSS, background, RasterMode::HardEdged);
    RasterImage img(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            int acc[4] = {0, 0, 0, 0};
            for (int dy = 0; dy < kSS; ++dy)
                for (int dx = 0; dx < kSS; ++dx) {
                    const ColorRGBA c = big.pixel(x * kSS + dx, y * kSS + dy);
                    acc[0] += c.r;
                    acc[1] += c.g;
                    acc[2] += c.b;
                    acc[3] += c.a;
                }
            constexpr int n = kSS * kSS;
            img.set_pixel(x, y,
                          {std::uint8_t((acc[0] + n / 2) / n), std::uint8_t((acc[1] + n / 2) / n),
                           std::uint8_t((acc[2] + n / 2) / n), std::uint8_t((acc[3] + n / 2) / n)});
        }
    return img;
}

BitMask diff_mask(const RasterImage& a, const RasterImage& b, DiffThreshold threshold) {
    require_same_size(a, b);
    BitMask m(a.width(), a.height());
    const auto& da = a.data();
    const auto& db = b.data();
    const int rho = threshold.rho();
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
            const std::size_t o = (static_cast<std::size_t>(y) * a.width() + x) * 4;
            int d = 0;
            for (int c = 0; c < 3; ++c)
                d = std::max(d, std::abs(int(da[o + c]) - int(db[o + c])));
            if (d > rho)
                m.set(x, y);
        }
    return m;
}

RasterImage extract_region(const RasterImage& src, const BitMask& mask) {
    require_same_size(src, mask);
    RasterImage out(src.width(), src.height(), ColorRGBA::transparent());
    mask.for_each_set([&](int x, int y) {
        ColorRGBA c = src.pixel(x, y);
        c.a = 255;
        out.set_pixel(x, y, c);
    });
    return out;
}

bool is_blank(const RasterImage& img, int tolerance) {
    const int floor = 255 - tolerance;
    const auto& d = img.data();
    for (std::size_t i = 0; i < d.size(); i += 4)
        if (d[i] < floor || d[i + 1] < floor || d[i + 2] < floor)
            return false;
    return true;
}

RasterImage composite_over(const RasterImage& top, const RasterImage& bottom) {
    require_same_size(top, bottom);
    RasterImage out = bottom;
    auto& o = out.data();
    const auto& t = top.data();
    for (std::size_t i = 0; i < o.size(); i += 4) {
        const int ta = t[i + 3];
        if (ta == 0)
            continue;
        if (ta == 255) {
            std::copy_n(&t[i], 4, &o[i]);
            continue;
        }
        const int ba = o[i + 3];
        const int out_a = ta + (ba * (255 - ta) + 127) / 255;
        for (int c = 0; c < 3; ++c) {
            const int num = t[i + c] * ta * 255 + o[i + c] * ba * (255 - ta);
            const int den = out_a * 255;
            o[i + c] = static_cast<std::uint8_t>(den ? (num + den / 2) / den : 0);
        }
        o[i + 3] = static_cast<std::uint8_t>(out_a);
    }
    return out;
}

BitMask close_mask(const BitMask& mask) {
    const int w = mask.width(), h = mask.height();
    BitMask dil(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool any = false;
            for (int dy = -1; dy <= 1 && !any; ++dy)
                for (int dx = -1; dx <= 1 && !any; ++dx) {
                    const int xx = x + dx, yy = y + dy;
                    any = xx >= 0 && yy >= 0 && xx < w && yy < h && mask.get(xx, yy);
                }
            if (any)
                dil.set(x, y);
        }
    BitMask out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool all = true;
            for (int dy = -1; dy <= 1 && all; ++dy)
                for (int dx = -1; dx <= 1 && all; ++dx) {
                    const int xx = x + dx, yy = y + dy;
                    all = xx >= 0 && yy >= 0 && xx < w && yy < h && dil.get(xx, yy);
                }
            if (all)
                out.set(x, y);
        }
    // Erosion at the canvas border would otherwise shrink the input.
    out |= mask;
    return out;
}

std::size_t count_differing_pixels(const RasterImage& a, const RasterImage& b) {
    require_same_size(a, b);
    std::size_t n = 0;
    const auto& da = a.data();
    const auto& db = b.data();
    for (std::size_t i = 0; i < da.size(); i += 4)
        if (da[i] != db[i] || da[i + 1] != db[i + 1] || da[i + 2] != db[i + 2] || da[i + 3] != db[i + 3])
            ++n;
    return n;
}

} // namespace layerpeel
