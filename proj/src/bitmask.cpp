#include "layerpeel/bitmask.hpp"

#include "layerpeel/error.hpp"

#include <algorithm>
#include <stdexcept>

namespace layerpeel {

BitMask::BitMask(int width, int height) : width_(width), height_(height) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("BitMask dimensions must be positive");
    const std::size_t bits = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    words_.assign((bits + 63) / 64, 0);
}

void BitMask::require_same_size(const BitMask& o) const {
    if (o.width_ != width_ || o.height_ != height_)
        throw DimensionMismatch("bit mask dimensions differ");
}

void BitMask::fill_span(int y, int x0, int x1) {
    x0 = std::max(x0, 0);
    x1 = std::min(x1, width_);
    if (y < 0 || y >= height_ || x0 >= x1)
        return;
    std::size_t i = index(x0, y);
    const std::size_t end = index(x1 - 1, y) + 1;
    while (i < end) {
        const std::size_t w = i >> 6;
        const unsigned lo = static_cast<unsigned>(i & 63);
        const std::size_t word_end = std::min(end, (w + 1) << 6);
        const unsigned n = static_cast<unsigned>(word_end - i);
        const std::uint64_t run = n == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1);
        words_[w] |= run << lo;
        i = word_end;
    }
}

std::size_t BitMask::count() const {
    std::size_t n = 0;
    for (auto w : words_)
        n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

bool BitMask::any() const {
    return std::any_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w != 0; });
}

bool BitMask::intersects(const BitMask& o) const {
    require_same_size(o);
    for (std::size_t i = 0; i < words_.size(); ++i)
        if (words_[i] & o.words_[i])
            return true;
    return false;
}

std::optional<PixelBounds> BitMask::bounds() const {
    PixelBounds b{width_, height_, -1, -1};
    bool found = false;
    for_each_set([&](int x, int y) {
        found = true;
        b.x0 = std::min(b.x0, x);
        b.y0 = std::min(b.y0, y);
        b.x1 = std::max(b.x1, x);
        b.y1 = std::max(b.y1, y);
    });
    if (!found)
        return std::nullopt;
    return b;
}

BitMask& BitMask::operator&=(const BitMask& o) {
    require_same_size(o);
    for (std::size_t i = 0; i < words_.size(); ++i)
        words_[i] &= o.words_[i];
    return *this;
}

BitMask& BitMask::operator|=(const BitMask& o) {
    require_same_size(o);
    for (std::size_t i = 0; i < words_.size(); ++i)
        words_[i] |= o.words_[i];
    return *this;
}

BitMask& BitMask::subtract(const BitMask& o) {
    require_same_size(o);
    for (std::size_t i = 0; i < words_.size(); ++i)
        words_[i] &= ~o.words_[i];
    return *this;
}

BitMask BitMask::inverted() const {
    BitMask out = *this;
    for (auto& w : out.words_)
        w = ~w;
    // Clear padding bits past the last pixel.
    const std::size_t bits = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    if (bits % 64)
        out.words_.back() &= (std::uint64_t{1} << (bits % 64)) - 1;
    return out;
}

std::vector<BitMask> connected_components(const BitMask& mask, bool eight_connected) {
    const int w = mask.width(), h = mask.height();
    std::vector<BitMask> out;
    BitMask seen(w, h);
    std::vector<std::pair<int, int>> stack;
    mask.for_each_set([&](int sx, int sy) {
        if (seen.get(sx, sy))
            return;
        BitMask comp(w, h);
        stack.assign(1, {sx, sy});
        seen.set(sx, sy);
        while (!stack.empty()) {
            const auto [x, y] = stack.back();
            stack.pop_back();
            comp.set(x, y);
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if ((dx == 0 && dy == 0) || (!eight_connected && dx != 0 && dy != 0))
                        continue;
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h || !mask.get(nx, ny) || seen.get(nx, ny))
                        continue;
                    seen.set(nx, ny);
                    stack.emplace_back(nx, ny);
                }
        }
        out.push_back(std::move(comp));
    });
    return out;
}

} // namespace layerpeel
