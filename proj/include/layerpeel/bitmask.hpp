#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace layerpeel {

/// Inclusive pixel bounds.
struct PixelBounds {
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
};

/// Row-major packed boolean grid (bit i = y * width + x).
class BitMask {
public:
    BitMask() = default;
    BitMask(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty_size() const { return width_ == 0 || height_ == 0; }

    bool get(int x, int y) const {
        const std::size_t i = index(x, y);
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }
    void set(int x, int y, bool value = true) {
        const std::size_t i = index(x, y);
        const std::uint64_t bit = std::uint64_t{1} << (i & 63);
        if (value)
            words_[i >> 6] |= bit;
        else
            words_[i >> 6] &= ~bit;
    }
    /// Sets bits [x0, x1) on row y.
    void fill_span(int y, int x0, int x1);

    std::size_t count() const;
    bool any() const;
    bool intersects(const BitMask& other) const;
    std::optional<PixelBounds> bounds() const;

    BitMask& operator&=(const BitMask& o);
    BitMask& operator|=(const BitMask& o);
    /// this &= ~o
    BitMask& subtract(const BitMask& o);
    BitMask inverted() const;

    friend BitMask operator&(BitMask a, const BitMask& b) { return a &= b; }
    friend BitMask operator|(BitMask a, const BitMask& b) { return a |= b; }
    friend bool operator==(const BitMask&, const BitMask&) = default;

    /// Calls f(x, y) for every set bit in row-major order.
    template <class F>
    void for_each_set(F&& f) const {
        for (std::size_t w = 0; w < words_.size(); ++w) {
            std::uint64_t bits = words_[w];
            while (bits) {
                const int b = std::countr_zero(bits);
                const std::size_t i = (w << 6) + static_cast<std::size_t>(b);
                f(static_cast<int>(i % static_cast<std::size_t>(width_)),
                  static_cast<int>(i / static_cast<std::size_t>(width_)));
                bits &= bits - 1;
            }
        }
    }

    const std::vector<std::uint64_t>& words() const { return words_; }

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }
    void require_same_size(const BitMask& o) const;

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Connected components of the set bits, in scanline discovery order.
/// 4-connected unless `eight_connected`.
std::vector<BitMask> connected_components(const BitMask& mask, bool eight_connected = false);

} // namespace layerpeel
