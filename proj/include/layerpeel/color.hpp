#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace layerpeel {

struct ColorRGBA {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    std::uint8_t a = 255;

    friend bool operator==(const ColorRGBA&, const ColorRGBA&) = default;

    static constexpr ColorRGBA white() { return {255, 255, 255, 255}; }
    static constexpr ColorRGBA black() { return {0, 0, 0, 255}; }
    static constexpr ColorRGBA transparent() { return {0, 0, 0, 0}; }
};

/// Looks up a CSS named color (case-insensitive). Returns nullopt for unknown names.
std::optional<ColorRGBA> css_named_color(std::string_view name);

/// Nearest CSS named color by squared RGB distance; ties resolve to the first
/// entry in the table (alphabetical).
std::string nearest_css_color_name(const ColorRGBA& c);

/// "#rrggbb"
std::string to_hex(const ColorRGBA& c);

} // namespace layerpeel
