#include "layerpeel/color.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <limits>

namespace layerpeel {

namespace {

struct NamedColor {
    std::string_view name;
    ColorRGBA color;
};

// CSS Color Module Level 4 named colors, alphabetical.
constexpr std::array kNamedColors = {
    NamedColor{"aliceblue", {240, 248, 255, 255}},
    NamedColor{"antiquewhite", {250, 235, 215, 255}},
    NamedColor{"aqua", {0, 255, 255, 255}},
    NamedColor{"aquamarine", {127, 255, 212, 255}},
    NamedColor{"azure", {240, 255, 255, 255}},
    NamedColor{"beige", {245, 245, 220, 255}},
    NamedColor{"bisque", {255, 228, 196, 255}},
    NamedColor{"black", {0, 0, 0, 255}},
    NamedColor{"blanchedalmond", {255, 235, 205, 255}},
    NamedColor{"blue", {0, 0, 255, 255}},
    NamedColor{"blueviolet", {138, 43, 226, 255}},
    NamedColor{"brown", {165, 42, 42, 255}},
    NamedColor{"burlywood", {222, 184, 135, 255}},
    NamedColor{"cadetblue", {95, 158, 160, 255}},
    NamedColor{"chartreuse", {127, 255, 0, 255}},
    NamedColor{"chocolate", {210, 105, 30, 255}},
    NamedColor{"coral", {255, 127, 80, 255}},
    NamedColor{"cornflowerblue", {100, 149, 237, 255}},
    NamedColor{"cornsilk", {255, 248, 220, 255}},
    NamedColor{"crimson", {220, 20, 60, 255}},
    NamedColor{"cyan", {0, 255, 255, 255}},
    NamedColor{"darkblue", {0, 0, 139, 255}},
    NamedColor{"darkcyan", {0, 139, 139, 255}},
    NamedColor{"darkgoldenrod", {184, 134, 11, 255}},
    NamedColor{"darkgray", {169, 169, 169, 255}},
    NamedColor{"darkgreen", {0, 100, 0, 255}},
    NamedColor{"darkgrey", {169, 169, 169, 255}},
    NamedColor{"darkkhaki", {189, 183, 107, 255}},
    NamedColor{"darkmagenta", {139, 0, 139, 255}},
    NamedColor{"darkolivegreen", {85, 107, 47, 255}},
    NamedColor{"darkorange", {255, 140, 0, 255}},
    NamedColor{"darkorchid", {153, 50, 204, 255}},
    NamedColor{"darkred", {139, 0, 0, 255}},
    NamedColor{"darksalmon", {233, 150, 122, 255}},
    NamedColor{"darkseagreen", {143, 188, 143, 255}},
    NamedColor{"darkslateblue", {72, 61, 139, 255}},
    NamedColor{"darkslategray", {47, 79, 79, 255}},
    NamedColor{"darkslategrey", {47, 79, 79, 255}},
    NamedColor{"darkturquoise", {0, 206, 209, 255}},
    NamedColor{"darkviolet", {148, 0, 211, 255}},
    NamedColor{"deeppink", {255, 20, 147, 255}},
    NamedColor{"deepskyblue", {0, 191, 255, 255}},
    NamedColor{"dimgray", {105, 105, 105, 255}},
    NamedColor{"dimgrey", {105, 105, 105, 255}},
    NamedColor{"dodgerblue", {30, 144, 255, 255}},
    NamedColor{"firebrick", {178, 34, 34, 255}},
    NamedColor{"floralwhite", {255, 250, 240, 255}},
    NamedColor{"forestgreen", {34, 139, 34, 255}},
    NamedColor{"fuchsia", {255, 0, 255, 255}},
    NamedColor{"gainsboro", {220, 220, 220, 255}},
    NamedColor{"ghostwhite", {248, 248, 255, 255}},
    NamedColor{"gold", {255, 215, 0, 255}},
    NamedColor{"goldenrod", {218, 165, 32, 255}},
    NamedColor{"gray", {128, 128, 128, 255}},
    NamedColor{"green", {0, 128, 0, 255}},
    NamedColor{"greenyellow", {173, 255, 47, 255}},
    NamedColor{"grey", {128, 128, 128, 255}},
    NamedColor{"honeydew", {240, 255, 240, 255}},
    NamedColor{"hotpink", {255, 105, 180, 255}},
    NamedColor{"indianred", {205, 92, 92, 255}},
    NamedColor{"indigo", {75, 0, 130, 255}},
    NamedColor{"ivory", {255, 255, 240, 255}},
    NamedColor{"khaki", {240, 230, 140, 255}},
    NamedColor{"lavender", {230, 230, 250, 255}},
    NamedColor{"lavenderblush", {255, 240, 245, 255}},
    NamedColor{"lawngreen", {124, 252, 0, 255}},
    NamedColor{"lemonchiffon", {255, 250, 205, 255}},
    NamedColor{"lightblue", {173, 216, 230, 255}},
    NamedColor{"lightcoral", {240, 128, 128, 255}},
    NamedColor{"lightcyan", {224, 255, 255, 255}},
    NamedColor{"lightgoldenrodyellow", {250, 250, 210, 255}},
    NamedColor{"lightgray", {211, 211, 211, 255}},
    NamedColor{"lightgreen", {144, 238, 144, 255}},
    NamedColor{"lightgrey", {211, 211, 211, 255}},
    NamedColor{"lightpink", {255, 182, 193, 255}},
    NamedColor{"lightsalmon", {255, 160, 122, 255}},
    NamedColor{"lightseagreen", {32, 178, 170, 255}},
    NamedColor{"lightskyblue", {135, 206, 250, 255}},
    NamedColor{"lightslategray", {119, 136, 153, 255}},
    NamedColor{"lightslategrey", {119, 136, 153, 255}},
    NamedColor{"lightsteelblue", {176, 196, 222, 255}},
    NamedColor{"lightyellow", {255, 255, 224, 255}},
    NamedColor{"lime", {0, 255, 0, 255}},
    NamedColor{"limegreen", {50, 205, 50, 255}},
    NamedColor{"linen", {250, 240, 230, 255}},
    NamedColor{"magenta", {255, 0, 255, 255}},
    NamedColor{"maroon", {128, 0, 0, 255}},
    NamedColor{"mediumaquamarine", {102, 205, 170, 255}},
    NamedColor{"mediumblue", {0, 0, 205, 255}},
    NamedColor{"mediumorchid", {186, 85, 211, 255}},
    NamedColor{"mediumpurple", {147, 112, 219, 255}},
    NamedColor{"mediumseagreen", {60, 179, 113, 255}},
    NamedColor{"mediumslateblue", {123, 104, 238, 255}},
    NamedColor{"mediumspringgreen", {0, 250, 154, 255}},
    NamedColor{"mediumturquoise", {72, 209, 204, 255}},
    NamedColor{"mediumvioletred", {199, 21, 133, 255}},
    NamedColor{"midnightblue", {25, 25, 112, 255}},
    NamedColor{"mintcream", {245, 255, 250, 255}},
    NamedColor{"mistyrose", {255, 228, 225, 255}},
    NamedColor{"moccasin", {255, 228, 181, 255}},
    NamedColor{"navajowhite", {255, 222, 173, 255}},
    NamedColor{"navy", {0, 0, 128, 255}},
    NamedColor{"oldlace", {253, 245, 230, 255}},
    NamedColor{"olive", {128, 128, 0, 255}},
    NamedColor{"olivedrab", {107, 142, 35, 255}},
    NamedColor{"orange", {255, 165, 0, 255}},
    NamedColor{"orangered", {255, 69, 0, 255}},
    NamedColor{"orchid", {218, 112, 214, 255}},
    NamedColor{"palegoldenrod", {238, 232, 170, 255}},
    NamedColor{"palegreen", {152, 251, 152, 255}},
    NamedColor{"paleturquoise", {175, 238, 238, 255}},
    NamedColor{"palevioletred", {219, 112, 147, 255}},
    NamedColor{"papayawhip", {255, 239, 213, 255}},
    NamedColor{"peachpuff", {255, 218, 185, 255}},
    NamedColor{"peru", {205, 133, 63, 255}},
    NamedColor{"pink", {255, 192, 203, 255}},
    NamedColor{"plum", {221, 160, 221, 255}},
    NamedColor{"powderblue", {176, 224, 230, 255}},
    NamedColor{"purple", {128, 0, 128, 255}},
    NamedColor{"rebeccapurple", {102, 51, 153, 255}},
    NamedColor{"red", {255, 0, 0, 255}},
    NamedColor{"rosybrown", {188, 143, 143, 255}},
    NamedColor{"royalblue", {65, 105, 225, 255}},
    NamedColor{"saddlebrown", {139, 69, 19, 255}},
    NamedColor{"salmon", {250, 128, 114, 255}},
    NamedColor{"sandybrown", {244, 164, 96, 255}},
    NamedColor{"seagreen", {46, 139, 87, 255}},
    NamedColor{"seashell", {255, 245, 238, 255}},
    NamedColor{"sienna", {160, 82, 45, 255}},
    NamedColor{"silver", {192, 192, 192, 255}},
    NamedColor{"skyblue", {135, 206, 235, 255}},
    NamedColor{"slateblue", {106, 90, 205, 255}},
    NamedColor{"slategray", {112, 128, 144, 255}},
    NamedColor{"slategrey", {112, 128, 144, 255}},
    NamedColor{"snow", {255, 250, 250, 255}},
    NamedColor{"springgreen", {0, 255, 127, 255}},
    NamedColor{"steelblue", {70, 130, 180, 255}},
    NamedColor{"tan", {210, 180, 140, 255}},
    NamedColor{"teal", {0, 128, 128, 255}},
    NamedColor{"thistle", {216, 191, 216, 255}},
    NamedColor{"tomato", {255, 99, 71, 255}},
    NamedColor{"turquoise", {64, 224, 208, 255}},
    NamedColor{"violet", {238, 130, 238, 255}},
    NamedColor{"wheat", {245, 222, 179, 255}},
    NamedColor{"white", {255, 255, 255, 255}},
    NamedColor{"whitesmoke", {245, 245, 245, 255}},
    NamedColor{"yellow", {255, 255, 0, 255}},
    NamedColor{"yellowgreen", {154, 205, 50, 255}},
};

} // namespace

std::optional<ColorRGBA> css_named_color(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    auto it = std::lower_bound(kNamedColors.begin(), kNamedColors.end(), lower,
                               [](const NamedColor& e, const std::string& key) { return e.name < key; });
    if (it != kNamedColors.end() && it->name == lower)
        return it->color;
    return std::nullopt;
}

std::string nearest_css_color_name(const ColorRGBA& c) {
    int best = std::numeric_limits<int>::max();
    std::string_view best_name;
    for (const auto& e : kNamedColors) {
        int dr = int(e.color.r) - c.r;
        int dg = int(e.color.g) - c.g;
        int db = int(e.color.b) - c.b;
        int d = dr * dr + dg * dg + db * db;
        if (d < best) {
            best = d;
            best_name = e.name;
        }
    }
    return std::string(best_name);
}

std::string to_hex(const ColorRGBA& c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
    return buf;
}

} // namespace layerpeel
