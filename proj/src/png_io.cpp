#include "layerpeel/png_io.hpp"

#include "layerpeel/error.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>

namespace layerpeel {

namespace {

struct ReadCursor {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

void on_error(png_structp png, png_const_charp msg) {
    auto* err = static_cast<std::string*>(png_get_error_ptr(png));
    if (err)
        *err = msg;
    png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

void write_to_vector(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

void flush_noop(png_structp) {}

void read_from_cursor(png_structp png, png_bytep data, png_size_t len) {
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cur->pos + len > cur->size)
        png_error(png, "truncated PNG data");
    std::memcpy(data, cur->data + cur->pos, len);
    cur->pos += len;
}

// Rows are 8-bit gray or RGBA depending on `channels`, or 1-bit gray when bit_depth == 1.
std::vector<std::uint8_t> encode_rows(int width, int height, int color_type, int bit_depth,
                                      const std::vector<std::vector<std::uint8_t>>& rows) {
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_error, on_warning);
    if (!png)
        throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    std::vector<std::uint8_t> out;
    std::vector<png_bytep> ptrs(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        ptrs[i] = const_cast<png_bytep>(rows[i].data());
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("PNG encode failed: " + err);
    }
    png_set_write_fn(png, &out, write_to_vector, flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    png_write_image(png, ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

} // namespace

bool looks_like_png(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
    const int w = img.width(), h = img.height();
    std::vector<std::vector<std::uint8_t>> rows(static_cast<std::size_t>(h));
    const auto& d = img.data();
    const std::size_t stride = static_cast<std::size_t>(w) * 4;
    for (int y = 0; y < h; ++y)
        rows[y].assign(d.begin() + y * stride, d.begin() + (y + 1) * stride);
    return encode_rows(w, h, PNG_COLOR_TYPE_RGBA, 8, rows);
}

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
    if (!looks_like_png(bytes))
        throw std::runtime_error("not a PNG stream");
    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_error, on_warning);
    if (!png)
        throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    ReadCursor cur{bytes.data(), bytes.size(), 0};
    RasterImage img;
    std::vector<png_bytep> ptrs;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("PNG decode failed: " + err);
    }
    png_set_read_fn(png, &cur, read_from_cursor);
    png_read_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color_type = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (depth == 16)
        png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    if (!(color_type & PNG_COLOR_MASK_ALPHA) && !png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_filler(png, 0xFF, PNG_FILLER_AFTER);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    img = RasterImage(static_cast<int>(w), static_cast<int>(h));
    ptrs.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        ptrs[y] = img.data().data() + static_cast<std::size_t>(y) * w * 4;
    png_read_image(png, ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::filesystem::path& path, const RasterImage& img) { write_file(path, encode_png(img)); }

RasterImage read_png(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return decode_png(bytes);
}

std::vector<std::uint8_t> encode_mask_png(const BitMask& mask) {
    const int w = mask.width(), h = mask.height();
    const std::size_t stride = (static_cast<std::size_t>(w) + 7) / 8;
    std::vector<std::vector<std::uint8_t>> rows(static_cast<std::size_t>(h), std::vector<std::uint8_t>(stride, 0));
    mask.for_each_set([&](int x, int y) { rows[y][x >> 3] |= static_cast<std::uint8_t>(0x80u >> (x & 7)); });
    return encode_rows(w, h, PNG_COLOR_TYPE_GRAY, 1, rows);
}

BitMask decode_mask_png(std::span<const std::uint8_t> bytes) {
    const RasterImage img = decode_png(bytes);
    BitMask m(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const ColorRGBA c = img.pixel(x, y);
            if (c.a >= 128 && (int(c.r) + c.g + c.b) >= 3 * 128)
                m.set(x, y);
        }
    return m;
}

void write_mask_png(const std::filesystem::path& path, const BitMask& mask) { write_file(path, encode_mask_png(mask)); }

BitMask read_mask_png(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return decode_mask_png(bytes);
}

} // namespace layerpeel
