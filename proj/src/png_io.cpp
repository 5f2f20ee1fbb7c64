#include "nuc/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <fstream>
#include <vector>

#include "nuc/errors.hpp"

namespace nuc {

namespace {

struct RawPng {
    int width = 0;
    int height = 0;
    int bit_depth = 0;
    int channels = 0;
    std::size_t row_bytes = 0;
    std::vector<std::uint8_t> data;       // row_bytes * height
    std::vector<png_bytep> row_ptrs;
};

// libpng error handling is longjmp based; these helpers keep all C++
// object lifetime in the caller so a longjmp never skips a destructor.
bool read_raw(const char* path, RawPng& out, std::string& err) {
    FILE* f = std::fopen(path, "rb");
    if (!f) {
        err = "cannot open file";
        return false;
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(f);
        err = "libpng allocation failed";
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(f);
        err = "malformed PNG";
        return false;
    }
    png_init_io(png, f);
    png_read_info(png, info);

    int color_type = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.bit_depth = png_get_bit_depth(png, info);
    out.channels = png_get_channels(png, info);
    out.row_bytes = png_get_rowbytes(png, info);
    out.data.resize(out.row_bytes * out.height);
    out.row_ptrs.resize(out.height);
    for (int y = 0; y < out.height; ++y) out.row_ptrs[y] = out.data.data() + out.row_bytes * y;

    png_read_image(png, out.row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(f);
    return true;
}

bool write_raw(const char* path, int width, int height, int bit_depth, int color_type,
               const std::vector<png_bytep>& rows, std::string& err) {
    FILE* f = std::fopen(path, "wb");
    if (!f) {
        err = "cannot open file for writing";
        return false;
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(f);
        err = "libpng allocation failed";
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(f);
        err = "PNG write failed";
        return false;
    }
    png_init_io(png, f);
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, const_cast<png_bytep*>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fclose(f) != 0) {
        err = "flush failed";
        return false;
    }
    return true;
}

void write_raw_atomic(const std::filesystem::path& path, int width, int height, int bit_depth,
                      int color_type, const std::vector<png_bytep>& rows) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    std::string err;
    if (!write_raw(tmp.string().c_str(), width, height, bit_depth, color_type, rows, err)) {
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        throw IoError(path.string() + ": " + err);
    }
    std::filesystem::rename(tmp, path);
}

std::vector<png_bytep> make_rows(const std::uint8_t* data, std::size_t row_bytes, int height) {
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(data + row_bytes * static_cast<std::size_t>(y));
    return rows;
}

}  // namespace

RgbImage load_rgb_png(const std::filesystem::path& path) {
    RawPng raw;
    std::string err;
    if (!read_raw(path.string().c_str(), raw, err)) throw IoError(path.string() + ": " + err);
    if (raw.channels != 3 || raw.bit_depth != 8)
        throw IoError(path.string() + ": expected 8-bit RGB PNG");
    RgbImage img = make_rgb(raw.width, raw.height);
    img.pixels.assign(raw.data.begin(), raw.data.end());
    return img;
}

ClassMap load_class_png(const std::filesystem::path& path) {
    RawPng raw;
    std::string err;
    if (!read_raw(path.string().c_str(), raw, err)) throw IoError(path.string() + ": " + err);
    if (raw.channels != 1 || raw.bit_depth != 8)
        throw IoError(path.string() + ": expected 8-bit grayscale PNG");
    ClassMap m = make_class_map(raw.width, raw.height);
    m.labels.assign(raw.data.begin(), raw.data.end());
    for (auto v : m.labels)
        if (v > kNumClasses)
            throw ValueRangeError(path.string() + ": class value " + std::to_string(v) +
                                  " exceeds 6");
    return m;
}

InstanceMap load_instance_png(const std::filesystem::path& path) {
    RawPng raw;
    std::string err;
    if (!read_raw(path.string().c_str(), raw, err)) throw IoError(path.string() + ": " + err);
    if (raw.channels != 1 || (raw.bit_depth != 8 && raw.bit_depth != 16))
        throw IoError(path.string() + ": expected 8- or 16-bit grayscale PNG");
    InstanceMap m = make_instance_map(raw.width, raw.height);
    std::size_t n = m.labels.size();
    if (raw.bit_depth == 8) {
        for (std::size_t i = 0; i < n; ++i) m.labels[i] = raw.data[i];
    } else {
        // PNG stores 16-bit samples big-endian.
        for (std::size_t i = 0; i < n; ++i)
            m.labels[i] = (static_cast<std::uint32_t>(raw.data[2 * i]) << 8) | raw.data[2 * i + 1];
    }
    return m;
}

void save_rgb_png(const RgbImage& img, const std::filesystem::path& path) {
    if (img.width <= 0 || img.height <= 0) throw DimensionError("cannot save empty image");
    auto rows = make_rows(img.pixels.data(), static_cast<std::size_t>(img.width) * 3, img.height);
    write_raw_atomic(path, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, rows);
}

void save_class_png(const ClassMap& m, const std::filesystem::path& path) {
    if (m.width <= 0 || m.height <= 0) throw DimensionError("cannot save empty class map");
    validate_class_map(m);
    auto rows = make_rows(m.labels.data(), static_cast<std::size_t>(m.width), m.height);
    write_raw_atomic(path, m.width, m.height, 8, PNG_COLOR_TYPE_GRAY, rows);
}

void save_instance_png(const InstanceMap& m, const std::filesystem::path& path) {
    if (m.width <= 0 || m.height <= 0) throw DimensionError("cannot save empty instance map");
    std::vector<std::uint8_t> be(m.labels.size() * 2);
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
        std::uint32_t id = m.labels[i];
        if (id > 0xffff)
            throw ValueRangeError("instance id " + std::to_string(id) + " exceeds 65535");
        be[2 * i] = static_cast<std::uint8_t>(id >> 8);
        be[2 * i + 1] = static_cast<std::uint8_t>(id & 0xff);
    }
    auto rows = make_rows(be.data(), static_cast<std::size_t>(m.width) * 2, m.height);
    write_raw_atomic(path, m.width, m.height, 16, PNG_COLOR_TYPE_GRAY, rows);
}

void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoError("write failed: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace nuc
