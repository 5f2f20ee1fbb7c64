#include "nuc/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "nuc/errors.hpp"
#include "nuc/rng.hpp"
#include "nuc/stain.hpp"
#include "test_support.hpp"

using namespace nuc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

/// Raw 8-bit grayscale writer, used to craft files the library's own
/// writers refuse to produce.
void write_gray8(const fs::path& p, int w, int h, const std::vector<std::uint8_t>& data) {
    FILE* f = std::fopen(p.string().c_str(), "wb");
    REQUIRE(f != nullptr);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    REQUIRE(setjmp(png_jmpbuf(png)) == 0);
    png_init_io(png, f);
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = const_cast<png_bytep>(data.data() + static_cast<std::size_t>(y) * w);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
}

}  // namespace

TEST_CASE("rgb png round trip") {
    TempDir dir("nuc_io_rgb");
    Rng rng(1, 801);
    RgbImage img = make_rgb(33, 21);
    for (auto& px : img.pixels) px = static_cast<std::uint8_t>(rng.next_below(256));
    save_rgb_png(img, dir.path / "a.png");
    RgbImage back = load_rgb_png(dir.path / "a.png");
    CHECK(back.width == img.width);
    CHECK(back.pixels == img.pixels);
    CHECK_FALSE(fs::exists(dir.path / "a.png.tmp"));
}

TEST_CASE("instance png round trip with large ids") {
    TempDir dir("nuc_io_inst");
    InstanceMap m = make_instance_map(16, 16);
    m.at(0, 0) = 1;
    m.at(5, 5) = 300;
    m.at(15, 15) = 65535;
    save_instance_png(m, dir.path / "i.png");
    InstanceMap back = load_instance_png(dir.path / "i.png");
    CHECK(back.labels == m.labels);

    m.at(1, 1) = 70000;
    CHECK_THROWS_AS(save_instance_png(m, dir.path / "bad.png"), ValueRangeError);
}

TEST_CASE("class png round trip and range validation") {
    TempDir dir("nuc_io_cls");
    ClassMap m = make_class_map(9, 7);
    for (std::size_t i = 0; i < m.labels.size(); ++i)
        m.labels[i] = static_cast<std::uint8_t>(i % 7);
    save_class_png(m, dir.path / "c.png");
    ClassMap back = load_class_png(dir.path / "c.png");
    CHECK(back.labels == m.labels);

    // Save-side range check.
    m.labels[0] = 7;
    CHECK_THROWS_AS(save_class_png(m, dir.path / "bad.png"), ValueRangeError);

    // Load-side range check on a file produced elsewhere.
    std::vector<std::uint8_t> raw(9 * 7, 0);
    raw[10] = 7;
    write_gray8(dir.path / "external.png", 9, 7, raw);
    CHECK_THROWS_AS(load_class_png(dir.path / "external.png"), ValueRangeError);
}

TEST_CASE("8-bit grayscale loads as an instance map") {
    TempDir dir("nuc_io_gray8");
    std::vector<std::uint8_t> raw(16, 0);
    raw[3] = 9;
    write_gray8(dir.path / "g.png", 4, 4, raw);
    InstanceMap m = load_instance_png(dir.path / "g.png");
    CHECK(m.labels[3] == 9);
}

TEST_CASE("format mismatches are load errors") {
    TempDir dir("nuc_io_badfmt");
    save_rgb_png(make_rgb(4, 4, 128), dir.path / "rgb.png");
    CHECK_THROWS_AS(load_class_png(dir.path / "rgb.png"), IoError);
    CHECK_THROWS_AS(load_instance_png(dir.path / "rgb.png"), IoError);

    save_instance_png(make_instance_map(4, 4), dir.path / "i16.png");
    CHECK_THROWS_AS(load_rgb_png(dir.path / "i16.png"), IoError);
    CHECK_THROWS_AS(load_class_png(dir.path / "i16.png"), IoError);  // 16-bit depth
}

TEST_CASE("malformed files raise IoError") {
    TempDir dir("nuc_io_malformed");
    {
        std::ofstream out(dir.path / "garbage.png", std::ios::binary);
        out << "this is not a png";
    }
    CHECK_THROWS_AS(load_rgb_png(dir.path / "garbage.png"), IoError);
    CHECK_THROWS_AS(load_rgb_png(dir.path / "missing.png"), IoError);
}

TEST_CASE("stain model file round trip") {
    TempDir dir("nuc_io_model");
    Rng rng(3, 802);
    testsup::SynthTile tile = testsup::make_synth_tile(rng, 48, 48);
    StainModel model = estimate_stain_model(tile.image, MacenkoParams{});
    save_stain_model(model, dir.path / "model.txt");
    StainModel back = load_stain_model(dir.path / "model.txt");
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 2; ++c)
            CHECK(back.stain_matrix[r][c] == model.stain_matrix[r][c]);
    CHECK(back.max_concentrations == model.max_concentrations);
}

TEST_CASE("atomic text write leaves no temp file") {
    TempDir dir("nuc_io_atomic");
    atomic_write_text(dir.path / "x.txt", "payload\n");
    CHECK(read_text_file(dir.path / "x.txt") == "payload\n");
    CHECK_FALSE(fs::exists(dir.path / "x.txt.tmp"));
}
