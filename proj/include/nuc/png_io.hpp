#pragma once

#include <filesystem>
#include <string>

#include "nuc/image.hpp"

namespace nuc {

// File conventions: RGB tiles are 8-bit RGB PNG, class maps 8-bit grayscale
// PNG with values 0..6, instance maps 16-bit grayscale PNG with ids
// 0..65535. Values outside those ranges fail at load/save time.

RgbImage load_rgb_png(const std::filesystem::path& path);
ClassMap load_class_png(const std::filesystem::path& path);
InstanceMap load_instance_png(const std::filesystem::path& path);

// All writers go through a temp file + rename, so a failed run never
// leaves a partial output at the destination.
void save_rgb_png(const RgbImage& img, const std::filesystem::path& path);
void save_class_png(const ClassMap& m, const std::filesystem::path& path);
void save_instance_png(const InstanceMap& m, const std::filesystem::path& path);

void atomic_write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace nuc
