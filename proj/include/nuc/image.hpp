#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "nuc/errors.hpp"

namespace nuc {

inline constexpr int kNumClasses = 6;

// Class vocabulary used across the toolkit and in all class-map files:
//   0 = background
//   1 = epithelial     2 = lymphocyte   3 = plasma
//   4 = eosinophil     5 = neutrophil   6 = connective tissue
inline constexpr const char* kClassNames[kNumClasses + 1] = {
    "background", "epithelial", "lymphocyte", "plasma",
    "eosinophil", "neutrophil", "connective",
};

/// 8-bit RGB image, row-major, interleaved channels.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // 3 * width * height

    std::uint8_t* at(int x, int y) { return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
    const std::uint8_t* at(int x, int y) const {
        return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
};

/// Per-pixel instance ids; 0 is background. Ids need not be contiguous.
struct InstanceMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> labels;

    std::uint32_t& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::uint32_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

/// Per-pixel class ids in 0..6 (0 = background).
struct ClassMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> labels;

    std::uint8_t& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

/// Binary foreground mask (nonzero = foreground).
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> values;
};

/// Per-class nucleus counts; index 0 holds class 1.
struct Composition {
    std::array<std::int64_t, kNumClasses> counts{};

    std::int64_t total() const {
        std::int64_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }
    std::int64_t& operator[](int i) { return counts[i]; }
    std::int64_t operator[](int i) const { return counts[i]; }
    bool operator==(const Composition&) const = default;
};

/// One nucleus: id, size, bounding box and assigned class.
struct InstanceRecord {
    std::uint32_t id = 0;
    std::int64_t pixel_count = 0;
    int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
    int cls = 0;  // 1..6
};

/// An H&E tile with its two label layers; all three share dimensions.
struct Sample {
    RgbImage image;
    InstanceMap instances;
    ClassMap classes;
};

inline RgbImage make_rgb(int width, int height, std::uint8_t fill = 0) {
    if (width <= 0 || height <= 0) throw DimensionError("image dimensions must be positive");
    return RgbImage{width, height,
                    std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * 3, fill)};
}

inline InstanceMap make_instance_map(int width, int height) {
    if (width <= 0 || height <= 0) throw DimensionError("instance map dimensions must be positive");
    return InstanceMap{width, height, std::vector<std::uint32_t>(static_cast<std::size_t>(width) * height, 0)};
}

inline ClassMap make_class_map(int width, int height) {
    if (width <= 0 || height <= 0) throw DimensionError("class map dimensions must be positive");
    return ClassMap{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 0)};
}

template <class A, class B>
void require_same_dims(const A& a, const B& b, const char* what) {
    if (a.width != b.width || a.height != b.height)
        throw DimensionError(std::string("dimension mismatch: ") + what);
}

inline void validate_class_map(const ClassMap& m) {
    for (auto v : m.labels)
        if (v > kNumClasses) throw ValueRangeError("class label exceeds 6");
}

/// Checks the Sample contract: shared dims, classes in range, class
/// nonzero wherever an instance id is present.
inline void validate_sample(const Sample& s) {
    require_same_dims(s.image, s.instances, "image vs instance map");
    require_same_dims(s.image, s.classes, "image vs class map");
    validate_class_map(s.classes);
    for (std::size_t i = 0; i < s.instances.labels.size(); ++i)
        if (s.instances.labels[i] != 0 && s.classes.labels[i] == 0)
            throw ValueRangeError("instance pixel has background class");
}

}  // namespace nuc
