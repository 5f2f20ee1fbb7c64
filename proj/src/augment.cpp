#include "nuc/augment.hpp"

#include <algorithm>

#include "nuc/errors.hpp"
#include "nuc/kernels.hpp"
#include "nuc/rng.hpp"

namespace nuc {

void AugmentSpec::validate() const {
    if (rot90_quarter_turns < 0 || rot90_quarter_turns > 3)
        throw ConfigError("quarter turns must be in 0..3");
    if (target_size < 0) throw ConfigError("target size must be >= 0");
}

std::string AugmentSpec::suffix() const {
    std::string flips;
    if (flip_h) flips += 'h';
    if (flip_v) flips += 'v';
    if (flips.empty()) flips = "0";
    std::string s = "f" + flips + "r" + std::to_string(rot90_quarter_turns) + "s" +
                    std::to_string(target_size);
    if (stain_normalize) s += "_sn";
    return s;
}

template <class T>
void flip_horizontal_inplace(int width, int height, std::vector<T>& v, int channels) {
    for (int y = 0; y < height; ++y) {
        T* row = v.data() + static_cast<std::size_t>(y) * width * channels;
        for (int x = 0; x < width / 2; ++x) {
            T* a = row + static_cast<std::size_t>(x) * channels;
            T* b = row + static_cast<std::size_t>(width - 1 - x) * channels;
            for (int c = 0; c < channels; ++c) std::swap(a[c], b[c]);
        }
    }
}

template <class T>
void flip_vertical_inplace(int width, int height, std::vector<T>& v, int channels) {
    std::size_t row_len = static_cast<std::size_t>(width) * channels;
    for (int y = 0; y < height / 2; ++y) {
        T* a = v.data() + row_len * y;
        T* b = v.data() + row_len * (height - 1 - y);
        std::swap_ranges(a, a + row_len, b);
    }
}

template <class T>
std::vector<T> rotate90(int width, int height, const std::vector<T>& v, int channels, int turns) {
    turns = ((turns % 4) + 4) % 4;
    if (turns == 0) return v;
    std::vector<T> out(v.size());
    int ow = (turns % 2 == 0) ? width : height;
    int oh = (turns % 2 == 0) ? height : width;
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            int sx, sy;
            switch (turns) {
                case 1:  // counter-clockwise
                    sx = width - 1 - y;
                    sy = x;
                    break;
                case 2:
                    sx = width - 1 - x;
                    sy = height - 1 - y;
                    break;
                default:  // 3
                    sx = y;
                    sy = height - 1 - x;
                    break;
            }
            const T* src = v.data() + (static_cast<std::size_t>(sy) * width + sx) * channels;
            T* dst = out.data() + (static_cast<std::size_t>(y) * ow + x) * channels;
            for (int c = 0; c < channels; ++c) dst[c] = src[c];
        }
    }
    return out;
}

template void flip_horizontal_inplace<std::uint8_t>(int, int, std::vector<std::uint8_t>&, int);
template void flip_horizontal_inplace<std::uint32_t>(int, int, std::vector<std::uint32_t>&, int);
template void flip_vertical_inplace<std::uint8_t>(int, int, std::vector<std::uint8_t>&, int);
template void flip_vertical_inplace<std::uint32_t>(int, int, std::vector<std::uint32_t>&, int);
template std::vector<std::uint8_t> rotate90<std::uint8_t>(int, int, const std::vector<std::uint8_t>&, int, int);
template std::vector<std::uint32_t> rotate90<std::uint32_t>(int, int, const std::vector<std::uint32_t>&, int, int);

RgbImage flip_h(const RgbImage& img) {
    RgbImage out = img;
    flip_horizontal_inplace(out.width, out.height, out.pixels, 3);
    return out;
}
RgbImage flip_v(const RgbImage& img) {
    RgbImage out = img;
    flip_vertical_inplace(out.width, out.height, out.pixels, 3);
    return out;
}
RgbImage rot90(const RgbImage& img, int turns) {
    RgbImage out;
    out.pixels = rotate90(img.width, img.height, img.pixels, 3, turns);
    out.width = (turns % 2 == 0) ? img.width : img.height;
    out.height = (turns % 2 == 0) ? img.height : img.width;
    return out;
}
InstanceMap flip_h(const InstanceMap& m) {
    InstanceMap out = m;
    flip_horizontal_inplace(out.width, out.height, out.labels, 1);
    return out;
}
InstanceMap flip_v(const InstanceMap& m) {
    InstanceMap out = m;
    flip_vertical_inplace(out.width, out.height, out.labels, 1);
    return out;
}
InstanceMap rot90(const InstanceMap& m, int turns) {
    InstanceMap out;
    out.labels = rotate90(m.width, m.height, m.labels, 1, turns);
    out.width = (turns % 2 == 0) ? m.width : m.height;
    out.height = (turns % 2 == 0) ? m.height : m.width;
    return out;
}
ClassMap flip_h(const ClassMap& m) {
    ClassMap out = m;
    flip_horizontal_inplace(out.width, out.height, out.labels, 1);
    return out;
}
ClassMap flip_v(const ClassMap& m) {
    ClassMap out = m;
    flip_vertical_inplace(out.width, out.height, out.labels, 1);
    return out;
}
ClassMap rot90(const ClassMap& m, int turns) {
    ClassMap out;
    out.labels = rotate90(m.width, m.height, m.labels, 1, turns);
    out.width = (turns % 2 == 0) ? m.width : m.height;
    out.height = (turns % 2 == 0) ? m.height : m.width;
    return out;
}

AugmentSpec sample_spec(std::uint64_t rng_seed, const AugmentPolicy& policy) {
    Rng rng(rng_seed);
    AugmentSpec spec;
    // Draw order is part of the determinism contract; do not reorder.
    spec.flip_h = rng.next_double() < policy.p_flip_h;
    spec.flip_v = rng.next_double() < policy.p_flip_v;
    if (rng.next_double() < policy.p_rotate)
        spec.rot90_quarter_turns = 1 + static_cast<int>(rng.next_below(3));
    if (!policy.resize_targets.empty() && rng.next_double() < policy.p_resize)
        spec.target_size =
            policy.resize_targets[rng.next_below(policy.resize_targets.size())];
    spec.stain_normalize = rng.next_double() < policy.p_stain;
    return spec;
}

AugmentResult apply(const Sample& sample, const AugmentSpec& spec,
                    const std::optional<StainModel>& reference,
                    const MacenkoParams& stain_params) {
    spec.validate();
    require_same_dims(sample.image, sample.instances, "image vs instance map");
    require_same_dims(sample.image, sample.classes, "image vs class map");
    if (spec.stain_normalize && !reference)
        throw ConfigError("stain_normalize requires a reference stain model");

    AugmentResult result;
    result.sample = sample;
    Sample& s = result.sample;

    if (spec.flip_h) {
        s.image = flip_h(s.image);
        s.instances = flip_h(s.instances);
        s.classes = flip_h(s.classes);
    }
    if (spec.flip_v) {
        s.image = flip_v(s.image);
        s.instances = flip_v(s.instances);
        s.classes = flip_v(s.classes);
    }
    if (spec.rot90_quarter_turns != 0) {
        s.image = rot90(s.image, spec.rot90_quarter_turns);
        s.instances = rot90(s.instances, spec.rot90_quarter_turns);
        s.classes = rot90(s.classes, spec.rot90_quarter_turns);
    }
    if (spec.target_size != 0 &&
        (spec.target_size != s.image.width || spec.target_size != s.image.height)) {
        s.image = kernels::resize_bilinear(s.image, spec.target_size, spec.target_size);
        s.instances = kernels::resize_nearest(s.instances, spec.target_size, spec.target_size);
        s.classes = kernels::resize_nearest(s.classes, spec.target_size, spec.target_size);
    }
    if (spec.stain_normalize) {
        try {
            s.image = normalize_to_reference(s.image, stain_params, *reference);
        } catch (const InsufficientTissueError&) {
            result.stain_skipped = true;
        }
    }
    return result;
}

}  // namespace nuc
