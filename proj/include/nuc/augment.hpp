#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nuc/image.hpp"
#include "nuc/stain.hpp"

namespace nuc {

/// One concrete augmentation. Geometry applies to all three layers;
/// stain normalization touches only the image. Order of application:
/// flips, rotation, resize, stain normalization.
struct AugmentSpec {
    bool flip_h = false;
    bool flip_v = false;
    int rot90_quarter_turns = 0;  // 0..3, counter-clockwise
    int target_size = 0;          // square side; 0 = keep size
    bool stain_normalize = false;

    void validate() const;

    /// Filename tag, e.g. "f0r1s512" or "fhvr2s0_sn".
    std::string suffix() const;
};

/// Per-op probabilities for drawing specs. Sizes are sampled uniformly
/// when p_resize fires.
struct AugmentPolicy {
    double p_flip_h = 0.5;
    double p_flip_v = 0.5;
    double p_rotate = 0.75;  // quarter turns uniform in {1,2,3} when it fires
    double p_resize = 0.0;
    std::vector<int> resize_targets = {256, 512, 800, 1024, 1152};
    double p_stain = 0.0;
};

struct AugmentResult {
    Sample sample;
    bool stain_skipped = false;  // insufficient tissue; sample left un-normalized
};

/// Draws a spec deterministically from the seed; the same seed always
/// yields the same spec.
AugmentSpec sample_spec(std::uint64_t rng_seed, const AugmentPolicy& policy);

AugmentResult apply(const Sample& sample, const AugmentSpec& spec,
                    const std::optional<StainModel>& reference,
                    const MacenkoParams& stain_params = {});

// Exact geometric primitives shared with the ensemble path.
template <class T>
void flip_horizontal_inplace(int width, int height, std::vector<T>& v, int channels);
template <class T>
void flip_vertical_inplace(int width, int height, std::vector<T>& v, int channels);
/// Rotates by k quarter turns counter-clockwise; width/height swap when k is odd.
template <class T>
std::vector<T> rotate90(int width, int height, const std::vector<T>& v, int channels, int turns);

RgbImage flip_h(const RgbImage& img);
RgbImage flip_v(const RgbImage& img);
RgbImage rot90(const RgbImage& img, int turns);
InstanceMap flip_h(const InstanceMap& m);
InstanceMap flip_v(const InstanceMap& m);
InstanceMap rot90(const InstanceMap& m, int turns);
ClassMap flip_h(const ClassMap& m);
ClassMap flip_v(const ClassMap& m);
ClassMap rot90(const ClassMap& m, int turns);

}  // namespace nuc
