#pragma once

#include <cstdint>
#include <vector>

#include "nuc/eigen3.hpp"
#include "nuc/image.hpp"

namespace nuc {

/// Per-pixel optical density, 3 doubles per pixel in RGB order.
struct OdImage {
    int width = 0;
    int height = 0;
    std::vector<double> values;  // 3 * width * height

    const double* at(std::size_t pixel) const { return values.data() + 3 * pixel; }
    double* at(std::size_t pixel) { return values.data() + 3 * pixel; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

/// Per-pixel stain concentrations (H, E), non-negative.
struct ConcentrationMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;  // 2 * width * height

    const double* at(std::size_t pixel) const { return values.data() + 2 * pixel; }
    double* at(std::size_t pixel) { return values.data() + 2 * pixel; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

/// 3x2 optical-density stain matrix; rows RGB, columns H then E.
using StainMatrix = std::array<std::array<double, 2>, 3>;

/// Masked first/second moments of an OD image.
struct OdStats {
    std::int64_t count = 0;
    Vec3 mean{};
    Mat3 cov{};  // sample covariance (n-1 denominator)
};

// Parallel kernels. Each has a serial twin in nuc::kernels::serial that the
// tests compare against bit-for-bit; reductions use fixed-size blocks so the
// parallel results do not depend on the thread count.
namespace kernels {

OdImage od_from_rgb(const RgbImage& img, double io);
RgbImage rgb_from_od(const OdImage& od, double io);

/// keep[i] nonzero selects pixel i. Throws UndefinedInputError when no
/// pixel is selected.
OdStats od_masked_stats(const OdImage& od, const std::vector<std::uint8_t>& keep);

/// Marks pixels whose OD is >= beta in every channel.
std::vector<std::uint8_t> tissue_mask(const OdImage& od, double beta);

/// Least-squares concentrations per pixel, clamped at zero.
ConcentrationMap concentrations_from_od(const OdImage& od, const StainMatrix& stains);

/// Rebuilds an RGB image from concentrations: I = io * 10^-(S*c).
RgbImage rgb_from_concentrations(const ConcentrationMap& conc, const StainMatrix& stains, double io);

/// Sum of od[i] . dir over selected pixels (deterministic blocked reduction).
double masked_projection_sum(const OdImage& od, const std::vector<std::uint8_t>& keep, const Vec3& dir);

InstanceMap resize_nearest(const InstanceMap& m, int out_w, int out_h);
ClassMap resize_nearest(const ClassMap& m, int out_w, int out_h);
RgbImage resize_bilinear(const RgbImage& img, int out_w, int out_h);

namespace serial {
OdImage od_from_rgb(const RgbImage& img, double io);
RgbImage rgb_from_od(const OdImage& od, double io);
OdStats od_masked_stats(const OdImage& od, const std::vector<std::uint8_t>& keep);
std::vector<std::uint8_t> tissue_mask(const OdImage& od, double beta);
ConcentrationMap concentrations_from_od(const OdImage& od, const StainMatrix& stains);
RgbImage rgb_from_concentrations(const ConcentrationMap& conc, const StainMatrix& stains, double io);
double masked_projection_sum(const OdImage& od, const std::vector<std::uint8_t>& keep, const Vec3& dir);
InstanceMap resize_nearest(const InstanceMap& m, int out_w, int out_h);
ClassMap resize_nearest(const ClassMap& m, int out_w, int out_h);
RgbImage resize_bilinear(const RgbImage& img, int out_w, int out_h);
}  // namespace serial

}  // namespace kernels
}  // namespace nuc
