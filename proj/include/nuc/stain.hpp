#pragma once

#include <filesystem>

#include "nuc/kernels.hpp"

namespace nuc {

struct MacenkoParams {
    double io = 255.0;              // transmitted-light intensity
    double beta = 0.15;             // OD floor; pixels below it in any channel are not tissue
    double alpha = 1.0;             // robust angle percentile, percent
    double max_c_percentile = 99.0; // concentration percentile used as the scale
    int min_tissue_pixels = 100;

    void validate() const;
};

/// Estimated stain basis: unit OD-space vectors for H and E plus the
/// robust concentration maxima used for scaling.
struct StainModel {
    StainMatrix stain_matrix{};                 // rows RGB, column 0 = H, column 1 = E
    std::array<double, 2> max_concentrations{};

    Vec3 column(int c) const {
        return {stain_matrix[0][c], stain_matrix[1][c], stain_matrix[2][c]};
    }
};

/// OD = -log10(max(I,1)/io), per channel.
OdImage rgb_to_od(const RgbImage& img, double io);

/// I = io * 10^-OD, clamped to [0,255] and rounded.
RgbImage od_to_rgb(const OdImage& od, double io);

/// Macenko estimation: OD floor -> covariance plane -> robust angle
/// extremes -> unit stain vectors (H = larger red OD) -> percentile
/// concentration maxima over tissue pixels.
/// Throws InsufficientTissueError / DegenerateStainError.
StainModel estimate_stain_model(const RgbImage& img, const MacenkoParams& p);

/// Per-pixel least-squares concentrations against the model's stain
/// matrix, clamped at zero. Covers every pixel (no tissue mask).
ConcentrationMap compute_concentrations(const RgbImage& img, const StainModel& model,
                                        const MacenkoParams& p);

/// Re-expresses img in the reference stain basis: concentrations are
/// rescaled per stain by reference max / source max and recombined.
RgbImage normalize_to_reference(const RgbImage& img, const MacenkoParams& p,
                                const StainModel& reference);

/// Plain-text serialization; numbers round-trip to better than 1e-9.
std::string stain_model_to_text(const StainModel& model);
StainModel stain_model_from_text(const std::string& text);
void save_stain_model(const StainModel& model, const std::filesystem::path& path);
StainModel load_stain_model(const std::filesystem::path& path);

/// Angle between two stain vectors, degrees.
double stain_angle_deg(const Vec3& a, const Vec3& b);

}  // namespace nuc
