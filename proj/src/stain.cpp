#include "nuc/stain.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "nuc/errors.hpp"
#include "nuc/png_io.hpp"
#include "nuc/stats.hpp"

namespace nuc {

void MacenkoParams::validate() const {
    if (io <= 0) throw ConfigError("io must be positive");
    if (beta <= 0) throw ConfigError("beta must be positive");
    if (alpha <= 0 || alpha >= 50) throw ConfigError("alpha must be in (0, 50)");
    if (max_c_percentile <= 50 || max_c_percentile > 100)
        throw ConfigError("max_c_percentile must be in (50, 100]");
    if (min_tissue_pixels < 1) throw ConfigError("min_tissue_pixels must be >= 1");
}

OdImage rgb_to_od(const RgbImage& img, double io) { return kernels::od_from_rgb(img, io); }

RgbImage od_to_rgb(const OdImage& od, double io) { return kernels::rgb_from_od(od, io); }

namespace {

Vec3 flip_nonnegative(Vec3 v) {
    double s = v[0] + v[1] + v[2];
    if (s < 0) v = {-v[0], -v[1], -v[2]};
    // Residual negatives are numerical spill outside the dye octant.
    for (double& x : v) x = std::max(0.0, x);
    return normalized3(v);
}

}  // namespace

StainModel estimate_stain_model(const RgbImage& img, const MacenkoParams& p) {
    p.validate();
    if (img.width <= 0 || img.height <= 0) throw DimensionError("empty image");

    OdImage od = kernels::od_from_rgb(img, p.io);
    std::vector<std::uint8_t> keep = kernels::tissue_mask(od, p.beta);

    std::int64_t surviving = 0;
    for (auto k : keep) surviving += k;
    if (surviving < p.min_tissue_pixels)
        throw InsufficientTissueError("only " + std::to_string(surviving) +
                                      " tissue pixels above the OD floor (need " +
                                      std::to_string(p.min_tissue_pixels) + ")");

    OdStats stats = kernels::od_masked_stats(od, keep);
    SymEig3 eig = eig_sym3(stats.cov);
    if (eig.values[1] <= 1e-12 * std::max(eig.values[0], 1e-300))
        throw DegenerateStainError("OD covariance has rank < 2");

    Vec3 e1 = eig.vectors[0];
    Vec3 e2 = eig.vectors[1];
    // Orient the basis toward the OD cloud so the projected angles do not
    // straddle the atan2 branch cut.
    if (kernels::masked_projection_sum(od, keep, e1) < 0) e1 = {-e1[0], -e1[1], -e1[2]};
    if (kernels::masked_projection_sum(od, keep, e2) < 0) e2 = {-e2[0], -e2[1], -e2[2]};

    std::vector<double> phi;
    phi.reserve(static_cast<std::size_t>(surviving));
    for (std::size_t i = 0; i < od.pixel_count(); ++i) {
        if (!keep[i]) continue;
        const double* v = od.at(i);
        double t1 = v[0] * e1[0] + v[1] * e1[1] + v[2] * e1[2];
        double t2 = v[0] * e2[0] + v[1] * e2[1] + v[2] * e2[2];
        phi.push_back(std::atan2(t2, t1));
    }

    double phi_lo = percentile(phi, p.alpha);
    double phi_hi = percentile(phi, 100.0 - p.alpha);

    auto direction = [&](double angle) {
        double c = std::cos(angle), s = std::sin(angle);
        return flip_nonnegative({c * e1[0] + s * e2[0], c * e1[1] + s * e2[1],
                                 c * e1[2] + s * e2[2]});
    };
    Vec3 v_lo = direction(phi_lo);
    Vec3 v_hi = direction(phi_hi);

    if (stain_angle_deg(v_lo, v_hi) <= 1.0)
        throw DegenerateStainError("estimated stain vectors are nearly collinear");

    // H is the column with the larger red-channel OD (haematoxylin absorbs red).
    Vec3 h = v_lo, e = v_hi;
    if (e[0] > h[0]) std::swap(h, e);

    StainModel model;
    for (int r = 0; r < 3; ++r) {
        model.stain_matrix[r][0] = h[r];
        model.stain_matrix[r][1] = e[r];
    }

    ConcentrationMap conc = kernels::concentrations_from_od(od, model.stain_matrix);
    std::vector<double> ch, ce;
    ch.reserve(static_cast<std::size_t>(surviving));
    ce.reserve(static_cast<std::size_t>(surviving));
    for (std::size_t i = 0; i < conc.pixel_count(); ++i) {
        if (!keep[i]) continue;
        ch.push_back(conc.at(i)[0]);
        ce.push_back(conc.at(i)[1]);
    }
    model.max_concentrations[0] = percentile(ch, p.max_c_percentile);
    model.max_concentrations[1] = percentile(ce, p.max_c_percentile);
    if (model.max_concentrations[0] <= 0 || model.max_concentrations[1] <= 0)
        throw DegenerateStainError("non-positive concentration scale");
    return model;
}

ConcentrationMap compute_concentrations(const RgbImage& img, const StainModel& model,
                                        const MacenkoParams& p) {
    p.validate();
    OdImage od = kernels::od_from_rgb(img, p.io);
    return kernels::concentrations_from_od(od, model.stain_matrix);
}

RgbImage normalize_to_reference(const RgbImage& img, const MacenkoParams& p,
                                const StainModel& reference) {
    StainModel source = estimate_stain_model(img, p);
    ConcentrationMap conc = compute_concentrations(img, source, p);
    double scale_h = reference.max_concentrations[0] / source.max_concentrations[0];
    double scale_e = reference.max_concentrations[1] / source.max_concentrations[1];
    for (std::size_t i = 0; i < conc.pixel_count(); ++i) {
        conc.at(i)[0] *= scale_h;
        conc.at(i)[1] *= scale_e;
    }
    return kernels::rgb_from_concentrations(conc, reference.stain_matrix, p.io);
}

std::string stain_model_to_text(const StainModel& model) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "stain_matrix %.17g %.17g %.17g %.17g %.17g %.17g\n"
                  "max_concentrations %.17g %.17g\n",
                  model.stain_matrix[0][0], model.stain_matrix[0][1], model.stain_matrix[1][0],
                  model.stain_matrix[1][1], model.stain_matrix[2][0], model.stain_matrix[2][1],
                  model.max_concentrations[0], model.max_concentrations[1]);
    return buf;
}

StainModel stain_model_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string key;
    StainModel model;
    bool have_matrix = false, have_max = false;
    while (in >> key) {
        if (key == "stain_matrix") {
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 2; ++c)
                    if (!(in >> model.stain_matrix[r][c]))
                        throw IoError("stain model: bad stain_matrix");
            have_matrix = true;
        } else if (key == "max_concentrations") {
            if (!(in >> model.max_concentrations[0] >> model.max_concentrations[1]))
                throw IoError("stain model: bad max_concentrations");
            have_max = true;
        } else {
            throw IoError("stain model: unknown field '" + key + "'");
        }
    }
    if (!have_matrix || !have_max) throw IoError("stain model: missing fields");
    return model;
}

void save_stain_model(const StainModel& model, const std::filesystem::path& path) {
    atomic_write_text(path, stain_model_to_text(model));
}

StainModel load_stain_model(const std::filesystem::path& path) {
    return stain_model_from_text(read_text_file(path));
}

double stain_angle_deg(const Vec3& a, const Vec3& b) {
    double c = dot3(a, b) / (norm3(a) * norm3(b));
    c = std::clamp(c, -1.0, 1.0);
    return std::acos(c) * 180.0 / 3.14159265358979323846;
}

}  // namespace nuc
