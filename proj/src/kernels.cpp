#include "nuc/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "nuc/errors.hpp"
#include "nuc/parallel.hpp"

namespace nuc::kernels {

namespace {

inline void od_pixel(const std::uint8_t* px, double io, double* od) {
    for (int c = 0; c < 3; ++c) {
        // max(I,1) keeps the log finite at intensity 0.
        double i = std::max<double>(px[c], 1.0);
        od[c] = -std::log10(i / io);
    }
}

inline void rgb_pixel(const double* od, double io, std::uint8_t* px) {
    for (int c = 0; c < 3; ++c) {
        double i = io * std::pow(10.0, -od[c]);
        px[c] = static_cast<std::uint8_t>(std::lround(std::clamp(i, 0.0, 255.0)));
    }
}

struct Pass1 {
    std::int64_t n = 0;
    double s0 = 0, s1 = 0, s2 = 0;
};

struct Pass2 {
    double q00 = 0, q01 = 0, q02 = 0, q11 = 0, q12 = 0, q22 = 0;
};

Pass1 block_sums(const OdImage& od, const std::vector<std::uint8_t>& keep, std::size_t b) {
    Pass1 p;
    std::size_t lo = b * kReduceBlock;
    std::size_t hi = std::min(lo + kReduceBlock, od.pixel_count());
    for (std::size_t i = lo; i < hi; ++i) {
        if (!keep[i]) continue;
        const double* v = od.at(i);
        p.n += 1;
        p.s0 += v[0];
        p.s1 += v[1];
        p.s2 += v[2];
    }
    return p;
}

Pass2 block_moments(const OdImage& od, const std::vector<std::uint8_t>& keep, const Vec3& mu,
                    std::size_t b) {
    Pass2 p;
    std::size_t lo = b * kReduceBlock;
    std::size_t hi = std::min(lo + kReduceBlock, od.pixel_count());
    for (std::size_t i = lo; i < hi; ++i) {
        if (!keep[i]) continue;
        const double* v = od.at(i);
        double d0 = v[0] - mu[0], d1 = v[1] - mu[1], d2 = v[2] - mu[2];
        p.q00 += d0 * d0;
        p.q01 += d0 * d1;
        p.q02 += d0 * d2;
        p.q11 += d1 * d1;
        p.q12 += d1 * d2;
        p.q22 += d2 * d2;
    }
    return p;
}

OdStats combine_stats(const std::vector<Pass1>& p1, const std::vector<Pass2>* p2_opt) {
    OdStats st;
    double s0 = 0, s1 = 0, s2 = 0;
    for (const auto& p : p1) {
        st.count += p.n;
        s0 += p.s0;
        s1 += p.s1;
        s2 += p.s2;
    }
    if (st.count == 0) throw UndefinedInputError("no pixels selected for OD statistics");
    st.mean = {s0 / st.count, s1 / st.count, s2 / st.count};
    if (p2_opt) {
        Pass2 q;
        for (const auto& p : *p2_opt) {
            q.q00 += p.q00;
            q.q01 += p.q01;
            q.q02 += p.q02;
            q.q11 += p.q11;
            q.q12 += p.q12;
            q.q22 += p.q22;
        }
        double denom = st.count > 1 ? static_cast<double>(st.count - 1) : 1.0;
        st.cov = {{{q.q00 / denom, q.q01 / denom, q.q02 / denom},
                   {q.q01 / denom, q.q11 / denom, q.q12 / denom},
                   {q.q02 / denom, q.q12 / denom, q.q22 / denom}}};
    }
    return st;
}

struct Normal2x2 {
    // Precomputed pieces of (S^T S)^-1 S^T for per-pixel least squares.
    double inv00, inv01, inv11;
    StainMatrix s;
};

Normal2x2 make_normal(const StainMatrix& s) {
    double a = 0, b = 0, d = 0;  // S^T S = [a b; b d]
    for (int r = 0; r < 3; ++r) {
        a += s[r][0] * s[r][0];
        b += s[r][0] * s[r][1];
        d += s[r][1] * s[r][1];
    }
    double det = a * d - b * b;
    if (std::abs(det) < 1e-14) throw DegenerateStainError("stain matrix columns nearly collinear");
    return Normal2x2{d / det, -b / det, a / det, s};
}

inline void conc_pixel(const Normal2x2& n, const double* od, double* c) {
    double st0 = n.s[0][0] * od[0] + n.s[1][0] * od[1] + n.s[2][0] * od[2];
    double st1 = n.s[0][1] * od[0] + n.s[1][1] * od[1] + n.s[2][1] * od[2];
    c[0] = std::max(0.0, n.inv00 * st0 + n.inv01 * st1);
    c[1] = std::max(0.0, n.inv01 * st0 + n.inv11 * st1);
}

inline void reconstruct_pixel(const StainMatrix& s, double io, const double* c, std::uint8_t* px) {
    for (int r = 0; r < 3; ++r) {
        double od = s[r][0] * c[0] + s[r][1] * c[1];
        double i = io * std::pow(10.0, -od);
        px[r] = static_cast<std::uint8_t>(std::lround(std::clamp(i, 0.0, 255.0)));
    }
}

inline int nearest_src(int dst, double scale, int src_size) {
    int s = static_cast<int>((dst + 0.5) * scale);
    return std::clamp(s, 0, src_size - 1);
}

template <class Map>
Map resize_nearest_impl(const Map& m, int out_w, int out_h, bool use_omp) {
    if (out_w <= 0 || out_h <= 0) throw DimensionError("resize target must be positive");
    Map out;
    out.width = out_w;
    out.height = out_h;
    out.labels.resize(static_cast<std::size_t>(out_w) * out_h);
    double sx = static_cast<double>(m.width) / out_w;
    double sy = static_cast<double>(m.height) / out_h;
#pragma omp parallel for schedule(static) if (use_omp)
    for (int y = 0; y < out_h; ++y) {
        int src_y = nearest_src(y, sy, m.height);
        for (int x = 0; x < out_w; ++x) {
            int src_x = nearest_src(x, sx, m.width);
            out.labels[static_cast<std::size_t>(y) * out_w + x] =
                m.labels[static_cast<std::size_t>(src_y) * m.width + src_x];
        }
    }
    return out;
}

RgbImage resize_bilinear_impl(const RgbImage& img, int out_w, int out_h, bool use_omp) {
    if (out_w <= 0 || out_h <= 0) throw DimensionError("resize target must be positive");
    RgbImage out = make_rgb(out_w, out_h);
    double sx = static_cast<double>(img.width) / out_w;
    double sy = static_cast<double>(img.height) / out_h;
#pragma omp parallel for schedule(static) if (use_omp)
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, img.height - 1);
        int y1 = std::min(y0 + 1, img.height - 1);
        double wy = std::clamp(fy - y0, 0.0, 1.0);
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, img.width - 1);
            int x1 = std::min(x0 + 1, img.width - 1);
            double wx = std::clamp(fx - x0, 0.0, 1.0);
            const std::uint8_t* p00 = img.at(x0, y0);
            const std::uint8_t* p10 = img.at(x1, y0);
            const std::uint8_t* p01 = img.at(x0, y1);
            const std::uint8_t* p11 = img.at(x1, y1);
            std::uint8_t* dst = out.at(x, y);
            for (int c = 0; c < 3; ++c) {
                double top = p00[c] + (p10[c] - p00[c]) * wx;
                double bot = p01[c] + (p11[c] - p01[c]) * wx;
                dst[c] = static_cast<std::uint8_t>(std::lround(top + (bot - top) * wy));
            }
        }
    }
    return out;
}

void check_io(double io) {
    if (io <= 0) throw ValueRangeError("transmitted-light intensity io must be positive");
}

}  // namespace

OdImage od_from_rgb(const RgbImage& img, double io) {
    check_io(io);
    OdImage od{img.width, img.height,
               std::vector<double>(static_cast<std::size_t>(img.width) * img.height * 3)};
    std::int64_t n = static_cast<std::int64_t>(od.pixel_count());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) od_pixel(img.pixels.data() + 3 * i, io, od.at(i));
    return od;
}

RgbImage rgb_from_od(const OdImage& od, double io) {
    check_io(io);
    RgbImage img = make_rgb(od.width, od.height);
    std::int64_t n = static_cast<std::int64_t>(od.pixel_count());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) rgb_pixel(od.at(i), io, img.pixels.data() + 3 * i);
    return img;
}

std::vector<std::uint8_t> tissue_mask(const OdImage& od, double beta) {
    std::vector<std::uint8_t> keep(od.pixel_count());
    std::int64_t n = static_cast<std::int64_t>(od.pixel_count());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const double* v = od.at(i);
        keep[i] = (v[0] >= beta && v[1] >= beta && v[2] >= beta) ? 1 : 0;
    }
    return keep;
}

OdStats od_masked_stats(const OdImage& od, const std::vector<std::uint8_t>& keep) {
    std::int64_t blocks = static_cast<std::int64_t>(reduce_block_count(od.pixel_count()));
    std::vector<Pass1> p1(blocks);
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) p1[b] = block_sums(od, keep, b);
    OdStats first = combine_stats(p1, nullptr);

    std::vector<Pass2> p2(blocks);
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) p2[b] = block_moments(od, keep, first.mean, b);
    return combine_stats(p1, &p2);
}

double masked_projection_sum(const OdImage& od, const std::vector<std::uint8_t>& keep,
                             const Vec3& dir) {
    std::int64_t blocks = static_cast<std::int64_t>(reduce_block_count(od.pixel_count()));
    std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) {
        std::size_t lo = static_cast<std::size_t>(b) * kReduceBlock;
        std::size_t hi = std::min(lo + kReduceBlock, od.pixel_count());
        double s = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            if (!keep[i]) continue;
            const double* v = od.at(i);
            s += v[0] * dir[0] + v[1] * dir[1] + v[2] * dir[2];
        }
        partial[b] = s;
    }
    double total = 0;
    for (double s : partial) total += s;
    return total;
}

ConcentrationMap concentrations_from_od(const OdImage& od, const StainMatrix& stains) {
    Normal2x2 nrm = make_normal(stains);
    ConcentrationMap conc{od.width, od.height, std::vector<double>(od.pixel_count() * 2)};
    std::int64_t n = static_cast<std::int64_t>(od.pixel_count());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) conc_pixel(nrm, od.at(i), conc.at(i));
    return conc;
}

RgbImage rgb_from_concentrations(const ConcentrationMap& conc, const StainMatrix& stains,
                                 double io) {
    check_io(io);
    RgbImage img = make_rgb(conc.width, conc.height);
    std::int64_t n = static_cast<std::int64_t>(conc.pixel_count());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i)
        reconstruct_pixel(stains, io, conc.at(i), img.pixels.data() + 3 * i);
    return img;
}

InstanceMap resize_nearest(const InstanceMap& m, int out_w, int out_h) {
    return resize_nearest_impl(m, out_w, out_h, true);
}

ClassMap resize_nearest(const ClassMap& m, int out_w, int out_h) {
    return resize_nearest_impl(m, out_w, out_h, true);
}

RgbImage resize_bilinear(const RgbImage& img, int out_w, int out_h) {
    return resize_bilinear_impl(img, out_w, out_h, true);
}

namespace serial {

OdImage od_from_rgb(const RgbImage& img, double io) {
    check_io(io);
    OdImage od{img.width, img.height,
               std::vector<double>(static_cast<std::size_t>(img.width) * img.height * 3)};
    for (std::size_t i = 0; i < od.pixel_count(); ++i)
        od_pixel(img.pixels.data() + 3 * i, io, od.at(i));
    return od;
}

RgbImage rgb_from_od(const OdImage& od, double io) {
    check_io(io);
    RgbImage img = make_rgb(od.width, od.height);
    for (std::size_t i = 0; i < od.pixel_count(); ++i)
        rgb_pixel(od.at(i), io, img.pixels.data() + 3 * i);
    return img;
}

std::vector<std::uint8_t> tissue_mask(const OdImage& od, double beta) {
    std::vector<std::uint8_t> keep(od.pixel_count());
    for (std::size_t i = 0; i < od.pixel_count(); ++i) {
        const double* v = od.at(i);
        keep[i] = (v[0] >= beta && v[1] >= beta && v[2] >= beta) ? 1 : 0;
    }
    return keep;
}

OdStats od_masked_stats(const OdImage& od, const std::vector<std::uint8_t>& keep) {
    std::size_t blocks = reduce_block_count(od.pixel_count());
    std::vector<Pass1> p1(blocks);
    for (std::size_t b = 0; b < blocks; ++b) p1[b] = block_sums(od, keep, b);
    OdStats first = combine_stats(p1, nullptr);
    std::vector<Pass2> p2(blocks);
    for (std::size_t b = 0; b < blocks; ++b) p2[b] = block_moments(od, keep, first.mean, b);
    return combine_stats(p1, &p2);
}

double masked_projection_sum(const OdImage& od, const std::vector<std::uint8_t>& keep,
                             const Vec3& dir) {
    std::size_t blocks = reduce_block_count(od.pixel_count());
    double total = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
        std::size_t lo = b * kReduceBlock;
        std::size_t hi = std::min(lo + kReduceBlock, od.pixel_count());
        double s = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            if (!keep[i]) continue;
            const double* v = od.at(i);
            s += v[0] * dir[0] + v[1] * dir[1] + v[2] * dir[2];
        }
        total += s;
    }
    return total;
}

ConcentrationMap concentrations_from_od(const OdImage& od, const StainMatrix& stains) {
    Normal2x2 nrm = make_normal(stains);
    ConcentrationMap conc{od.width, od.height, std::vector<double>(od.pixel_count() * 2)};
    for (std::size_t i = 0; i < od.pixel_count(); ++i) conc_pixel(nrm, od.at(i), conc.at(i));
    return conc;
}

RgbImage rgb_from_concentrations(const ConcentrationMap& conc, const StainMatrix& stains,
                                 double io) {
    check_io(io);
    RgbImage img = make_rgb(conc.width, conc.height);
    for (std::size_t i = 0; i < conc.pixel_count(); ++i)
        reconstruct_pixel(stains, io, conc.at(i), img.pixels.data() + 3 * i);
    return img;
}

InstanceMap resize_nearest(const InstanceMap& m, int out_w, int out_h) {
    return resize_nearest_impl(m, out_w, out_h, false);
}

ClassMap resize_nearest(const ClassMap& m, int out_w, int out_h) {
    return resize_nearest_impl(m, out_w, out_h, false);
}

RgbImage resize_bilinear(const RgbImage& img, int out_w, int out_h) {
    return resize_bilinear_impl(img, out_w, out_h, false);
}

}  // namespace serial
}  // namespace nuc::kernels
