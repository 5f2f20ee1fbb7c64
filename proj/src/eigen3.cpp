#include "nuc/eigen3.hpp"

#include <algorithm>
#include <cmath>

namespace nuc {

double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double norm3(const Vec3& a) { return std::sqrt(dot3(a, a)); }

Vec3 normalized3(const Vec3& a) {
    double n = norm3(a);
    if (n == 0) return a;
    return {a[0] / n, a[1] / n, a[2] / n};
}

SymEig3 eig_sym3(const Mat3& input) {
    Mat3 a = input;
    Mat3 v = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        if (off < 1e-30) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (a[p][q] == 0) continue;
                double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;

                double app = a[p][p], aqq = a[q][q], apq = a[p][q];
                a[p][p] = app - t * apq;
                a[q][q] = aqq + t * apq;
                a[p][q] = a[q][p] = 0;
                for (int k = 0; k < 3; ++k) {
                    if (k == p || k == q) continue;
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = a[p][k] = c * akp - s * akq;
                    a[k][q] = a[q][k] = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return a[i][i] > a[j][j]; });

    SymEig3 out;
    for (int i = 0; i < 3; ++i) {
        int src = order[i];
        out.values[i] = a[src][src];
        out.vectors[i] = normalized3({v[0][src], v[1][src], v[2][src]});
    }
    return out;
}

}  // namespace nuc
