#pragma once

#include <array>

namespace nuc {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

struct SymEig3 {
    Vec3 values;                  // descending
    std::array<Vec3, 3> vectors;  // vectors[i] pairs with values[i], unit norm
};

/// Eigen decomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
SymEig3 eig_sym3(const Mat3& a);

double dot3(const Vec3& a, const Vec3& b);
double norm3(const Vec3& a);
Vec3 normalized3(const Vec3& a);

}  // namespace nuc
