#pragma once

#include <functional>

#include "icorr/geometry.hpp"

namespace icorr {

// Scalar field sampled on a regular grid over [-0.5, 0.5]^3, values at the
// (r+1)^3 lattice corners.
using ScalarField = std::function<double(const Eigen::Vector3d&)>;

// Standard 256-case marching cubes at the given iso level, vertices placed
// by linear interpolation along crossing edges. An all-below or all-above
// field yields an empty mesh.
TriangleMesh marching_cubes(const ScalarField& field, int resolution, double iso = 0.5);

}  // namespace icorr
