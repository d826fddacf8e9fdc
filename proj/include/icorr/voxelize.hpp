#pragma once

#include <Eigen/Dense>
#include <vector>

#include "icorr/geometry.hpp"

namespace icorr {

// Regular occupancy grid over the normalized domain [-0.5, 0.5]^3.
struct VoxelGrid {
  int resolution = 0;  // one of 16, 32, 64
  std::vector<uint8_t> occupancy;  // r^3 values in {0,1}, x-major: ((i*r)+j)*r+k

  size_t index(int i, int j, int k) const {
    return (static_cast<size_t>(i) * resolution + j) * resolution + k;
  }
  uint8_t at(int i, int j, int k) const { return occupancy[index(i, j, k)]; }
  double cell_size() const { return 1.0 / resolution; }
  Eigen::Vector3d cell_center(int i, int j, int k) const {
    double h = cell_size();
    return {-0.5 + (i + 0.5) * h, -0.5 + (j + 0.5) * h, -0.5 + (k + 0.5) * h};
  }
  // Cell containing a point in [-0.5, 0.5]^3; clamped at the boundary.
  void locate(const Eigen::Vector3d& p, int& i, int& j, int& k) const;
  size_t occupied_count() const;
  void validate() const;
};

// Point-occupancy training pairs drawn from a grid.
struct SampledOccupancy {
  Matrix3X points;        // K x 3
  Eigen::VectorXd labels;  // K, values in {0,1}
  int resolution = 0;
};

// K for each supported resolution (4096 / 8192 / 32768).
int sample_count_for_resolution(int resolution);

// Cell center marked occupied iff inside the watertight solid, by parity
// ray casting along +x with jittered tie-breaking. Interior pockets not
// reachable from the grid boundary through empty cells are filled.
VoxelGrid voxelize(const TriangleMesh& mesh, int resolution);

// r=16: all cell centers with their labels. r=32/64: K points, half drawn
// from cells within one cell of an occupancy sign change and half uniform,
// each placed uniformly inside its cell and labeled by that cell.
SampledOccupancy sample_point_value_pairs(const VoxelGrid& grid, uint64_t seed);

}  // namespace icorr
