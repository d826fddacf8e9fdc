#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>

#include "icorr/common.hpp"

namespace icorr {

using Matrix3X = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using FaceMatrix = Eigen::Matrix<int, Eigen::Dynamic, 3>;

struct TriangleMesh {
  Matrix3X vertices;  // n x 3
  FaceMatrix faces;   // m x 3, indices into vertices

  bool empty() const { return faces.rows() == 0 || vertices.rows() == 0; }
  // Throws DataError if indices are out of range, coordinates non-finite,
  // or the mesh has no faces.
  void validate() const;

  Eigen::Vector3d bbox_min() const;
  Eigen::Vector3d bbox_max() const;
  double bbox_diagonal() const;
  double total_area() const;
};

struct PointSet {
  Matrix3X points;
  Matrix3X normals;  // empty or same row count as points, unit length

  bool has_normals() const {
    return normals.rows() == points.rows() && points.rows() > 0;
  }
};

// OBJ or PLY (ascii), chosen by file extension.
TriangleMesh load_mesh(const std::filesystem::path& path);
void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path);

// Centers the mesh at its bounding-box center and scales uniformly so the
// tight bounding-box diagonal has length exactly 1.
TriangleMesh normalize_shape(const TriangleMesh& mesh);

// The affine record (center, scale) of normalize_shape, for carrying
// auxiliary point data through the same transform.
struct NormalizationRecord {
  Eigen::Vector3d center;
  double scale;  // multiply centered coordinates by this
};
NormalizationRecord normalization_record(const TriangleMesh& mesh);

// n points drawn area-uniformly over the triangle surface, with face
// normals attached. Deterministic for a given seed.
PointSet sample_surface_points(const TriangleMesh& mesh, int n, uint64_t seed);

}  // namespace icorr
