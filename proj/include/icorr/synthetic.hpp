#pragma once

#include <string>
#include <vector>

#include "icorr/geometry.hpp"

namespace icorr {

// Procedurally generated shape with exact ground truth. Surface points are
// instantiated from a family-wide canonical sample set, so two shapes of
// the same family correspond exactly where correspondence_ids match.
struct SyntheticShape {
  TriangleMesh mesh;            // normalized (diagonal 1, centered)
  Matrix3X points;              // labeled surface points, normalized coords
  Matrix3X normals;             // per-point face normals
  Eigen::VectorXi part_labels;  // semantic part id per point
  Eigen::VectorXi correspondence_ids;  // canonical id shared across the family
  std::vector<int> present_parts;
};

// Ground-truth part structure of a family, for segmentation metrics.
struct FamilyGroundTruth {
  std::vector<int> parts;                       // base part ids
  std::vector<std::vector<int>> combinations;   // allowed part merges (incl. singletons)
};

// Built-in families: "table" (top + 4 legs) and "chair" (seat + back +
// legs + arms with probability 0.5). Unknown names raise ConfigError.
std::vector<SyntheticShape> generate_synthetic_family(const std::string& family, int count,
                                                      uint64_t seed, int points_per_shape = 2048);

FamilyGroundTruth family_ground_truth(const std::string& family);

// Part id carried by arm points in the chair family (non-existence tests).
int chair_arm_part_id();

}  // namespace icorr
