#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "icorr/geometry.hpp"
#include "icorr/synthetic.hpp"
#include "icorr/voxelize.hpp"

namespace icorr {

// One prepared shape: normalized geometry plus all derived training data.
struct ShapeRecord {
  std::string id;
  TriangleMesh mesh;
  PointSet surface;  // n area-uniform surface points with normals
  std::map<int, SampledOccupancy> samples;  // by resolution
  // Ground truth, present only for synthetic corpora.
  std::optional<Matrix3X> gt_points;
  std::optional<Matrix3X> gt_normals;
  std::optional<Eigen::VectorXi> gt_part_labels;
  std::optional<Eigen::VectorXi> gt_correspondence_ids;
  std::vector<int> present_parts;

  bool has_ground_truth() const { return gt_points.has_value(); }
};

struct Dataset {
  std::vector<ShapeRecord> shapes;
  std::string family;  // empty for mesh-directory corpora
  uint64_t seed = 0;
  int surface_points = 0;
  std::vector<int> resolutions;
};

// Directory container: manifest.json plus one binary blob per array.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// Builds all derived data (voxel grids, occupancy samples, surface points)
// for a list of normalized meshes. Ground truth fields are left empty.
Dataset build_dataset_from_meshes(const std::vector<TriangleMesh>& meshes,
                                  const std::vector<std::string>& ids, int surface_points,
                                  const std::vector<int>& resolutions, uint64_t seed);

// Same, starting from synthetic shapes (keeps their ground truth).
Dataset build_dataset_from_synthetic(const std::vector<SyntheticShape>& shapes,
                                     const std::string& family, int surface_points,
                                     const std::vector<int>& resolutions, uint64_t seed);

}  // namespace icorr
