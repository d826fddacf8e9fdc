#include "icorr/dataset.hpp"

#include <fstream>

#include "icorr/container.hpp"
#include "json.hpp"

namespace icorr {

namespace {

using nlohmann::json;

constexpr int kManifestVersion = 1;

Blob vec_i32_blob(const Eigen::VectorXi& v) {
  std::vector<int32_t> tmp(v.data(), v.data() + v.size());
  return Blob::from_vector_i32(tmp);
}

Eigen::VectorXi blob_vec_i32(const Blob& b) {
  auto tmp = b.to_vector_i32();
  return Eigen::Map<const Eigen::VectorXi>(tmp.data(), tmp.size());
}

void write_named(const std::filesystem::path& dir, json& blob_list, const std::string& name,
                 const Blob& blob) {
  write_blob(dir / (name + ".bin"), blob);
  blob_list.push_back(name);
}

Blob read_named(const std::filesystem::path& dir, const std::string& name) {
  return read_blob(dir / (name + ".bin"));
}

}  // namespace

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["version"] = kManifestVersion;
  manifest["kind"] = "dataset";
  manifest["seed"] = ds.seed;
  manifest["family"] = ds.family;
  manifest["surface_points"] = ds.surface_points;
  manifest["resolutions"] = ds.resolutions;
  manifest["normalization"] = {{"diagonal", 1.0}, {"centered", true}};
  json shapes = json::array();
  for (const auto& s : ds.shapes) {
    json rec;
    rec["id"] = s.id;
    rec["present_parts"] = s.present_parts;
    json blobs = json::array();
    write_named(dir, blobs, s.id + "_vertices", Blob::from_matrix(s.mesh.vertices));
    write_named(dir, blobs, s.id + "_faces", Blob::from_matrix_i32(s.mesh.faces));
    write_named(dir, blobs, s.id + "_surface", Blob::from_matrix(s.surface.points));
    write_named(dir, blobs, s.id + "_surface_normals", Blob::from_matrix(s.surface.normals));
    json res_list = json::array();
    for (const auto& [r, samp] : s.samples) {
      res_list.push_back(r);
      write_named(dir, blobs, s.id + "_occ" + std::to_string(r) + "_points",
                  Blob::from_matrix(samp.points));
      write_named(dir, blobs, s.id + "_occ" + std::to_string(r) + "_labels",
                  Blob::from_matrix(Eigen::MatrixXd(samp.labels)));
    }
    rec["sample_resolutions"] = res_list;
    if (s.has_ground_truth()) {
      write_named(dir, blobs, s.id + "_gt_points", Blob::from_matrix(*s.gt_points));
      write_named(dir, blobs, s.id + "_gt_normals", Blob::from_matrix(*s.gt_normals));
      write_named(dir, blobs, s.id + "_gt_labels", vec_i32_blob(*s.gt_part_labels));
      write_named(dir, blobs, s.id + "_gt_corr", vec_i32_blob(*s.gt_correspondence_ids));
      rec["has_ground_truth"] = true;
    } else {
      rec["has_ground_truth"] = false;
    }
    rec["blobs"] = blobs;
    shapes.push_back(rec);
  }
  manifest["shapes"] = shapes;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest: " + (dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("cannot open manifest: " + (dir / "manifest.json").string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw DataError("malformed manifest.json: " + std::string(e.what()));
  }
  if (!manifest.contains("version") || manifest["version"].get<int>() != kManifestVersion)
    throw DataError("unsupported manifest version (expected " + std::to_string(kManifestVersion) + ")");
  Dataset ds;
  ds.seed = manifest.value("seed", 0ULL);
  ds.family = manifest.value("family", std::string());
  ds.surface_points = manifest.value("surface_points", 0);
  ds.resolutions = manifest.value("resolutions", std::vector<int>());
  for (const auto& rec : manifest["shapes"]) {
    ShapeRecord s;
    s.id = rec["id"].get<std::string>();
    s.present_parts = rec.value("present_parts", std::vector<int>());
    s.mesh.vertices = read_named(dir, s.id + "_vertices").to_matrix();
    s.mesh.faces = read_named(dir, s.id + "_faces").to_matrix_i32();
    s.surface.points = read_named(dir, s.id + "_surface").to_matrix();
    s.surface.normals = read_named(dir, s.id + "_surface_normals").to_matrix();
    for (int r : rec.value("sample_resolutions", std::vector<int>())) {
      SampledOccupancy samp;
      samp.resolution = r;
      samp.points = read_named(dir, s.id + "_occ" + std::to_string(r) + "_points").to_matrix();
      samp.labels = read_named(dir, s.id + "_occ" + std::to_string(r) + "_labels").to_matrix();
      if (samp.points.rows() != samp.labels.rows())
        throw DataError("manifest/blob mismatch for shape " + s.id + " at resolution " +
                        std::to_string(r));
      s.samples[r] = std::move(samp);
    }
    if (rec.value("has_ground_truth", false)) {
      s.gt_points = read_named(dir, s.id + "_gt_points").to_matrix();
      s.gt_normals = read_named(dir, s.id + "_gt_normals").to_matrix();
      s.gt_part_labels = blob_vec_i32(read_named(dir, s.id + "_gt_labels"));
      s.gt_correspondence_ids = blob_vec_i32(read_named(dir, s.id + "_gt_corr"));
    }
    ds.shapes.push_back(std::move(s));
  }
  return ds;
}

Dataset build_dataset_from_meshes(const std::vector<TriangleMesh>& meshes,
                                  const std::vector<std::string>& ids, int surface_points,
                                  const std::vector<int>& resolutions, uint64_t seed) {
  if (meshes.size() != ids.size()) throw ConfigError("mesh/id count mismatch");
  Dataset ds;
  ds.seed = seed;
  ds.surface_points = surface_points;
  ds.resolutions = resolutions;
  Rng master(seed);
  for (size_t i = 0; i < meshes.size(); ++i) {
    ShapeRecord rec;
    rec.id = ids[i];
    rec.mesh = normalize_shape(meshes[i]);
    Rng shape_rng = master.fork(i);
    rec.surface = sample_surface_points(rec.mesh, surface_points, shape_rng.next_u64());
    for (int r : resolutions) {
      VoxelGrid grid = voxelize(rec.mesh, r);
      rec.samples[r] = sample_point_value_pairs(grid, shape_rng.next_u64());
    }
    ds.shapes.push_back(std::move(rec));
  }
  return ds;
}

Dataset build_dataset_from_synthetic(const std::vector<SyntheticShape>& shapes,
                                     const std::string& family, int surface_points,
                                     const std::vector<int>& resolutions, uint64_t seed) {
  std::vector<TriangleMesh> meshes;
  std::vector<std::string> ids;
  for (size_t i = 0; i < shapes.size(); ++i) {
    meshes.push_back(shapes[i].mesh);
    ids.push_back(family + "_" + std::to_string(i));
  }
  Dataset ds = build_dataset_from_meshes(meshes, ids, surface_points, resolutions, seed);
  ds.family = family;
  for (size_t i = 0; i < shapes.size(); ++i) {
    ds.shapes[i].gt_points = shapes[i].points;
    ds.shapes[i].gt_normals = shapes[i].normals;
    ds.shapes[i].gt_part_labels = shapes[i].part_labels;
    ds.shapes[i].gt_correspondence_ids = shapes[i].correspondence_ids;
    ds.shapes[i].present_parts = shapes[i].present_parts;
  }
  return ds;
}

}  // namespace icorr
