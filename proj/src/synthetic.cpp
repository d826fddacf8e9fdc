#include "icorr/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace icorr {

namespace {

struct Box {
  Eigen::Vector3d lo, size;
};

// Canonical surface sample on one primitive: face in 0..5
// (x-,x+,y-,y+,z-,z+) plus in-face coordinates.
struct CanonicalSample {
  int prim;
  int face;
  double u, v;
};

Eigen::Vector3d face_normal(int face) {
  switch (face) {
    case 0: return {-1, 0, 0};
    case 1: return {1, 0, 0};
    case 2: return {0, -1, 0};
    case 3: return {0, 1, 0};
    case 4: return {0, 0, -1};
    default: return {0, 0, 1};
  }
}

Eigen::Vector3d map_sample(const Box& b, const CanonicalSample& s) {
  const Eigen::Vector3d& lo = b.lo;
  const Eigen::Vector3d hi = b.lo + b.size;
  double u = s.u, v = s.v;
  switch (s.face) {
    case 0: return {lo.x(), lo.y() + u * b.size.y(), lo.z() + v * b.size.z()};
    case 1: return {hi.x(), lo.y() + u * b.size.y(), lo.z() + v * b.size.z()};
    case 2: return {lo.x() + u * b.size.x(), lo.y(), lo.z() + v * b.size.z()};
    case 3: return {lo.x() + u * b.size.x(), hi.y(), lo.z() + v * b.size.z()};
    case 4: return {lo.x() + u * b.size.x(), lo.y() + v * b.size.y(), lo.z()};
    default: return {lo.x() + u * b.size.x(), lo.y() + v * b.size.y(), hi.z()};
  }
}

void append_box_mesh(const Box& b, std::vector<Eigen::Vector3d>& verts,
                     std::vector<Eigen::Vector3i>& faces) {
  int base = static_cast<int>(verts.size());
  const Eigen::Vector3d& lo = b.lo;
  const Eigen::Vector3d hi = b.lo + b.size;
  for (int c = 0; c < 8; ++c) {
    verts.emplace_back(c & 1 ? hi.x() : lo.x(), c & 2 ? hi.y() : lo.y(), c & 4 ? hi.z() : lo.z());
  }
  // 12 triangles, outward orientation.
  static const int idx[12][3] = {
      {0, 2, 6}, {0, 6, 4},  // x-
      {1, 5, 7}, {1, 7, 3},  // x+
      {0, 4, 5}, {0, 5, 1},  // y-
      {2, 3, 7}, {2, 7, 6},  // y+
      {0, 1, 3}, {0, 3, 2},  // z-
      {4, 6, 7}, {4, 7, 5},  // z+
  };
  for (auto& t : idx) faces.emplace_back(base + t[0], base + t[1], base + t[2]);
}

// Canonical face choice weighted by nominal face areas.
int pick_face(const Eigen::Vector3d& nominal, Rng& rng) {
  double ax = nominal.y() * nominal.z();
  double ay = nominal.x() * nominal.z();
  double az = nominal.x() * nominal.y();
  double w[6] = {ax, ax, ay, ay, az, az};
  double total = 2 * (ax + ay + az);
  double r = rng.uniform() * total;
  for (int f = 0; f < 6; ++f) {
    if (r < w[f]) return f;
    r -= w[f];
  }
  return 5;
}

struct PrimSpec {
  int part_label;
  Eigen::Vector3d nominal_size;  // for canonical face weighting
  double point_share;
};

struct FamilyLayout {
  std::vector<PrimSpec> prims;
  // Instantiates primitive boxes for one shape; fills present flags.
  std::function<void(Rng&, std::vector<Box>&, std::vector<bool>&)> instantiate;
};

FamilyLayout table_layout() {
  FamilyLayout lay;
  lay.prims = {
      {0, {0.8, 0.8, 0.09}, 0.40},  // top
      {1, {0.07, 0.07, 0.45}, 0.15},
      {1, {0.07, 0.07, 0.45}, 0.15},
      {1, {0.07, 0.07, 0.45}, 0.15},
      {1, {0.07, 0.07, 0.45}, 0.15},
  };
  lay.instantiate = [](Rng& rng, std::vector<Box>& boxes, std::vector<bool>& present) {
    double w = rng.uniform(0.6, 1.0);
    double d = rng.uniform(0.6, 1.0);
    double t = rng.uniform(0.06, 0.12);
    double h = rng.uniform(0.35, 0.6);
    double s = rng.uniform(0.05, 0.09);
    boxes.resize(5);
    present.assign(5, true);
    boxes[0] = {{-w / 2, -d / 2, h}, {w, d, t}};
    double ox = w / 2 - s - 0.01;
    double oy = d / 2 - s - 0.01;
    const double sx[4] = {-1, 1, -1, 1};
    const double sy[4] = {-1, -1, 1, 1};
    for (int l = 0; l < 4; ++l) {
      double cx = sx[l] * ox, cy = sy[l] * oy;
      boxes[1 + l] = {{cx - s / 2, cy - s / 2, 0.0}, {s, s, h}};
    }
  };
  return lay;
}

FamilyLayout chair_layout() {
  FamilyLayout lay;
  lay.prims = {
      {0, {0.65, 0.6, 0.08}, 0.24},   // seat
      {1, {0.65, 0.065, 0.5}, 0.24},  // back
      {2, {0.065, 0.065, 0.42}, 0.085},
      {2, {0.065, 0.065, 0.42}, 0.085},
      {2, {0.065, 0.065, 0.42}, 0.085},
      {2, {0.065, 0.065, 0.42}, 0.085},
      {3, {0.06, 0.5, 0.23}, 0.09},  // arms
      {3, {0.06, 0.5, 0.23}, 0.09},
  };
  lay.instantiate = [](Rng& rng, std::vector<Box>& boxes, std::vector<bool>& present) {
    double w = rng.uniform(0.5, 0.8);
    double d = rng.uniform(0.5, 0.7);
    double t = rng.uniform(0.06, 0.10);
    double hs = rng.uniform(0.35, 0.5);
    double s = rng.uniform(0.05, 0.08);
    double hb = rng.uniform(0.4, 0.6);
    double tb = rng.uniform(0.05, 0.08);
    double ha = rng.uniform(0.18, 0.28);
    double ta = rng.uniform(0.05, 0.07);
    bool arms = rng.uniform() < 0.5;
    boxes.resize(8);
    present.assign(8, true);
    boxes[0] = {{-w / 2, -d / 2, hs}, {w, d, t}};
    boxes[1] = {{-w / 2, d / 2 - tb, hs + t}, {w, tb, hb}};
    double ox = w / 2 - s / 2 - 0.01;
    double oy = d / 2 - s / 2 - 0.01;
    const double sx[4] = {-1, 1, -1, 1};
    const double sy[4] = {-1, -1, 1, 1};
    for (int l = 0; l < 4; ++l)
      boxes[2 + l] = {{sx[l] * ox - s / 2, sy[l] * oy - s / 2, 0.0}, {s, s, hs}};
    double arm_depth = d - tb - 0.05;
    boxes[6] = {{-w / 2, -d / 2 + 0.025, hs + t}, {ta, arm_depth, ha}};
    boxes[7] = {{w / 2 - ta, -d / 2 + 0.025, hs + t}, {ta, arm_depth, ha}};
    present[6] = present[7] = arms;
  };
  return lay;
}

FamilyLayout layout_for(const std::string& family) {
  if (family == "table") return table_layout();
  if (family == "chair") return chair_layout();
  throw ConfigError("unknown synthetic family '" + family + "' (expected 'table' or 'chair')");
}

}  // namespace

std::vector<SyntheticShape> generate_synthetic_family(const std::string& family, int count,
                                                      uint64_t seed, int points_per_shape) {
  if (count < 1) throw ConfigError("generate_synthetic_family: count must be >= 1");
  if (points_per_shape < 8) throw ConfigError("generate_synthetic_family: too few points per shape");
  FamilyLayout lay = layout_for(family);
  Rng master(seed);

  // Family-wide canonical sample set; the sample index is the
  // correspondence id.
  Rng canon_rng = master.fork(0);
  std::vector<CanonicalSample> canonical;
  for (size_t p = 0; p < lay.prims.size(); ++p) {
    int n_p = std::max(1, static_cast<int>(std::lround(lay.prims[p].point_share * points_per_shape)));
    for (int i = 0; i < n_p; ++i) {
      CanonicalSample s;
      s.prim = static_cast<int>(p);
      s.face = pick_face(lay.prims[p].nominal_size, canon_rng);
      s.u = canon_rng.uniform();
      s.v = canon_rng.uniform();
      canonical.push_back(s);
    }
  }

  std::vector<SyntheticShape> shapes;
  shapes.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng rng = master.fork(static_cast<uint64_t>(i) + 1);
    std::vector<Box> boxes;
    std::vector<bool> present;
    lay.instantiate(rng, boxes, present);

    SyntheticShape shape;
    std::vector<Eigen::Vector3d> verts;
    std::vector<Eigen::Vector3i> faces;
    for (size_t p = 0; p < boxes.size(); ++p)
      if (present[p]) append_box_mesh(boxes[p], verts, faces);
    shape.mesh.vertices.resize(verts.size(), 3);
    for (size_t v = 0; v < verts.size(); ++v) shape.mesh.vertices.row(v) = verts[v];
    shape.mesh.faces.resize(faces.size(), 3);
    for (size_t f = 0; f < faces.size(); ++f) shape.mesh.faces.row(f) = faces[f];

    std::vector<int> keep;
    for (size_t c = 0; c < canonical.size(); ++c)
      if (present[canonical[c].prim]) keep.push_back(static_cast<int>(c));

    shape.points.resize(keep.size(), 3);
    shape.normals.resize(keep.size(), 3);
    shape.part_labels.resize(keep.size());
    shape.correspondence_ids.resize(keep.size());
    for (size_t n = 0; n < keep.size(); ++n) {
      const CanonicalSample& s = canonical[keep[n]];
      shape.points.row(n) = map_sample(boxes[s.prim], s);
      shape.normals.row(n) = face_normal(s.face);
      shape.part_labels(n) = lay.prims[s.prim].part_label;
      shape.correspondence_ids(n) = keep[n];
    }

    for (size_t p = 0; p < lay.prims.size(); ++p) {
      if (!present[p]) continue;
      int label = lay.prims[p].part_label;
      if (std::find(shape.present_parts.begin(), shape.present_parts.end(), label) ==
          shape.present_parts.end())
        shape.present_parts.push_back(label);
    }
    std::sort(shape.present_parts.begin(), shape.present_parts.end());

    NormalizationRecord rec = normalization_record(shape.mesh);
    shape.mesh = normalize_shape(shape.mesh);
    shape.points = (shape.points.rowwise() - rec.center.transpose()) * rec.scale;
    shapes.push_back(std::move(shape));
  }
  return shapes;
}

FamilyGroundTruth family_ground_truth(const std::string& family) {
  if (family == "table") return {{0, 1}, {{0}, {1}, {0, 1}}};
  if (family == "chair") return {{0, 1, 2, 3}, {{0}, {1}, {2}, {3}, {0, 1}, {0, 2}, {0, 1, 2}}};
  throw ConfigError("unknown synthetic family '" + family + "'");
}

int chair_arm_part_id() { return 3; }

}  // namespace icorr
