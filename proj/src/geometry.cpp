#include "icorr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace icorr {

void TriangleMesh::validate() const {
  if (faces.rows() == 0) throw DataError("mesh has no faces");
  if (vertices.rows() == 0) throw DataError("mesh has no vertices");
  if (!vertices.allFinite()) throw DataError("mesh has non-finite coordinates");
  const int n = static_cast<int>(vertices.rows());
  for (Eigen::Index f = 0; f < faces.rows(); ++f) {
    for (int c = 0; c < 3; ++c) {
      int idx = faces(f, c);
      if (idx < 0 || idx >= n)
        throw DataError("face " + std::to_string(f) + " references vertex " +
                        std::to_string(idx) + " beyond vertex count " + std::to_string(n));
    }
  }
}

Eigen::Vector3d TriangleMesh::bbox_min() const { return vertices.colwise().minCoeff(); }
Eigen::Vector3d TriangleMesh::bbox_max() const { return vertices.colwise().maxCoeff(); }

double TriangleMesh::bbox_diagonal() const {
  return (bbox_max() - bbox_min()).norm();
}

double TriangleMesh::total_area() const {
  double area = 0.0;
  for (Eigen::Index f = 0; f < faces.rows(); ++f) {
    Eigen::Vector3d a = vertices.row(faces(f, 0));
    Eigen::Vector3d b = vertices.row(faces(f, 1));
    Eigen::Vector3d c = vertices.row(faces(f, 2));
    area += 0.5 * (b - a).cross(c - a).norm();
  }
  return area;
}

namespace {

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh: " + path.string());
  std::vector<Eigen::Vector3d> verts;
  std::vector<Eigen::Vector3i> faces;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z))
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed vertex line");
      verts.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        // "v", "v/vt", "v//vn", "v/vt/vn"; only the vertex index is used.
        size_t slash = tok.find('/');
        std::string head = (slash == std::string::npos) ? tok : tok.substr(0, slash);
        int v;
        try {
          v = std::stoi(head);
        } catch (const std::exception&) {
          throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed face token '" + tok + "'");
        }
        if (v < 0) v = static_cast<int>(verts.size()) + v + 1;  // negative = relative
        idx.push_back(v - 1);
      }
      if (idx.size() < 3)
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": face with fewer than 3 vertices");
      for (size_t t = 1; t + 1 < idx.size(); ++t)  // fan triangulation
        faces.emplace_back(idx[0], idx[t], idx[t + 1]);
    }
  }
  TriangleMesh mesh;
  mesh.vertices.resize(verts.size(), 3);
  for (size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(i) = verts[i];
  mesh.faces.resize(faces.size(), 3);
  for (size_t i = 0; i < faces.size(); ++i) mesh.faces.row(i) = faces[i];
  if (mesh.empty()) throw DataError("empty mesh: " + path.string());
  mesh.validate();
  return mesh;
}

TriangleMesh load_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh: " + path.string());
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> std::string {
    if (!std::getline(in, line)) throw DataError(path.string() + ": truncated PLY header");
    ++lineno;
    return line;
  };
  if (next_line() != "ply") throw DataError(path.string() + ":1: not a PLY file");
  size_t n_vertices = 0, n_faces = 0;
  bool in_vertex_el = false;
  int vertex_props = 0;
  for (;;) {
    std::istringstream ss(next_line());
    std::string tag;
    ss >> tag;
    if (tag == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "ascii")
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": only ascii PLY is supported");
    } else if (tag == "element") {
      std::string name;
      size_t count;
      ss >> name >> count;
      in_vertex_el = (name == "vertex");
      if (name == "vertex") n_vertices = count;
      if (name == "face") n_faces = count;
    } else if (tag == "property") {
      if (in_vertex_el) ++vertex_props;
    } else if (tag == "end_header") {
      break;
    }
  }
  if (vertex_props < 3)
    throw DataError(path.string() + ": PLY vertex element needs at least x y z properties");
  TriangleMesh mesh;
  mesh.vertices.resize(n_vertices, 3);
  for (size_t i = 0; i < n_vertices; ++i) {
    std::istringstream ss(next_line());
    double x, y, z;
    if (!(ss >> x >> y >> z))
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed vertex record");
    mesh.vertices.row(i) << x, y, z;
  }
  std::vector<Eigen::Vector3i> faces;
  for (size_t i = 0; i < n_faces; ++i) {
    std::istringstream ss(next_line());
    int cnt;
    if (!(ss >> cnt) || cnt < 3)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed face record");
    std::vector<int> idx(cnt);
    for (int c = 0; c < cnt; ++c) {
      if (!(ss >> idx[c]))
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed face record");
    }
    for (int t = 1; t + 1 < cnt; ++t) faces.emplace_back(idx[0], idx[t], idx[t + 1]);
  }
  mesh.faces.resize(faces.size(), 3);
  for (size_t i = 0; i < faces.size(); ++i) mesh.faces.row(i) = faces[i];
  if (mesh.empty()) throw DataError("empty mesh: " + path.string());
  mesh.validate();
  return mesh;
}

std::string lower_ext(const std::filesystem::path& path) {
  std::string e = path.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

}  // namespace

TriangleMesh load_mesh(const std::filesystem::path& path) {
  std::string ext = lower_ext(path);
  if (ext == ".obj") return load_obj(path);
  if (ext == ".ply") return load_ply(path);
  throw DataError("unsupported mesh format '" + ext + "' (expected .obj or .ply): " + path.string());
}

void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path) {
  mesh.validate();
  std::string ext = lower_ext(path);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open mesh for writing: " + path.string());
  out.precision(17);
  if (ext == ".obj") {
    for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i)
      out << "v " << mesh.vertices(i, 0) << ' ' << mesh.vertices(i, 1) << ' ' << mesh.vertices(i, 2) << '\n';
    for (Eigen::Index f = 0; f < mesh.faces.rows(); ++f)
      out << "f " << mesh.faces(f, 0) + 1 << ' ' << mesh.faces(f, 1) + 1 << ' ' << mesh.faces(f, 2) + 1 << '\n';
  } else if (ext == ".ply") {
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << mesh.vertices.rows() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    out << "element face " << mesh.faces.rows() << "\n";
    out << "property list uchar int vertex_indices\nend_header\n";
    for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i)
      out << mesh.vertices(i, 0) << ' ' << mesh.vertices(i, 1) << ' ' << mesh.vertices(i, 2) << '\n';
    for (Eigen::Index f = 0; f < mesh.faces.rows(); ++f)
      out << "3 " << mesh.faces(f, 0) << ' ' << mesh.faces(f, 1) << ' ' << mesh.faces(f, 2) << '\n';
  } else {
    throw DataError("unsupported mesh format '" + ext + "': " + path.string());
  }
  if (!out) throw IoError("short write on mesh: " + path.string());
}

NormalizationRecord normalization_record(const TriangleMesh& mesh) {
  mesh.validate();
  Eigen::Vector3d lo = mesh.bbox_min();
  Eigen::Vector3d hi = mesh.bbox_max();
  double diag = (hi - lo).norm();
  if (diag < 1e-12) throw DataError("degenerate mesh: bounding-box diagonal is zero");
  return NormalizationRecord{(lo + hi) * 0.5, 1.0 / diag};
}

TriangleMesh normalize_shape(const TriangleMesh& mesh) {
  NormalizationRecord rec = normalization_record(mesh);
  TriangleMesh out = mesh;
  out.vertices = (mesh.vertices.rowwise() - rec.center.transpose()) * rec.scale;
  return out;
}

PointSet sample_surface_points(const TriangleMesh& mesh, int n, uint64_t seed) {
  mesh.validate();
  if (n < 1) throw ConfigError("sample_surface_points: n must be >= 1");
  const Eigen::Index m = mesh.faces.rows();
  std::vector<double> cum(m);
  std::vector<Eigen::Vector3d> fn(m);
  double acc = 0.0;
  for (Eigen::Index f = 0; f < m; ++f) {
    Eigen::Vector3d a = mesh.vertices.row(mesh.faces(f, 0));
    Eigen::Vector3d b = mesh.vertices.row(mesh.faces(f, 1));
    Eigen::Vector3d c = mesh.vertices.row(mesh.faces(f, 2));
    Eigen::Vector3d cr = (b - a).cross(c - a);
    double area = 0.5 * cr.norm();
    acc += area;
    cum[f] = acc;
    fn[f] = (cr.norm() > 1e-300) ? Eigen::Vector3d(cr / cr.norm()) : Eigen::Vector3d(0, 0, 1);
  }
  if (acc <= 0.0) throw DataError("mesh has zero surface area");
  Rng rng(seed);
  PointSet out;
  out.points.resize(n, 3);
  out.normals.resize(n, 3);
  for (int i = 0; i < n; ++i) {
    double r = rng.uniform() * acc;
    auto it = std::lower_bound(cum.begin(), cum.end(), r);
    Eigen::Index f = std::min<Eigen::Index>(it - cum.begin(), m - 1);
    // Uniform barycentric sample.
    double u = rng.uniform(), v = rng.uniform();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    Eigen::Vector3d a = mesh.vertices.row(mesh.faces(f, 0));
    Eigen::Vector3d b = mesh.vertices.row(mesh.faces(f, 1));
    Eigen::Vector3d c = mesh.vertices.row(mesh.faces(f, 2));
    out.points.row(i) = a + u * (b - a) + v * (c - a);
    out.normals.row(i) = fn[f];
  }
  return out;
}

}  // namespace icorr
