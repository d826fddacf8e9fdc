#include "icorr/voxelize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>

namespace icorr {

void VoxelGrid::locate(const Eigen::Vector3d& p, int& i, int& j, int& k) const {
  auto clampi = [this](double t) {
    int c = static_cast<int>(std::floor((t + 0.5) * resolution));
    return std::clamp(c, 0, resolution - 1);
  };
  i = clampi(p.x());
  j = clampi(p.y());
  k = clampi(p.z());
}

size_t VoxelGrid::occupied_count() const {
  size_t n = 0;
  for (uint8_t v : occupancy) n += v;
  return n;
}

void VoxelGrid::validate() const {
  if (resolution != 16 && resolution != 32 && resolution != 64)
    throw DataError("voxel grid resolution must be 16, 32 or 64");
  size_t want = static_cast<size_t>(resolution) * resolution * resolution;
  if (occupancy.size() != want) throw DataError("voxel grid occupancy size mismatch");
  for (uint8_t v : occupancy)
    if (v > 1) throw DataError("voxel occupancy values must be 0 or 1");
}

int sample_count_for_resolution(int resolution) {
  switch (resolution) {
    case 16:
      return 4096;
    case 32:
      return 8192;
    case 64:
      return 32768;
    default:
      throw ConfigError("unsupported resolution " + std::to_string(resolution));
  }
}

namespace {

// Crossing x-values of a +x ray at (y, z). Returns false when the ray
// passes within eps of a triangle edge in the (y, z) plane; the caller
// re-casts with a jittered origin.
bool ray_crossings(const TriangleMesh& mesh, const std::vector<int>& tris, double y, double z,
                   std::vector<double>& xs) {
  constexpr double kBaryTol = 1e-9;
  xs.clear();
  for (int f : tris) {
    Eigen::Vector3d a = mesh.vertices.row(mesh.faces(f, 0));
    Eigen::Vector3d b = mesh.vertices.row(mesh.faces(f, 1));
    Eigen::Vector3d c = mesh.vertices.row(mesh.faces(f, 2));
    auto edge = [&](const Eigen::Vector3d& p0, const Eigen::Vector3d& p1) {
      return (p1.y() - p0.y()) * (z - p0.z()) - (p1.z() - p0.z()) * (y - p0.y());
    };
    double e0 = edge(a, b), e1 = edge(b, c), e2 = edge(c, a);
    Eigen::Vector3d n = (b - a).cross(c - a);
    // n.x() is twice the signed (y,z)-projected area; a triangle parallel to
    // the ray projects to a segment and cannot produce a transversal
    // crossing.
    double ext = std::max({std::abs(b.y() - a.y()), std::abs(c.y() - a.y()),
                           std::abs(b.z() - a.z()), std::abs(c.z() - a.z()), 1e-12});
    if (std::abs(n.x()) < 1e-12 * ext * ext) continue;
    // Normalized barycentric-style coordinates of the ray in the projected
    // triangle: inside iff all positive.
    double b0 = e0 / n.x(), b1 = e1 / n.x(), b2 = e2 / n.x();
    double mn = std::min({b0, b1, b2});
    if (mn <= kBaryTol) {
      if (mn >= -kBaryTol) return false;  // grazing an edge or vertex
      continue;                            // clearly outside
    }
    xs.push_back(a.x() - (n.y() * (y - a.y()) + n.z() * (z - a.z())) / n.x());
  }
  std::sort(xs.begin(), xs.end());
  return true;
}

}  // namespace

VoxelGrid voxelize(const TriangleMesh& mesh, int resolution) {
  mesh.validate();
  if (resolution != 16 && resolution != 32 && resolution != 64)
    throw ConfigError("voxelize: resolution must be 16, 32 or 64");
  const int r = resolution;
  VoxelGrid grid;
  grid.resolution = r;
  grid.occupancy.assign(static_cast<size_t>(r) * r * r, 0);
  const double h = grid.cell_size();

  // Bin triangles by (y, z) bounding box to limit per-row candidates.
  std::vector<std::vector<int>> bins(static_cast<size_t>(r) * r);
  for (Eigen::Index f = 0; f < mesh.faces.rows(); ++f) {
    double ylo = 1e30, yhi = -1e30, zlo = 1e30, zhi = -1e30;
    for (int c = 0; c < 3; ++c) {
      Eigen::Vector3d v = mesh.vertices.row(mesh.faces(f, c));
      ylo = std::min(ylo, v.y());
      yhi = std::max(yhi, v.y());
      zlo = std::min(zlo, v.z());
      zhi = std::max(zhi, v.z());
    }
    int j0 = std::clamp(static_cast<int>(std::floor((ylo + 0.5) / h)) - 1, 0, r - 1);
    int j1 = std::clamp(static_cast<int>(std::floor((yhi + 0.5) / h)) + 1, 0, r - 1);
    int k0 = std::clamp(static_cast<int>(std::floor((zlo + 0.5) / h)) - 1, 0, r - 1);
    int k1 = std::clamp(static_cast<int>(std::floor((zhi + 0.5) / h)) + 1, 0, r - 1);
    for (int j = j0; j <= j1; ++j)
      for (int k = k0; k <= k1; ++k) bins[static_cast<size_t>(j) * r + k].push_back(static_cast<int>(f));
  }

  parallel_for(static_cast<int64_t>(r) * r, [&](int64_t row) {
    int j = static_cast<int>(row / r);
    int k = static_cast<int>(row % r);
    const auto& tris = bins[static_cast<size_t>(j) * r + k];
    if (tris.empty()) return;
    double y = -0.5 + (j + 0.5) * h;
    double z = -0.5 + (k + 0.5) * h;
    std::vector<double> xs;
    // Deterministic jitter escalation for rays grazing an edge or vertex.
    bool ok = false;
    for (int attempt = 0; attempt < 8 && !ok; ++attempt) {
      double jit = attempt == 0 ? 0.0 : h * 1e-6 * attempt * (attempt % 2 == 0 ? 1 : -1);
      ok = ray_crossings(mesh, tris, y + jit, z + 0.5 * jit, xs);
    }
    if (!ok) return;  // grazing row after all retries; treated as outside
    size_t cursor = 0;
    int parity = 0;
    for (int i = 0; i < r; ++i) {
      double xc = -0.5 + (i + 0.5) * h;
      while (cursor < xs.size() && xs[cursor] < xc) {
        ++parity;
        ++cursor;
      }
      // Odd number of crossings behind the center => inside.
      if (parity % 2 == 1) grid.occupancy[grid.index(i, j, k)] = 1;
    }
  });

  // Flood fill from the boundary through empty cells; enclosed empty
  // pockets (mesh defects) become interior.
  std::vector<uint8_t> outside(grid.occupancy.size(), 0);
  std::deque<std::array<int, 3>> queue;
  auto push_if_empty = [&](int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= r || j >= r || k >= r) return;
    size_t idx = grid.index(i, j, k);
    if (grid.occupancy[idx] == 0 && !outside[idx]) {
      outside[idx] = 1;
      queue.push_back({i, j, k});
    }
  };
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) {
      push_if_empty(0, a, b);
      push_if_empty(r - 1, a, b);
      push_if_empty(a, 0, b);
      push_if_empty(a, r - 1, b);
      push_if_empty(a, b, 0);
      push_if_empty(a, b, r - 1);
    }
  while (!queue.empty()) {
    auto [i, j, k] = queue.front();
    queue.pop_front();
    push_if_empty(i + 1, j, k);
    push_if_empty(i - 1, j, k);
    push_if_empty(i, j + 1, k);
    push_if_empty(i, j - 1, k);
    push_if_empty(i, j, k + 1);
    push_if_empty(i, j, k - 1);
  }
  for (size_t idx = 0; idx < grid.occupancy.size(); ++idx)
    if (grid.occupancy[idx] == 0 && !outside[idx]) grid.occupancy[idx] = 1;
  return grid;
}

SampledOccupancy sample_point_value_pairs(const VoxelGrid& grid, uint64_t seed) {
  grid.validate();
  const int r = grid.resolution;
  const int K = sample_count_for_resolution(r);
  SampledOccupancy out;
  out.resolution = r;
  out.points.resize(K, 3);
  out.labels.resize(K);

  if (r == 16) {
    // All cell centers, in index order.
    int n = 0;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        for (int k = 0; k < r; ++k) {
          out.points.row(n) = grid.cell_center(i, j, k);
          out.labels(n) = grid.at(i, j, k);
          ++n;
        }
    return out;
  }

  // Cells within one cell (Chebyshev) of an occupancy sign change.
  std::vector<int> near_surface;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k) {
        uint8_t v = grid.at(i, j, k);
        bool boundary = false;
        for (int di = -1; di <= 1 && !boundary; ++di)
          for (int dj = -1; dj <= 1 && !boundary; ++dj)
            for (int dk = -1; dk <= 1 && !boundary; ++dk) {
              int ni = i + di, nj = j + dj, nk = k + dk;
              if (ni < 0 || nj < 0 || nk < 0 || ni >= r || nj >= r || nk >= r) continue;
              if (grid.at(ni, nj, nk) != v) boundary = true;
            }
        if (boundary) near_surface.push_back(static_cast<int>(grid.index(i, j, k)));
      }

  Rng rng(seed);
  const double h = grid.cell_size();
  const size_t total = grid.occupancy.size();
  for (int n = 0; n < K; ++n) {
    size_t cell;
    if (!near_surface.empty() && n % 2 == 0) {
      cell = near_surface[rng.uniform_int(near_surface.size())];
    } else {
      cell = rng.uniform_int(total);
    }
    int i = static_cast<int>(cell / (static_cast<size_t>(r) * r));
    int j = static_cast<int>((cell / r) % r);
    int k = static_cast<int>(cell % r);
    Eigen::Vector3d c = grid.cell_center(i, j, k);
    out.points.row(n) = c + Eigen::Vector3d(rng.uniform(-0.5, 0.5) * h, rng.uniform(-0.5, 0.5) * h,
                                            rng.uniform(-0.5, 0.5) * h);
    out.labels(n) = grid.occupancy[cell];
  }
  return out;
}

}  // namespace icorr
