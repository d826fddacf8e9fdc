#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "icorr/geometry.hpp"

using namespace icorr;

namespace {

// Unit cube centered at the origin, 12 triangles, outward orientation.
TriangleMesh unit_cube() {
  TriangleMesh m;
  m.vertices.resize(8, 3);
  int r = 0;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int z = 0; z < 2; ++z) m.vertices.row(r++) << x - 0.5, y - 0.5, z - 0.5;
  // Corner order above: bit pattern (x,y,z).
  const int f[12][3] = {{0, 1, 3}, {0, 3, 2}, {4, 6, 7}, {4, 7, 5}, {0, 4, 5}, {0, 5, 1},
                        {2, 3, 7}, {2, 7, 6}, {0, 2, 6}, {0, 6, 4}, {1, 5, 7}, {1, 7, 3}};
  m.faces.resize(12, 3);
  for (int i = 0; i < 12; ++i) m.faces.row(i) << f[i][0], f[i][1], f[i][2];
  return m;
}

}  // namespace

TEST_CASE("bbox and area of the unit cube") {
  TriangleMesh cube = unit_cube();
  cube.validate();
  CHECK(cube.bbox_min().isApprox(Eigen::Vector3d(-0.5, -0.5, -0.5)));
  CHECK(cube.bbox_max().isApprox(Eigen::Vector3d(0.5, 0.5, 0.5)));
  CHECK(cube.bbox_diagonal() == doctest::Approx(std::sqrt(3.0)));
  CHECK(cube.total_area() == doctest::Approx(6.0));
}

TEST_CASE("validate rejects bad meshes") {
  TriangleMesh m = unit_cube();
  m.faces(0, 0) = 99;
  CHECK_THROWS_AS(m.validate(), DataError);
  m = unit_cube();
  m.vertices(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(m.validate(), DataError);
  TriangleMesh empty;
  CHECK_THROWS_AS(empty.validate(), DataError);
}

TEST_CASE("obj round trip preserves geometry") {
  auto dir = std::filesystem::temp_directory_path() / "icorr_geom_test";
  std::filesystem::create_directories(dir);
  TriangleMesh cube = unit_cube();
  save_mesh(cube, dir / "cube.obj");
  TriangleMesh back = load_mesh(dir / "cube.obj");
  CHECK(back.vertices.rows() == 8);
  CHECK(back.faces.rows() == 12);
  CHECK((back.vertices - cube.vertices).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.faces - cube.faces).cwiseAbs().maxCoeff() == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("ply round trip preserves geometry") {
  auto dir = std::filesystem::temp_directory_path() / "icorr_geom_ply";
  std::filesystem::create_directories(dir);
  TriangleMesh cube = unit_cube();
  save_mesh(cube, dir / "cube.ply");
  TriangleMesh back = load_mesh(dir / "cube.ply");
  CHECK(back.vertices.rows() == 8);
  CHECK(back.faces.rows() == 12);
  CHECK((back.vertices - cube.vertices).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("obj parser handles slash tokens, negative indices, and quads") {
  auto dir = std::filesystem::temp_directory_path() / "icorr_geom_obj2";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "t.obj");
    f << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n";
    f << "f 1/1/1 2/2/2 3/3/3 4/4/4\n";  // quad -> two triangles
    f << "f -4 -3 -2\n";                 // negative indices
  }
  TriangleMesh m = load_mesh(dir / "t.obj");
  CHECK(m.vertices.rows() == 4);
  CHECK(m.faces.rows() == 3);
  CHECK(m.faces.row(2)(0) == 0);

  {
    std::ofstream f(dir / "bad.obj");
    f << "v 0 0 0\nf 1 2 5\n";
  }
  CHECK_THROWS_AS(load_mesh(dir / "bad.obj"), DataError);
  CHECK_THROWS_AS(load_mesh(dir / "missing.obj"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("normalize_shape centers and unit-scales the diagonal") {
  TriangleMesh cube = unit_cube();
  cube.vertices = cube.vertices * 4.0;
  cube.vertices.rowwise() += Eigen::RowVector3d(10, -3, 0.5);
  TriangleMesh n = normalize_shape(cube);
  CHECK(n.bbox_diagonal() == doctest::Approx(1.0));
  CHECK(((n.bbox_min() + n.bbox_max()) / 2).norm() == doctest::Approx(0.0).epsilon(1e-12));

  TriangleMesh degenerate = unit_cube();
  degenerate.vertices.setZero();
  CHECK_THROWS_AS(normalize_shape(degenerate), DataError);
}

TEST_CASE("normalization_record reproduces normalize_shape") {
  TriangleMesh cube = unit_cube();
  cube.vertices = cube.vertices * 2.5;
  cube.vertices.rowwise() += Eigen::RowVector3d(1, 2, 3);
  NormalizationRecord rec = normalization_record(cube);
  TriangleMesh n = normalize_shape(cube);
  Matrix3X manual = (cube.vertices.rowwise() - rec.center.transpose()) * rec.scale;
  CHECK((manual - n.vertices).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("surface sampling is area uniform and deterministic") {
  TriangleMesh cube = unit_cube();
  PointSet ps = sample_surface_points(cube, 6000, 9);
  CHECK(ps.points.rows() == 6000);
  CHECK(ps.has_normals());
  // Every point on the cube surface.
  for (int i = 0; i < ps.points.rows(); ++i) {
    double m = ps.points.row(i).cwiseAbs().maxCoeff();
    CHECK(m == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(ps.normals.row(i).norm() == doctest::Approx(1.0));
  }
  // Per-face-pair (per cube side) counts near 1000.
  int per_side[6] = {0};
  for (int i = 0; i < ps.points.rows(); ++i) {
    for (int a = 0; a < 3; ++a) {
      if (ps.points(i, a) <= -0.5 + 1e-12) ++per_side[2 * a];
      if (ps.points(i, a) >= 0.5 - 1e-12) ++per_side[2 * a + 1];
    }
  }
  for (int s = 0; s < 6; ++s) CHECK(std::abs(per_side[s] - 1000) < 150);

  PointSet ps2 = sample_surface_points(cube, 6000, 9);
  CHECK((ps.points - ps2.points).cwiseAbs().maxCoeff() == 0.0);
  PointSet ps3 = sample_surface_points(cube, 6000, 10);
  CHECK((ps.points - ps3.points).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("sampled normals point outward on the cube") {
  TriangleMesh cube = unit_cube();
  PointSet ps = sample_surface_points(cube, 500, 1);
  for (int i = 0; i < ps.points.rows(); ++i)
    CHECK(ps.normals.row(i).dot(ps.points.row(i)) > 0.0);
}
