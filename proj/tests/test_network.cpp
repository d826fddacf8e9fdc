#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>

#include "doctest.h"
#include "icorr/container.hpp"
#include "icorr/network.hpp"

using namespace icorr;

namespace {

NetworkConfig tiny_config() {
  NetworkConfig cfg;
  cfg.d = 8;
  cfg.k = 4;
  cfg.encoder_widths = {8, 16};
  cfg.encoder_post_width = 16;
  cfg.f_hidden = {16, 16};
  cfg.g_layers = 3;
  cfg.g_width = 16;
  return cfg;
}

Matrix3X random_points(int n, uint64_t seed) {
  Rng rng(seed);
  Matrix3X pts(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) pts(i, j) = rng.uniform(-0.5, 0.5);
  return pts;
}

}  // namespace

TEST_CASE("config validation") {
  NetworkConfig cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.k = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.f_hidden = {16};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_config();
  cfg.g_layers = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("init is deterministic per seed with zero biases") {
  auto a = init_parameters(tiny_config(), 5);
  auto b = init_parameters(tiny_config(), 5);
  auto c = init_parameters(tiny_config(), 6);
  CHECK((a.arrays.at("f.0.W") - b.arrays.at("f.0.W")).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.arrays.at("f.0.W") - c.arrays.at("f.0.W")).cwiseAbs().maxCoeff() > 0.0);
  CHECK(a.arrays.at("f.0.b").cwiseAbs().maxCoeff() == 0.0);
  // First f layer consumes 3 + d inputs.
  CHECK(a.arrays.at("f.0.W").rows() == 3 + tiny_config().d);
}

TEST_CASE("encoder output has dimension d and is permutation invariant") {
  auto params = init_parameters(tiny_config(), 1);
  Matrix3X pts = random_points(40, 2);
  Eigen::RowVectorXd z = encode(pts, params);
  CHECK(z.size() == 8);

  // Reverse the rows: max-pool makes the code identical.
  Matrix3X rev(40, 3);
  for (int i = 0; i < 40; ++i) rev.row(i) = pts.row(39 - i);
  Eigen::RowVectorXd z2 = encode(rev, params);
  CHECK((z - z2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("part embedding lies strictly inside (0,1)^k") {
  auto params = init_parameters(tiny_config(), 1);
  Matrix3X pts = random_points(64, 3);
  Eigen::RowVectorXd z = encode(pts, params);
  Eigen::MatrixXd pev = part_embedding(pts, z, params);
  CHECK(pev.rows() == 64);
  CHECK(pev.cols() == 4);
  CHECK(pev.minCoeff() > 0.0);
  CHECK(pev.maxCoeff() < 1.0);
}

TEST_CASE("occupancy equals the max PEV entry with low-index tie break") {
  auto params = init_parameters(tiny_config(), 1);
  Matrix3X pts = random_points(10, 4);
  Eigen::RowVectorXd z = encode(pts, params);
  Eigen::MatrixXd pev = part_embedding(pts, z, params);
  for (int i = 0; i < 10; ++i) {
    OccupancyValue o = occupancy(pts.row(i).transpose(), z, params);
    CHECK(o.value == doctest::Approx(pev.row(i).maxCoeff()).epsilon(1e-12));
    int lowest = 0;
    for (int j = 1; j < pev.cols(); ++j)
      if (pev(i, j) > pev(i, lowest)) lowest = j;
    CHECK(o.branch == lowest + 1);
  }
}

TEST_CASE("inverse map output lies strictly inside (-1,1)^3") {
  auto params = init_parameters(tiny_config(), 1);
  Matrix3X pts = random_points(32, 5);
  Eigen::RowVectorXd z = encode(pts, params);
  Eigen::MatrixXd pev = part_embedding(pts, z, params);
  Matrix3X rec = inverse_map(pev, z, params);
  CHECK(rec.rows() == 32);
  CHECK(rec.cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("spatial gradient matches central finite differences") {
  auto params = init_parameters(tiny_config(), 7);
  Matrix3X pts = random_points(100, 8);
  Eigen::RowVectorXd z = encode(pts, params);
  const double h = 1e-4;
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    Eigen::Vector3d x = pts.row(i).transpose();
    // Skip points near a branch tie where the max-pool is nondifferentiable.
    Eigen::MatrixXd pev = part_embedding(x.transpose(), z, params);
    std::vector<double> vals(pev.cols());
    for (int j = 0; j < pev.cols(); ++j) vals[j] = pev(0, j);
    std::sort(vals.begin(), vals.end());
    if (vals.back() - vals[vals.size() - 2] < 1e-4) continue;
    Eigen::Vector3d g = spatial_gradient(x, z, params);
    Eigen::Vector3d fd;
    for (int a = 0; a < 3; ++a) {
      Eigen::Vector3d xp = x, xm = x;
      xp(a) += h;
      xm(a) -= h;
      fd(a) = (occupancy(xp, z, params).value - occupancy(xm, z, params).value) / (2 * h);
    }
    double denom = std::max(1e-8, fd.norm());
    CHECK((g - fd).norm() / denom < 1e-3);
    ++checked;
  }
  CHECK(checked >= 90);
}

TEST_CASE("checkpoint round trip is bit exact, config mismatch rejected") {
  auto dir = std::filesystem::temp_directory_path() / "icorr_ckpt_test";
  std::filesystem::remove_all(dir);
  auto params = init_parameters(tiny_config(), 9);
  params.stage_tag = "stage2";
  std::map<std::string, Eigen::MatrixXd> opt = {{"m.f.0.W", params.arrays.at("f.0.W") * 0.5}};
  save_checkpoint(params, dir, &opt, 1234);

  std::map<std::string, Eigen::MatrixXd> opt2;
  int64_t iter = 0;
  ParameterStore back = load_checkpoint(dir, &opt2, &iter);
  CHECK(back.stage_tag == "stage2");
  CHECK(back.seed == params.seed);
  CHECK(back.config == params.config);
  for (const auto& [name, arr] : params.arrays)
    CHECK((back.arrays.at(name) - arr).cwiseAbs().maxCoeff() == 0.0);
  CHECK(iter == 1234);
  CHECK((opt2.at("m.f.0.W") - opt.at("m.f.0.W")).cwiseAbs().maxCoeff() == 0.0);

  // Corrupting a blob's shape must be caught.
  Blob wrong = Blob::from_matrix(Eigen::MatrixXd::Zero(2, 2));
  write_blob(dir / "f.0.W.bin", wrong);
  CHECK_THROWS_AS(load_checkpoint(dir), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("taped forwards agree with plain forwards") {
  auto params = init_parameters(tiny_config(), 11);
  Matrix3X pts = random_points(24, 12);
  Eigen::RowVectorXd z_plain = encode(pts, params);

  ad::Tape tape;
  TapedModel model(tape, params);
  ad::Ref z = model.encode(pts);
  CHECK((tape.val(z).row(0).transpose() - z_plain.transpose()).cwiseAbs().maxCoeff() < 1e-14);

  ad::Ref x = tape.constant(pts);
  ad::Ref pev = model.pev(x, z);
  Eigen::MatrixXd pev_plain = part_embedding(pts, z_plain, params);
  CHECK((tape.val(pev) - pev_plain).cwiseAbs().maxCoeff() < 1e-14);

  ad::Ref rec = model.inverse(pev, z);
  Matrix3X rec_plain = inverse_map(pev_plain, z_plain, params);
  CHECK((tape.val(rec) - rec_plain).cwiseAbs().maxCoeff() < 1e-14);

  std::vector<int> branch;
  ad::Ref occ = model.occupancy_batch(x, z, &branch);
  for (int i = 0; i < 5; ++i) {
    OccupancyValue o = occupancy(pts.row(i).transpose(), z_plain, params);
    CHECK(tape.val(occ)(i, 0) == doctest::Approx(o.value).epsilon(1e-12));
    CHECK(branch[i] == o.branch);
  }
}

TEST_CASE("taped surface normals match the plain spatial gradient direction") {
  auto params = init_parameters(tiny_config(), 13);
  Matrix3X pts = random_points(16, 14);
  Eigen::RowVectorXd z_plain = encode(pts, params);

  ad::Tape tape;
  TapedModel model(tape, params);
  ad::Ref z = model.encode(pts);
  ad::Ref x = tape.constant(pts);
  std::vector<char> valid;
  ad::Ref normals = model.surface_normals(x, z, &valid);
  for (int i = 0; i < 16; ++i) {
    if (!valid[i]) continue;
    Eigen::Vector3d g = spatial_gradient(pts.row(i).transpose(), z_plain, params);
    Eigen::Vector3d n = tape.val(normals).row(i).transpose();
    CHECK((n - g.normalized()).norm() < 1e-10);
  }
}
