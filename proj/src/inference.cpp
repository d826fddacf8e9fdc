#include "icorr/inference.hpp"

#include <cmath>
#include <fstream>

#include "icorr/losses.hpp"
#include "json.hpp"

namespace icorr {

double confidence(const Eigen::RowVectorXd& o_p, const Eigen::RowVectorXd& o_q) {
  if (o_p.size() != o_q.size())
    throw ConfigError("confidence: PEV dimension mismatch (" + std::to_string(o_p.size()) + " vs " +
                      std::to_string(o_q.size()) + ")");
  double c = 1.0 - (o_p - o_q).norm() / std::sqrt(static_cast<double>(o_p.size()));
  return std::min(1.0, std::max(0.0, c));
}

std::vector<CorrespondenceResult> correspond_dense(const Matrix3X& a, const Matrix3X& b,
                                                   const ParameterStore& params, double tau) {
  if (a.rows() == 0 || b.rows() == 0) throw ConfigError("correspond_dense: empty point set");
  if (tau < 0.0 || tau > 1.0) throw ConfigError("correspond_dense: tau must lie in [0,1]");
  Eigen::RowVectorXd za = encode(a, params);
  Eigen::RowVectorXd zb = encode(b, params);
  Eigen::MatrixXd oa = part_embedding(a, za, params);
  Eigen::MatrixXd ob = part_embedding(b, zb, params);
  Matrix3X rec_a = inverse_map(ob, za, params);  // indexed like b
  std::vector<int> nn = nearest_indices(a, rec_a);
  std::vector<CorrespondenceResult> out(a.rows());
  parallel_for(a.rows(), [&](int64_t i) {
    int j = nn[i];
    double c = confidence(oa.row(i), ob.row(j));
    out[i] = {static_cast<int>(i), j, c, c >= tau};
  });
  return out;
}

std::vector<int> segment(const Matrix3X& points, const ParameterStore& params) {
  Eigen::RowVectorXd z = encode(points, params);
  Eigen::MatrixXd pev = part_embedding(points, z, params);
  std::vector<int> labels(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < pev.cols(); ++j)
      if (pev(i, j) > pev(i, best)) best = j;
    labels[i] = best + 1;
  }
  return labels;
}

std::pair<Matrix3X, Matrix3X> cross_reconstruct(const Matrix3X& a, const Matrix3X& b,
                                                const ParameterStore& params) {
  Eigen::RowVectorXd za = encode(a, params);
  Eigen::RowVectorXd zb = encode(b, params);
  Eigen::MatrixXd oa = part_embedding(a, za, params);
  Eigen::MatrixXd ob = part_embedding(b, zb, params);
  return {inverse_map(ob, za, params), inverse_map(oa, zb, params)};
}

ScalarField occupancy_field(const Eigen::RowVectorXd& z, const ParameterStore& params) {
  Eigen::RowVectorXd zc = z;
  ParameterStore p = params;
  return [zc, p](const Eigen::Vector3d& x) { return occupancy(x, zc, p).value; };
}

TriangleMesh reconstruct_surface(const ScalarField& field, int grid_resolution,
                                 bool* empty_warning) {
  TriangleMesh mesh = marching_cubes(field, grid_resolution, 0.5);
  if (empty_warning != nullptr) *empty_warning = mesh.faces.rows() == 0;
  return mesh;
}

TriangleMesh reconstruct_surface(const Eigen::RowVectorXd& z, const ParameterStore& params,
                                 int grid_resolution, bool* empty_warning) {
  return reconstruct_surface(occupancy_field(z, params), grid_resolution, empty_warning);
}

Matrix3X interpolate_latent(const Eigen::RowVectorXd& z_a, const Eigen::RowVectorXd& z_b,
                            double alpha, const Eigen::MatrixXd& o_source,
                            const ParameterStore& params) {
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("interpolate_latent: alpha must lie in [0,1]");
  Eigen::RowVectorXd z = alpha * z_a + (1.0 - alpha) * z_b;
  return inverse_map(o_source, z, params);
}

std::vector<Matrix3X> interpolate_offsets(const Matrix3X& a, const Matrix3X& b, int n) {
  if (a.rows() != b.rows()) throw ConfigError("interpolate_offsets: point sets must be index-aligned");
  if (n < 1) throw ConfigError("interpolate_offsets: frame count must be positive");
  std::vector<Matrix3X> frames;
  frames.reserve(n + 1);
  for (int t = 0; t <= n; ++t)
    frames.push_back(a + (static_cast<double>(t) / n) * (b - a));
  return frames;
}

Eigen::VectorXd confidence_map(const Matrix3X& a, int query_index, const Matrix3X& b,
                               const ParameterStore& params) {
  if (query_index < 0 || query_index >= a.rows())
    throw ConfigError("confidence_map: query index out of range");
  Eigen::RowVectorXd za = encode(a, params);
  Eigen::RowVectorXd zb = encode(b, params);
  Eigen::MatrixXd oa = part_embedding(a, za, params);
  Eigen::MatrixXd ob = part_embedding(b, zb, params);
  Eigen::VectorXd out(b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) out(j) = confidence(oa.row(query_index), ob.row(j));
  return out;
}

void export_correspondences_jsonl(const std::vector<CorrespondenceResult>& results,
                                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& r : results) {
    nlohmann::json j = {{"source_index", r.source_index},
                        {"target_index", r.target_index},
                        {"confidence", r.confidence},
                        {"exists", r.exists}};
    out << j.dump() << "\n";
  }
}

}  // namespace icorr
