#pragma once

#include <filesystem>
#include <vector>

#include "icorr/marching_cubes.hpp"
#include "icorr/network.hpp"

namespace icorr {

struct CorrespondenceResult {
  int source_index;   // into S_A
  int target_index;   // into S_B
  double confidence;  // in [0, 1]
  bool exists;        // confidence >= tau
};

// C = 1 - ||o_p - o_q|| / sqrt(k). PEVs live in (0,1)^k so C is in [0,1].
double confidence(const Eigen::RowVectorXd& o_p, const Eigen::RowVectorXd& o_q);

// Dense correspondence from every point of a to its match in b: map b's
// PEVs through g with a's code, then nearest-neighbor in that set.
std::vector<CorrespondenceResult> correspond_dense(const Matrix3X& a, const Matrix3X& b,
                                                   const ParameterStore& params, double tau = 0.2);

// Per-point 1-based argmax branch labels.
std::vector<int> segment(const Matrix3X& points, const ParameterStore& params);

// S'_a = g(f(b, z_b), z_a) and S'_b = g(f(a, z_a), z_b); each output is
// index-aligned with the set whose PEVs it decodes.
std::pair<Matrix3X, Matrix3X> cross_reconstruct(const Matrix3X& a, const Matrix3X& b,
                                                const ParameterStore& params);

// Occupancy field of a shape code, for marching cubes and field probes.
ScalarField occupancy_field(const Eigen::RowVectorXd& z, const ParameterStore& params);

// Iso-surface of the occupancy field at 0.5 on [-0.5,0.5]^3. `warning` is
// set when the surface is empty.
TriangleMesh reconstruct_surface(const Eigen::RowVectorXd& z, const ParameterStore& params,
                                 int grid_resolution, bool* empty_warning = nullptr);
TriangleMesh reconstruct_surface(const ScalarField& field, int grid_resolution,
                                 bool* empty_warning = nullptr);

// g(o_source, alpha * z_a + (1 - alpha) * z_b), index-aligned with o_source.
Matrix3X interpolate_latent(const Eigen::RowVectorXd& z_a, const Eigen::RowVectorXd& z_b,
                            double alpha, const Eigen::MatrixXd& o_source,
                            const ParameterStore& params);

// Linear point-set morph: frame t = a + (t/n) * (b - a), t = 0..n.
std::vector<Matrix3X> interpolate_offsets(const Matrix3X& a, const Matrix3X& b, int n);

// Confidence of one source point against every point of the target set.
Eigen::VectorXd confidence_map(const Matrix3X& a, int query_index, const Matrix3X& b,
                               const ParameterStore& params);

// One JSON object per correspondence: source_index, target_index,
// confidence, exists.
void export_correspondences_jsonl(const std::vector<CorrespondenceResult>& results,
                                  const std::filesystem::path& path);

}  // namespace icorr
