#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "icorr/geometry.hpp"
#include "icorr/tape.hpp"

namespace icorr {

struct NetworkConfig {
  int d = 256;  // shape code dimension
  int k = 12;   // part embedding dimension
  std::vector<int> encoder_widths = {64, 128, 256};  // per-point MLP
  int encoder_post_width = 256;                      // hidden layer after the pool
  std::vector<int> f_hidden = {512, 512};            // f has 3 FC layers total
  int g_layers = 8;                                  // FC layers in g (7 hidden + output)
  int g_width = 256;
  double leaky_slope = 0.01;

  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

// Named weight/bias arrays for E, f, g. Weights are stored (in x out);
// biases are 1 x out rows.
struct ParameterStore {
  NetworkConfig config;
  uint64_t seed = 0;
  std::string stage_tag = "init";
  std::map<std::string, Eigen::MatrixXd> arrays;

  bool operator==(const ParameterStore&) const = default;
};

// Deterministic fan-in-scaled uniform init, zero biases.
ParameterStore init_parameters(const NetworkConfig& config, uint64_t seed);

// ---- plain (value-only) forward passes ----

// PointNet-style encoder: shared per-point MLP, elementwise max over
// points, then an MLP head down to d dims.
Eigen::RowVectorXd encode(const Matrix3X& points, const ParameterStore& params);

// Branched implicit function f over a batch of query points. Returns N x k
// part embedding vectors, all entries strictly in (0, 1).
Eigen::MatrixXd part_embedding(const Matrix3X& x, const Eigen::RowVectorXd& z,
                               const ParameterStore& params);

struct OccupancyValue {
  double value;  // max element of the PEV
  int branch;    // 1-based argmax branch, ties to the lowest index
};
OccupancyValue occupancy(const Eigen::Vector3d& x, const Eigen::RowVectorXd& z,
                         const ParameterStore& params);

// Inverse function g over a batch of PEVs. Returns N x 3 points, each
// coordinate strictly in (-1, 1).
Matrix3X inverse_map(const Eigen::MatrixXd& pev, const Eigen::RowVectorXd& z,
                     const ParameterStore& params);

// Exact derivative of the max-pooled occupancy with respect to x, taken
// through the argmax branch (ties to the lowest index).
Eigen::Vector3d spatial_gradient(const Eigen::Vector3d& x, const Eigen::RowVectorXd& z,
                                 const ParameterStore& params);

// Checkpoint container: JSON manifest + binary blobs, same format family
// as datasets. Bit-exact round trip.
void save_checkpoint(const ParameterStore& params, const std::filesystem::path& dir,
                     const std::map<std::string, Eigen::MatrixXd>* optimizer_state = nullptr,
                     int64_t iteration = 0);
ParameterStore load_checkpoint(const std::filesystem::path& dir,
                               std::map<std::string, Eigen::MatrixXd>* optimizer_state = nullptr,
                               int64_t* iteration = nullptr);

// ---- taped forward passes (training) ----

// Binds a ParameterStore's arrays as tape leaves and mirrors the plain
// forward passes as differentiable graphs.
class TapedModel {
 public:
  TapedModel(ad::Tape& tape, const ParameterStore& params);

  ad::Ref encode(const Matrix3X& points);                // 1 x d
  ad::Ref pev(ad::Ref x, ad::Ref z_row);                 // N x k; z broadcast
  ad::Ref occupancy_batch(ad::Ref x, ad::Ref z_row, std::vector<int>* branch = nullptr);  // N x 1
  ad::Ref inverse(ad::Ref pev, ad::Ref z_row);           // N x 3
  // Unit surface normals of the occupancy field at points x (an N x 3
  // node), exact through both x and the parameters. valid[i] is false
  // where the spatial gradient norm is below eps.
  ad::Ref surface_normals(ad::Ref x, ad::Ref z_row, std::vector<char>* valid, double eps = 1e-8);

  // Adds each leaf's gradient into grads (creating zero entries first).
  void accumulate_gradients(std::map<std::string, Eigen::MatrixXd>& grads) const;
  ad::Ref param(const std::string& name) const;

 private:
  ad::Tape& t_;
  const NetworkConfig cfg_;
  std::map<std::string, ad::Ref> p_;
};

}  // namespace icorr
