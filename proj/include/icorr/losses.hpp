#pragma once

#include <map>
#include <optional>
#include <vector>

#include "icorr/network.hpp"

namespace icorr {

struct LossWeights {
  double cd = 10.0;
  double emd = 1.0;
  double nor = 0.01;
  double smo = 0.1;

  void validate() const;
};

struct LossToggles {
  bool cd = true;
  bool emd = true;
  bool nor = true;
  bool smo = true;
};

// Per-iteration loss breakdown. Sums follow the loss definitions exactly;
// *_mean fields are per-point means for logging comparability.
struct LossReport {
  double occ = 0, sr = 0, cd = 0, emd = 0, nor = 0, smo = 0;
  double cr = 0, total = 0;
  double occ_mean = 0, sr_mean = 0;
  LossToggles active;
  int stage = 0;

  std::string to_json_line() const;
};

// ---- set distances and geometric terms (value side) ----

// Sum-aggregated squared Chamfer distance, both directions.
double chamfer_distance(const Matrix3X& a, const Matrix3X& b);

// Exact optimal-assignment EMD (unsquared norms) for sets up to
// max_exact points; larger sets are compared on a random common-size
// subsample per call.
double emd_distance(const Matrix3X& a, const Matrix3X& b, Rng* rng = nullptr, int max_exact = 512);

// Minimum-cost assignment on a square cost matrix; returns column for
// each row. O(n^3).
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

// d_nor(n, n') summed for both pairs: (1/n) sum (1 - n_i . n'_i) per pair.
double normal_loss(const Matrix3X& na, const Matrix3X& na_rec, const Matrix3X& nb,
                   const Matrix3X& nb_rec);

// m-nearest-neighbor index lists (excluding the point itself).
std::vector<std::vector<int>> knn_neighborhoods(const Matrix3X& points, int m);

// Sum over ordered neighbor pairs of || offset(a) - offset(a') ||, both
// directions. offsets_ab is S'_B - S_A indexed like S_A (and vice versa).
double smooth_loss(const Matrix3X& offsets_ab, const std::vector<std::vector<int>>& nbr_a,
                   const Matrix3X& offsets_ba, const std::vector<std::vector<int>>& nbr_b);

// Nearest-neighbor index in `pool` for each row of `queries`.
std::vector<int> nearest_indices(const Matrix3X& queries, const Matrix3X& pool);

// ---- batch evaluation (taped; used by training and the oracles) ----

struct ShapeBatchEntry {
  const Matrix3X* encoder_points;   // input to E
  const Matrix3X* surface_points;   // S_i for SR / CR
  const Matrix3X* surface_normals;  // targets for the normal loss (may be null)
  const Matrix3X* occ_points;       // sampled x_j (may be null when occ inactive)
  const Eigen::VectorXd* occ_labels;
};

struct LossBatch {
  std::vector<ShapeBatchEntry> shapes;
  std::vector<std::pair<int, int>> pairs;  // indices into shapes, stage 3 only
};

struct LossOptions {
  LossToggles toggles;
  int emd_max_exact = 512;
  int knn_m = 8;
  double normal_grad_eps = 1e-8;
};

// Evaluates the staged objective (stage 1: occ; stage 2: occ + sr;
// stage 3: occ + sr + cr) and optionally its exact parameter gradients.
LossReport total_loss(const LossBatch& batch, const ParameterStore& params,
                      const LossWeights& weights, int stage, const LossOptions& opts,
                      std::map<std::string, Eigen::MatrixXd>* gradients = nullptr,
                      Rng* rng = nullptr);

}  // namespace icorr
