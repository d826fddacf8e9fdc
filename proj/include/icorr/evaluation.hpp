#pragma once

#include <filesystem>
#include <vector>

#include "icorr/network.hpp"

namespace icorr {

struct AccuracyCurve {
  std::vector<double> thresholds;  // ascending
  std::vector<double> fractions;   // nondecreasing, in [0,1]
  double auc = 0;                  // trapezoid over [0, max threshold]
};

struct RocCurve {
  std::vector<double> fpr;  // from (0,0) to (1,1)
  std::vector<double> tpr;
  double auc = 0;
};

struct MeanStd {
  double mean = 0;
  double std = 0;
};

// Fraction of index-aligned pairs with ||pred - gt|| < t per threshold.
AccuracyCurve accuracy_curve(const Matrix3X& predicted, const Matrix3X& ground_truth,
                             const std::vector<double>& thresholds);

std::vector<double> default_accuracy_thresholds();  // 0 to 0.25 step 0.01

// Per ground-truth part (or allowed part combination), the best IoU over
// predicted branches; shape score = mean over base parts of their best
// branch IoU; returned scaled to [0, 100]. Labels: pred 1..k, gt part ids.
double modified_iou_shape(const std::vector<int>& pred_labels, const std::vector<int>& gt_labels,
                          const std::vector<std::vector<int>>& gt_combinations);
double modified_iou(const std::vector<std::vector<int>>& pred_labels,
                    const std::vector<std::vector<int>>& gt_labels,
                    const std::vector<std::vector<int>>& gt_combinations);

// Positive class = "no correspondence exists"; detected by low confidence.
RocCurve nonexistence_roc(const std::vector<double>& confidences,
                          const std::vector<bool>& exists_gt);

// Per-PEV cosine similarity against the one-hot at its argmax.
MeanStd onehot_cosine_stats(const Eigen::MatrixXd& pevs);

struct ReconstructionChamfer {
  MeanStd scaled;  // raw CD x 1e3
  int evaluated = 0;
  int skipped_empty = 0;
};

// Per shape: encode -> marching cubes -> area-uniform samples -> Chamfer
// against the shape's own points. Empty reconstructions are skipped.
ReconstructionChamfer reconstruction_chamfer(const std::vector<Matrix3X>& shapes,
                                             const ParameterStore& params, int grid_resolution,
                                             int sample_count = 2048, uint64_t seed = 0);

// Binary container with blobs "pevs" (n x k) and "labels" (segment output).
void export_pevs(const Matrix3X& points, const ParameterStore& params,
                 const std::filesystem::path& path);

void write_curve_csv(const std::vector<double>& x, const std::vector<double>& y,
                     const std::filesystem::path& path, const std::string& header);

}  // namespace icorr
