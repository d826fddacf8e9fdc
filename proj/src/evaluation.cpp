#include "icorr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "icorr/container.hpp"
#include "icorr/inference.hpp"
#include "icorr/losses.hpp"

namespace icorr {

AccuracyCurve accuracy_curve(const Matrix3X& predicted, const Matrix3X& ground_truth,
                             const std::vector<double>& thresholds) {
  if (predicted.rows() != ground_truth.rows())
    throw ConfigError("accuracy_curve: prediction/ground-truth length mismatch");
  if (predicted.rows() == 0) throw ConfigError("accuracy_curve: empty input");
  Eigen::VectorXd err = (predicted - ground_truth).rowwise().norm();
  AccuracyCurve curve;
  curve.thresholds = thresholds;
  std::sort(curve.thresholds.begin(), curve.thresholds.end());
  curve.fractions.reserve(curve.thresholds.size());
  for (double t : curve.thresholds) {
    int below = 0;
    for (Eigen::Index i = 0; i < err.size(); ++i)
      if (err(i) < t) ++below;
    curve.fractions.push_back(static_cast<double>(below) / err.size());
  }
  // Trapezoid over [0, max threshold]; the curve starts at (0, 0) since no
  // error is below a zero threshold.
  double prev_t = 0.0, prev_f = 0.0;
  for (size_t i = 0; i < curve.thresholds.size(); ++i) {
    curve.auc += 0.5 * (prev_f + curve.fractions[i]) * (curve.thresholds[i] - prev_t);
    prev_t = curve.thresholds[i];
    prev_f = curve.fractions[i];
  }
  return curve;
}

std::vector<double> default_accuracy_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 25; ++i) t.push_back(i * 0.01);
  return t;
}

namespace {

double iou(const std::vector<char>& a, const std::vector<char>& b) {
  int inter = 0, uni = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    inter += (a[i] && b[i]);
    uni += (a[i] || b[i]);
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
}

}  // namespace

double modified_iou_shape(const std::vector<int>& pred_labels, const std::vector<int>& gt_labels,
                          const std::vector<std::vector<int>>& gt_combinations) {
  if (pred_labels.size() != gt_labels.size())
    throw ConfigError("modified_iou: label arrays differ in length");
  if (pred_labels.empty()) throw ConfigError("modified_iou: empty labels");
  std::set<int> branches(pred_labels.begin(), pred_labels.end());
  std::set<int> present(gt_labels.begin(), gt_labels.end());

  // Per-branch membership masks.
  std::map<int, std::vector<char>> branch_mask;
  for (int b : branches) {
    std::vector<char> m(pred_labels.size());
    for (size_t i = 0; i < pred_labels.size(); ++i) m[i] = (pred_labels[i] == b);
    branch_mask[b] = std::move(m);
  }
  // Per-combination masks, restricted to parts present on this shape.
  auto combo_mask = [&](const std::vector<int>& combo) {
    std::vector<char> m(gt_labels.size(), 0);
    for (size_t i = 0; i < gt_labels.size(); ++i)
      for (int p : combo)
        if (gt_labels[i] == p) m[i] = 1;
    return m;
  };

  // A branch's score is its best IoU over parts and allowed combinations;
  // each present base part is scored by the best branch covering it.
  double total = 0;
  int count = 0;
  for (int part : present) {
    double best = 0;
    for (const auto& [b, bm] : branch_mask) {
      for (const auto& combo : gt_combinations) {
        if (std::find(combo.begin(), combo.end(), part) == combo.end()) continue;
        bool all_present = true;
        for (int p : combo)
          if (present.find(p) == present.end()) all_present = false;
        if (!all_present) continue;
        best = std::max(best, iou(bm, combo_mask(combo)));
      }
    }
    total += best;
    ++count;
  }
  return count == 0 ? 0.0 : 100.0 * total / count;
}

double modified_iou(const std::vector<std::vector<int>>& pred_labels,
                    const std::vector<std::vector<int>>& gt_labels,
                    const std::vector<std::vector<int>>& gt_combinations) {
  if (pred_labels.size() != gt_labels.size())
    throw ConfigError("modified_iou: shape counts differ");
  if (pred_labels.empty()) throw ConfigError("modified_iou: empty collection");
  double total = 0;
  for (size_t i = 0; i < pred_labels.size(); ++i)
    total += modified_iou_shape(pred_labels[i], gt_labels[i], gt_combinations);
  return total / pred_labels.size();
}

RocCurve nonexistence_roc(const std::vector<double>& confidences,
                          const std::vector<bool>& exists_gt) {
  if (confidences.size() != exists_gt.size())
    throw ConfigError("nonexistence_roc: array length mismatch");
  int pos = 0, neg = 0;  // positive = non-existent
  for (bool e : exists_gt) (e ? neg : pos)++;
  if (pos == 0 || neg == 0)
    throw DataError("nonexistence_roc: ground truth contains a single class");

  // Sort by confidence ascending: predicting "non-existent" below a moving
  // threshold sweeps the operating points.
  std::vector<size_t> order(confidences.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return confidences[a] < confidences[b]; });

  RocCurve roc;
  roc.fpr.push_back(0);
  roc.tpr.push_back(0);
  int tp = 0, fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    double c = confidences[order[i]];
    while (i < order.size() && confidences[order[i]] == c) {
      if (exists_gt[order[i]])
        ++fp;
      else
        ++tp;
      ++i;
    }
    roc.fpr.push_back(static_cast<double>(fp) / neg);
    roc.tpr.push_back(static_cast<double>(tp) / pos);
  }
  for (size_t j = 1; j < roc.fpr.size(); ++j)
    roc.auc += 0.5 * (roc.tpr[j] + roc.tpr[j - 1]) * (roc.fpr[j] - roc.fpr[j - 1]);
  return roc;
}

MeanStd onehot_cosine_stats(const Eigen::MatrixXd& pevs) {
  if (pevs.rows() == 0) throw ConfigError("onehot_cosine_stats: empty PEV collection");
  Eigen::VectorXd cs(pevs.rows());
  for (Eigen::Index i = 0; i < pevs.rows(); ++i) {
    Eigen::Index arg;
    pevs.row(i).maxCoeff(&arg);
    cs(i) = pevs(i, arg) / pevs.row(i).norm();
  }
  MeanStd out;
  out.mean = cs.mean();
  out.std = pevs.rows() > 1 ? std::sqrt((cs.array() - out.mean).square().sum() / (cs.size() - 1))
                            : 0.0;
  return out;
}

ReconstructionChamfer reconstruction_chamfer(const std::vector<Matrix3X>& shapes,
                                             const ParameterStore& params, int grid_resolution,
                                             int sample_count, uint64_t seed) {
  ReconstructionChamfer out;
  std::vector<double> cds;
  Rng master(seed);
  for (size_t s = 0; s < shapes.size(); ++s) {
    Eigen::RowVectorXd z = encode(shapes[s], params);
    bool empty = false;
    TriangleMesh mesh = reconstruct_surface(z, params, grid_resolution, &empty);
    if (empty) {
      ++out.skipped_empty;
      continue;
    }
    PointSet rec = sample_surface_points(mesh, sample_count, master.fork(s).next_u64());
    // Mean-aggregated symmetric CD keeps the value comparable across sizes.
    Eigen::MatrixXd d2(rec.points.rows(), shapes[s].rows());
    for (Eigen::Index i = 0; i < rec.points.rows(); ++i)
      d2.row(i) = (shapes[s].rowwise() - rec.points.row(i)).rowwise().squaredNorm().transpose();
    double cd = d2.rowwise().minCoeff().mean() + d2.colwise().minCoeff().mean();
    cds.push_back(cd);
    ++out.evaluated;
  }
  if (!cds.empty()) {
    double mean = 0;
    for (double c : cds) mean += c;
    mean /= cds.size();
    double var = 0;
    for (double c : cds) var += (c - mean) * (c - mean);
    var = cds.size() > 1 ? var / (cds.size() - 1) : 0.0;
    out.scaled.mean = mean * 1e3;
    out.scaled.std = std::sqrt(var) * 1e3;
  }
  return out;
}

void export_pevs(const Matrix3X& points, const ParameterStore& params,
                 const std::filesystem::path& path) {
  std::filesystem::create_directories(path);
  Eigen::RowVectorXd z = encode(points, params);
  Eigen::MatrixXd pevs = part_embedding(points, z, params);
  std::vector<int> labels = segment(points, params);
  write_blob(path / "pevs.bin", Blob::from_matrix(pevs));
  std::vector<int32_t> l32(labels.begin(), labels.end());
  write_blob(path / "labels.bin", Blob::from_vector_i32(l32));
}

void write_curve_csv(const std::vector<double>& x, const std::vector<double>& y,
                     const std::filesystem::path& path, const std::string& header) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << header << "\n";
  out.precision(17);
  for (size_t i = 0; i < x.size() && i < y.size(); ++i) out << x[i] << "," << y[i] << "\n";
}

}  // namespace icorr
