// End-to-end acceptance run: one pass/fail line per criterion. Trains two
// desk-scale models (tables, chairs) and checks learned behavior plus the
// numeric and determinism properties of the toolkit.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "icorr/commands.hpp"
#include "icorr/container.hpp"
#include "icorr/evaluation.hpp"
#include "icorr/inference.hpp"
#include "icorr/trainer.hpp"
#include "json.hpp"

using namespace icorr;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int index, bool pass, const std::string& label, const std::string& detail = "") {
  std::cout << "criterion " << index << ": " << (pass ? "PASS" : "FAIL") << " - " << label;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << std::endl;
  if (!pass) ++g_failures;
}

template <typename F>
void criterion(int index, const std::string& label, F&& body) {
  try {
    std::string detail;
    bool pass = body(detail);
    report(index, pass, label, detail);
  } catch (const std::exception& e) {
    report(index, false, label, std::string("exception: ") + e.what());
  }
}

Matrix3X random_points(int n, uint64_t seed, double half = 0.5) {
  Rng rng(seed);
  Matrix3X pts(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) pts(i, j) = rng.uniform(-half, half);
  return pts;
}

double brute_chamfer(const Matrix3X& a, const Matrix3X& b) {
  double s = 0;
  for (int i = 0; i < a.rows(); ++i) {
    double best = 1e300;
    for (int j = 0; j < b.rows(); ++j) best = std::min(best, (a.row(i) - b.row(j)).squaredNorm());
    s += best;
  }
  for (int j = 0; j < b.rows(); ++j) {
    double best = 1e300;
    for (int i = 0; i < a.rows(); ++i) best = std::min(best, (a.row(i) - b.row(j)).squaredNorm());
    s += best;
  }
  return s;
}

double brute_emd(const Matrix3X& a, const Matrix3X& b) {
  std::vector<int> perm(a.rows());
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double s = 0;
    for (int i = 0; i < a.rows(); ++i) s += (a.row(i) - b.row(perm[i])).norm();
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Desk-scale architecture shared by both trained pipelines.
NetworkConfig desk_network() {
  NetworkConfig n;
  n.d = 64;
  n.k = 12;
  n.encoder_widths = {32, 64, 128};
  n.encoder_post_width = 128;
  n.f_hidden = {64, 64};
  n.g_layers = 3;
  n.g_width = 128;
  return n;
}

TrainingConfig desk_training(uint64_t seed) {
  TrainingConfig t;
  t.network = desk_network();
  t.learning_rate = 1e-3;
  t.shapes_per_batch = 4;
  t.pairs_per_batch = 2;
  t.stage1_iterations = 2000;
  t.stage2_iterations = 5000;
  t.stage3_iterations = 4000;
  t.occ_samples_per_step = 512;
  t.surface_points_per_step = 256;
  t.encoder_points_per_step = 256;
  t.checkpoint_every = 2000;
  t.seed = seed;
  return t;
}

struct Pipeline {
  Dataset corpus;
  TrainingConfig config;
  fs::path ckpt_dir;
  fs::path log_path;
  double stage1_seconds = 0;
  double train_seconds = 0;
};

// Stages 1-3 with a low-learning-rate polish leg at the end of stage 2;
// the coarse leg plateaus just above the self-reconstruction target.
Pipeline run_pipeline(const std::string& family, int count, uint64_t seed, const fs::path& dir) {
  Pipeline p;
  auto shapes = generate_synthetic_family(family, count, seed, 768);
  p.corpus = build_dataset_from_synthetic(shapes, family, 768, {16, 32, 64}, seed);
  p.config = desk_training(seed);
  p.ckpt_dir = dir;
  p.log_path = dir / "train_log.jsonl";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream log(p.log_path);
  auto t0 = std::chrono::steady_clock::now();
  TrainingState state = train_stage1(p.corpus, p.config, &log);
  p.stage1_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_state(state, p.ckpt_dir / "ckpt_stage1");
  state = train_stage2(p.corpus, p.config, std::move(state), &log);
  TrainingConfig polish = p.config;
  polish.learning_rate = 2e-4;
  polish.stage2_iterations += 2000;
  state = train_stage2(p.corpus, polish, std::move(state), &log);
  save_state(state, p.ckpt_dir / "ckpt_stage2");
  state = train_stage3(p.corpus, p.config, std::move(state), &log);
  save_state(state, p.ckpt_dir / "ckpt_stage3");
  p.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return p;
}

std::vector<nlohmann::json> read_log(const fs::path& path) {
  std::vector<nlohmann::json> lines;
  std::ifstream f(path);
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) lines.push_back(nlohmann::json::parse(line));
  return lines;
}

int find_gt_id(const Eigen::VectorXi& ids, int id) {
  for (int i = 0; i < ids.size(); ++i)
    if (ids(i) == id) return i;
  return -1;
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "icorr_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  // ---- criterion 1: loss oracles -------------------------------------
  criterion(1, "chamfer/emd match exhaustive brute force on 200 instances", [&](std::string& d) {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(1);
    double worst = 0;
    for (int t = 0; t < 200; ++t) {
      int na = 1 + static_cast<int>(rng.uniform_int(7));
      int nb = 1 + static_cast<int>(rng.uniform_int(7));
      Matrix3X a = random_points(na, rng.next_u64());
      Matrix3X b = random_points(nb, rng.next_u64());
      worst = std::max(worst, std::abs(chamfer_distance(a, b) - brute_chamfer(a, b)));
      Matrix3X c = random_points(na, rng.next_u64());
      worst = std::max(worst, std::abs(emd_distance(a, c) - brute_emd(a, c)));
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream os;
    os << "max dev " << worst << ", " << secs << " s";
    d = os.str();
    return worst < 1e-9 && secs < 10.0;
  });

  // ---- criterion 2: gradient correctness -----------------------------
  criterion(2, "spatial and loss gradients match finite differences", [&](std::string& d) {
    NetworkConfig tiny = desk_network();
    tiny.d = 8;
    tiny.k = 4;
    tiny.encoder_widths = {8, 16};
    tiny.encoder_post_width = 16;
    tiny.f_hidden = {16, 16};
    tiny.g_width = 16;
    auto params = init_parameters(tiny, 7);
    Matrix3X pts = random_points(800, 8);
    Eigen::RowVectorXd z = encode(pts, params);
    int checked = 0;
    double worst = 0;
    auto central = [&](const Eigen::Vector3d& x, double h) {
      Eigen::Vector3d fd;
      for (int a = 0; a < 3; ++a) {
        Eigen::Vector3d xp = x, xm = x;
        xp(a) += h;
        xm(a) -= h;
        fd(a) = (occupancy(xp, z, params).value - occupancy(xm, z, params).value) / (2 * h);
      }
      return fd;
    };
    for (int i = 0; i < pts.rows() && checked < 100; ++i) {
      Eigen::Vector3d x = pts.row(i).transpose();
      Eigen::MatrixXd pev = part_embedding(x.transpose(), z, params);
      std::vector<double> vals(pev.cols());
      for (int j = 0; j < pev.cols(); ++j) vals[j] = pev(0, j);
      std::sort(vals.begin(), vals.end());
      if (vals.back() - vals[vals.size() - 2] < 1e-4) continue;  // max-pool tie
      // The network is piecewise smooth; a finite difference that straddles a
      // LeakyReLU kink or a max-pool switch is not a valid oracle. Detect that
      // by requiring two step sizes to agree before trusting the estimate.
      Eigen::Vector3d fd = central(x, 1e-4), fd2 = central(x, 1e-5);
      if ((fd - fd2).norm() > 1e-6 + 1e-4 * fd.norm()) continue;
      Eigen::Vector3d g = spatial_gradient(x, z, params);
      worst = std::max(worst, (g - fd2).norm() / std::max(1e-6, fd2.norm()));
      ++checked;
    }
    bool spatial_ok = checked == 100 && worst < 1e-3;

    // Parameter gradients of the full staged objective on a toy batch.
    Matrix3X sa = random_points(6, 20), sb = random_points(6, 24);
    Matrix3X na = random_points(6, 21), nb = random_points(6, 25);
    for (int i = 0; i < 6; ++i) {
      na.row(i).normalize();
      nb.row(i).normalize();
    }
    Matrix3X oa = random_points(8, 22), ob = random_points(8, 26);
    Eigen::VectorXd la(8), lb(8);
    Rng lr(23);
    for (int i = 0; i < 8; ++i) {
      la(i) = lr.uniform() < 0.5 ? 0.0 : 1.0;
      lb(i) = lr.uniform() < 0.5 ? 0.0 : 1.0;
    }
    LossBatch batch;
    batch.shapes.push_back({&sa, &sa, &na, &oa, &la});
    batch.shapes.push_back({&sb, &sb, &nb, &ob, &lb});
    batch.pairs = {{0, 1}};
    LossWeights weights;
    LossOptions opts;
    opts.knn_m = 3;
    double worst_p = 0;
    for (int stage : {1, 2, 3}) {
      std::map<std::string, Eigen::MatrixXd> grads;
      Rng g1(40);
      total_loss(batch, params, weights, stage, opts, &grads, &g1);
      Rng prng(41);
      for (const std::string name : {"E.pt0.W", "f.0.W", "f.2.b", "g.0.W"}) {
        const Eigen::MatrixXd& g = grads.at(name);
        for (int probe = 0; probe < 2; ++probe) {
          int i = static_cast<int>(prng.uniform_int(g.rows()));
          int j = static_cast<int>(prng.uniform_int(g.cols()));
          double hh = 1e-6;
          ParameterStore pp = params, pm = params;
          pp.arrays[name](i, j) += hh;
          pm.arrays[name](i, j) -= hh;
          Rng ra(40), rb(40);
          double fp = total_loss(batch, pp, weights, stage, opts, nullptr, &ra).total;
          double fm = total_loss(batch, pm, weights, stage, opts, nullptr, &rb).total;
          double fd = (fp - fm) / (2 * hh);
          double denom = std::max({1e-6, std::abs(fd), std::abs(g(i, j))});
          worst_p = std::max(worst_p, std::abs(g(i, j) - fd) / denom);
        }
      }
    }
    std::ostringstream os;
    os << "spatial worst " << worst << ", param worst " << worst_p;
    d = os.str();
    return spatial_ok && worst_p < 1e-3;
  });

  // ---- trained pipelines ---------------------------------------------
  std::cout << "training table pipeline..." << std::endl;
  Pipeline table = run_pipeline("table", 20, 101, work / "table_ckpt");
  std::cout << "table training took " << table.train_seconds << " s" << std::endl;
  ParameterStore table_s1 = load_checkpoint(table.ckpt_dir / "ckpt_stage1");
  ParameterStore table_s2 = load_checkpoint(table.ckpt_dir / "ckpt_stage2");
  ParameterStore table_s3 = load_checkpoint(table.ckpt_dir / "ckpt_stage3");

  // ---- criterion 3: stage definitions --------------------------------
  criterion(3, "training stages activate exactly the documented loss terms", [&](std::string& d) {
    auto lines = read_log(table.log_path);
    bool ok = !lines.empty();
    for (const auto& j : lines) {
      int stage = j.at("stage").get<int>();
      double occ = j.at("occ"), sr = j.at("sr"), cr = j.at("cr");
      if (stage == 1) ok = ok && occ > 0 && sr == 0 && cr == 0;
      if (stage == 2) ok = ok && occ > 0 && sr > 0 && cr == 0;
      if (stage == 3) {
        double cd = j.at("cd"), emd = j.at("emd"), nor = j.at("nor"), smo = j.at("smo");
        ok = ok && sr > 0 && cd > 0 && emd > 0 && smo > 0;
        double expect = 10.0 * cd + 1.0 * emd + 0.01 * nor + 0.1 * smo;
        ok = ok && std::abs(cr - expect) <= 1e-9 * std::max(1.0, std::abs(expect));
      }
    }
    // Stage 1 leaves the inverse function untouched.
    ParameterStore init = init_parameters(table.config.network, table.config.seed);
    double g_moved = 0;
    for (const auto& [name, arr] : table_s1.arrays)
      if (name.rfind("g.", 0) == 0)
        g_moved = std::max(g_moved, (arr - init.arrays.at(name)).cwiseAbs().maxCoeff());
    d = "g drift after stage 1: " + std::to_string(g_moved);
    return ok && g_moved == 0.0;
  });

  // ---- criterion 4: occupancy learning -------------------------------
  criterion(4, "stage-1 occupancy accuracy >= 95% on held-out grid centers", [&](std::string& d) {
    int64_t correct = 0, total = 0;
    for (int s = 0; s < 5; ++s) {
      const auto& shape = table.corpus.shapes[s];
      Eigen::RowVectorXd z = encode(shape.surface.points, table_s1);
      // Cell centers of a fresh 64^3 voxelization carry the exact inside
      // label for these box-union meshes; none were training samples.
      VoxelGrid grid = voxelize(shape.mesh, 64);
      std::atomic<int64_t> corr{0};
      parallel_for(static_cast<int64_t>(64) * 64 * 64, [&](int64_t idx) {
        int i = static_cast<int>(idx / (64 * 64));
        int j = static_cast<int>((idx / 64) % 64);
        int k = static_cast<int>(idx % 64);
        bool pred = occupancy(grid.cell_center(i, j, k), z, table_s1).value > 0.5;
        if (pred == (grid.at(i, j, k) != 0)) ++corr;
      });
      correct += corr;
      total += static_cast<int64_t>(64) * 64 * 64;
    }
    double acc = static_cast<double>(correct) / total;
    std::ostringstream os;
    os << "accuracy " << acc << ", stage-1 time " << table.stage1_seconds << " s";
    d = os.str();
    return acc >= 0.95 && table.stage1_seconds < 900.0;
  });

  // ---- criterion 5: self-reconstruction ------------------------------
  criterion(5, "stage-2 self-reconstruction error < 0.02", [&](std::string& d) {
    double err_sum = 0;
    int64_t n = 0;
    for (const auto& shape : table.corpus.shapes) {
      const Matrix3X& pts = shape.surface.points;
      Eigen::RowVectorXd z = encode(pts, table_s2);
      Matrix3X rec = inverse_map(part_embedding(pts, z, table_s2), z, table_s2);
      err_sum += (rec - pts).rowwise().norm().sum();
      n += pts.rows();
    }
    double mean = err_sum / n;
    d = "mean error " + std::to_string(mean);
    return mean < 0.02;
  });

  std::cout << "training chair pipeline..." << std::endl;
  Pipeline chair = run_pipeline("chair", 30, 202, work / "chair_ckpt");
  std::cout << "chair training took " << chair.train_seconds << " s" << std::endl;
  ParameterStore chair_s3 = load_checkpoint(chair.ckpt_dir / "ckpt_stage3");

  // ---- criterion 6: correspondence at desk scale ---------------------
  criterion(6, "chair correspondence accuracy at 0.1 >= 80% over 20 pairs", [&](std::string& d) {
    Rng rng(601);
    int hit = 0, total = 0;
    for (int p = 0; p < 20; ++p) {
      int a = static_cast<int>(rng.uniform_int(chair.corpus.shapes.size()));
      int b = static_cast<int>(rng.uniform_int(chair.corpus.shapes.size() - 1));
      if (b >= a) ++b;
      const auto& sa = chair.corpus.shapes[a];
      const auto& sb = chair.corpus.shapes[b];
      auto res = correspond_dense(sa.gt_points.value(), sb.gt_points.value(), chair_s3);
      for (const auto& r : res) {
        int id = sa.gt_correspondence_ids.value()(r.source_index);
        int j = find_gt_id(sb.gt_correspondence_ids.value(), id);
        if (j < 0) continue;  // no counterpart on the target (shared parts only)
        double err =
            (sb.gt_points.value().row(r.target_index) - sb.gt_points.value().row(j)).norm();
        hit += err < 0.1;
        ++total;
      }
    }
    double acc = total ? static_cast<double>(hit) / total : 0.0;
    std::ostringstream os;
    os << "accuracy " << acc << " over " << total << " shared-part points, training "
       << chair.train_seconds << " s";
    d = os.str();
    return acc >= 0.80 && chair.train_seconds < 3600.0;
  });

  // ---- criterion 7: non-existence detection --------------------------
  criterion(7, "arm/no-arm non-existence ROC AUC >= 0.85", [&](std::string& d) {
    const int arm = chair_arm_part_id();
    std::vector<int> with_arms, without_arms;
    for (size_t i = 0; i < chair.corpus.shapes.size(); ++i) {
      const auto& parts = chair.corpus.shapes[i].present_parts;
      (std::find(parts.begin(), parts.end(), arm) != parts.end() ? with_arms : without_arms)
          .push_back(static_cast<int>(i));
    }
    if (with_arms.empty() || without_arms.empty()) {
      d = "corpus lacks one of the classes";
      return false;
    }
    Rng rng(701);
    std::vector<double> confidences;
    std::vector<bool> exists_gt;
    for (int p = 0; p < 50; ++p) {
      const auto& sa = chair.corpus.shapes[with_arms[rng.uniform_int(with_arms.size())]];
      const auto& sb = chair.corpus.shapes[without_arms[rng.uniform_int(without_arms.size())]];
      std::vector<int> arm_idx, other_idx;
      for (int i = 0; i < sa.gt_part_labels.value().size(); ++i)
        (sa.gt_part_labels.value()(i) == arm ? arm_idx : other_idx).push_back(i);
      auto res = correspond_dense(sa.gt_points.value(), sb.gt_points.value(), chair_s3);
      for (int q = 0; q < 5; ++q) {
        confidences.push_back(res[arm_idx[rng.uniform_int(arm_idx.size())]].confidence);
        exists_gt.push_back(false);  // arm points have no counterpart
        confidences.push_back(res[other_idx[rng.uniform_int(other_idx.size())]].confidence);
        exists_gt.push_back(true);
      }
    }
    RocCurve roc = nonexistence_roc(confidences, exists_gt);
    d = "AUC " + std::to_string(roc.auc);
    return roc.auc >= 0.85;
  });

  // ---- criterion 8: segmentation -------------------------------------
  criterion(8, "table modified IoU >= 85 after stage 3; ground truth scores 100", [&](std::string& d) {
    FamilyGroundTruth gt = family_ground_truth("table");
    std::vector<std::vector<int>> preds, gts;
    for (const auto& shape : table.corpus.shapes) {
      std::vector<int> labels = segment(shape.gt_points.value(), table_s3);
      std::vector<int> truth(shape.gt_part_labels.value().data(),
                             shape.gt_part_labels.value().data() +
                                 shape.gt_part_labels.value().size());
      preds.push_back(std::move(labels));
      gts.push_back(std::move(truth));
    }
    double iou = modified_iou(preds, gts, gt.combinations);
    double self_iou = modified_iou(gts, gts, gt.combinations);
    std::ostringstream os;
    os << "IoU " << iou << ", ground-truth self score " << self_iou;
    d = os.str();
    return iou >= 85.0 && self_iou == 100.0;
  });

  // ---- criterion 9: confidence invariants ----------------------------
  criterion(9, "confidence bounded on 1e5 pairs; verdicts monotone in tau", [&](std::string& d) {
    Rng rng(901);
    bool bounded = true;
    for (int t = 0; t < 100000; ++t) {
      Eigen::RowVectorXd p(12), q(12);
      for (int i = 0; i < 12; ++i) {
        p(i) = rng.uniform();
        q(i) = rng.uniform();
      }
      double c = confidence(p, q);
      bounded = bounded && c >= 0.0 && c <= 1.0;
    }
    const auto& sa = chair.corpus.shapes[0];
    const auto& sb = chair.corpus.shapes[1];
    std::vector<std::vector<CorrespondenceResult>> sweeps;
    for (double tau : {0.2, 0.5, 0.7})
      sweeps.push_back(
          correspond_dense(sa.surface.points, sb.surface.points, chair_s3, tau));
    bool monotone = true;
    for (size_t i = 0; i + 1 < sweeps.size(); ++i)
      for (size_t r = 0; r < sweeps[i].size(); ++r)
        if (sweeps[i + 1][r].exists && !sweeps[i][r].exists) monotone = false;
    d = bounded ? "bounded; monotone " + std::string(monotone ? "yes" : "no") : "bound violated";
    return bounded && monotone;
  });

  // ---- criterion 10: metric oracles ----------------------------------
  criterion(10, "ROC AUC equals Mann-Whitney; accuracy curve matches a loop oracle",
            [&](std::string& d) {
    Rng rng(1001);
    double worst = 0;
    int done = 0;
    while (done < 100) {
      int n = 10 + static_cast<int>(rng.uniform_int(40));
      std::vector<double> conf(n);
      std::vector<bool> exists(n);
      for (int i = 0; i < n; ++i) {
        conf[i] = std::floor(rng.uniform() * 16) / 16.0;
        exists[i] = rng.uniform() < 0.5;
      }
      int pos = static_cast<int>(std::count(exists.begin(), exists.end(), false));
      if (pos == 0 || pos == n) continue;
      double wins = 0;
      int pairs = 0;
      for (int i = 0; i < n; ++i) {
        if (exists[i]) continue;
        for (int j = 0; j < n; ++j) {
          if (!exists[j]) continue;
          wins += conf[i] < conf[j] ? 1.0 : (conf[i] == conf[j] ? 0.5 : 0.0);
          ++pairs;
        }
      }
      worst = std::max(worst, std::abs(nonexistence_roc(conf, exists).auc - wins / pairs));
      ++done;
    }
    Matrix3X pred = random_points(150, 1002), gt = random_points(150, 1003);
    auto thresholds = default_accuracy_thresholds();
    AccuracyCurve curve = accuracy_curve(pred, gt, thresholds);
    bool curve_ok = true;
    for (size_t t = 0; t < thresholds.size(); ++t) {
      int below = 0;
      for (int i = 0; i < 150; ++i)
        if ((pred.row(i) - gt.row(i)).norm() < thresholds[t]) ++below;
      curve_ok = curve_ok && curve.fractions[t] == below / 150.0;
    }
    d = "ROC max dev " + std::to_string(worst);
    return worst < 1e-12 && curve_ok;
  });

  // ---- criterion 11: determinism -------------------------------------
  criterion(11, "identical single-threaded training runs are bit-identical", [&](std::string& d) {
    setenv("IMPLICIT_CORR_THREADS", "1", 1);
    auto make_config = [&](const fs::path& dir) {
      RunConfig cfg;
      cfg.corpus.family = "table";
      cfg.corpus.count = 3;
      cfg.corpus.surface_points = 96;
      cfg.corpus.seed = 9;
      cfg.training = desk_training(9);
      cfg.training.network.d = 8;
      cfg.training.network.k = 4;
      cfg.training.network.encoder_widths = {8, 16};
      cfg.training.network.encoder_post_width = 16;
      cfg.training.network.f_hidden = {16, 16};
      cfg.training.network.g_width = 16;
      cfg.training.stage1_iterations = 5;
      cfg.training.stage2_iterations = 5;
      cfg.training.stage3_iterations = 5;
      cfg.training.occ_samples_per_step = 64;
      cfg.training.surface_points_per_step = 32;
      cfg.training.encoder_points_per_step = 48;
      cfg.paths.dataset_dir = dir / "dataset";
      cfg.paths.checkpoint_dir = dir / "ckpt";
      cfg.paths.output_dir = dir / "out";
      return cfg;
    };
    auto slurp = [](const fs::path& p) {
      std::ifstream f(p, std::ios::binary);
      return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    };
    CommandOverrides o;
    std::vector<fs::path> dirs = {work / "det_a", work / "det_b"};
    for (const auto& dir : dirs) {
      RunConfig cfg = make_config(dir);
      cmd_sample(cfg);
      cmd_train(cfg, o);
    }
    bool same = true;
    for (const auto& entry : fs::directory_iterator(dirs[0] / "ckpt" / "ckpt_stage3")) {
      auto name = entry.path().filename();
      same = same && slurp(entry.path()) == slurp(dirs[1] / "ckpt" / "ckpt_stage3" / name);
    }
    bool logs_same =
        slurp(dirs[0] / "ckpt" / "train_log.jsonl") == slurp(dirs[1] / "ckpt" / "train_log.jsonl");
    unsetenv("IMPLICIT_CORR_THREADS");
    d = std::string("checkpoints ") + (same ? "identical" : "differ") + ", logs " +
        (logs_same ? "identical" : "differ");
    return same && logs_same;
  });

  std::cout << (g_failures == 0 ? "acceptance: all criteria passed"
                                : "acceptance: " + std::to_string(g_failures) + " criteria failed")
            << std::endl;
  fs::remove_all(work);
  return g_failures == 0 ? 0 : 1;
}
