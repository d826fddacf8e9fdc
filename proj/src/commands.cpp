#include "icorr/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>

#include "icorr/container.hpp"
#include "icorr/dataset.hpp"
#include "icorr/evaluation.hpp"
#include "icorr/inference.hpp"
#include "icorr/losses.hpp"
#include "icorr/synthetic.hpp"
#include "json.hpp"

namespace icorr {

namespace {

Dataset load_corpus(const RunConfig& config) {
  if (!std::filesystem::exists(config.paths.dataset_dir / "manifest.json"))
    throw DataError("no dataset at " + config.paths.dataset_dir.string() +
                    " (run the sample command first)");
  return load_dataset(config.paths.dataset_dir);
}

ParameterStore load_model(const RunConfig& config, const CommandOverrides& o) {
  std::filesystem::path ckpt =
      o.from ? std::filesystem::path(*o.from) : config.paths.checkpoint_dir / "ckpt_stage3";
  if (!std::filesystem::exists(ckpt / "manifest.json"))
    throw DataError("no checkpoint at " + ckpt.string());
  ParameterStore params = load_checkpoint(ckpt);
  if (params.stage_tag == "stage1" || params.stage_tag == "init")
    std::cerr << "warning: checkpoint " << ckpt.string() << " is " << params.stage_tag
              << "; the inverse function is untrained\n";
  return params;
}

// Ground-truth match of each source point in the target, by canonical id.
// Sources without a counterpart get index -1.
std::vector<int> gt_match(const ShapeRecord& a, const ShapeRecord& b) {
  std::map<int, int> id_to_b;
  for (Eigen::Index j = 0; j < b.gt_correspondence_ids->size(); ++j)
    id_to_b[(*b.gt_correspondence_ids)(j)] = static_cast<int>(j);
  std::vector<int> match(a.gt_correspondence_ids->size(), -1);
  for (Eigen::Index i = 0; i < a.gt_correspondence_ids->size(); ++i) {
    auto it = id_to_b.find((*a.gt_correspondence_ids)(i));
    if (it != id_to_b.end()) match[i] = it->second;
  }
  return match;
}

}  // namespace

void apply_overrides(RunConfig& config, const CommandOverrides& o) {
  if (o.seed) {
    config.corpus.seed = *o.seed;
    config.training.seed = *o.seed;
  }
  for (const std::string& term : o.ablate) {
    if (term == "cd")
      config.training.toggles.cd = false;
    else if (term == "emd")
      config.training.toggles.emd = false;
    else if (term == "nor")
      config.training.toggles.nor = false;
    else if (term == "smo")
      config.training.toggles.smo = false;
    else
      throw ConfigError("unknown ablation term '" + term + "' (expected cd, emd, nor, smo)");
  }
  if (o.tau) config.inference.tau = *o.tau;
}

void cmd_sample(const RunConfig& config) {
  config.validate();
  Dataset ds;
  if (!config.corpus.family.empty()) {
    auto shapes = generate_synthetic_family(config.corpus.family, config.corpus.count,
                                            config.corpus.seed, config.corpus.surface_points);
    ds = build_dataset_from_synthetic(shapes, config.corpus.family, config.corpus.surface_points,
                                      config.corpus.resolutions, config.corpus.seed);
  } else {
    std::vector<TriangleMesh> meshes;
    std::vector<std::string> ids;
    std::vector<std::filesystem::path> files;
    if (!std::filesystem::is_directory(config.corpus.mesh_dir))
      throw ConfigError("corpus: mesh_dir " + config.corpus.mesh_dir + " is not a directory");
    for (const auto& e : std::filesystem::directory_iterator(config.corpus.mesh_dir)) {
      auto ext = e.path().extension().string();
      if (ext == ".obj" || ext == ".ply") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
      throw ConfigError("corpus: no .obj or .ply files in " + config.corpus.mesh_dir);
    for (const auto& f : files) {
      meshes.push_back(normalize_shape(load_mesh(f)));
      ids.push_back(f.stem().string());
    }
    ds = build_dataset_from_meshes(meshes, ids, config.corpus.surface_points,
                                   config.corpus.resolutions, config.corpus.seed);
  }
  write_dataset(ds, config.paths.dataset_dir);
  std::cout << "wrote " << ds.shapes.size() << " shapes to " << config.paths.dataset_dir.string()
            << "\n";
}

void cmd_train(const RunConfig& config, const CommandOverrides& o) {
  config.validate();
  Dataset ds = load_corpus(config);
  std::filesystem::create_directories(config.paths.checkpoint_dir);
  std::ofstream log(config.paths.checkpoint_dir / "train_log.jsonl", std::ios::app);
  if (!log) throw IoError("cannot open training log for writing");

  if (o.stage) {
    int stage = *o.stage;
    if (stage < 1 || stage > 3) throw ConfigError("--stage must be 1, 2, or 3");
    TrainingState state;
    if (o.from) {
      state = load_state(*o.from);
    } else if (stage != 1) {
      throw ConfigError("--stage " + std::to_string(stage) + " needs --from CKPT");
    }
    if (stage == 1)
      state = train_stage1(ds, config.training, &log, o.from ? &state : nullptr,
                           &config.paths.checkpoint_dir);
    else if (stage == 2)
      state = train_stage2(ds, config.training, std::move(state), &log,
                           &config.paths.checkpoint_dir);
    else
      state = train_stage3(ds, config.training, std::move(state), &log,
                           &config.paths.checkpoint_dir);
    auto out = config.paths.checkpoint_dir / ("ckpt_stage" + std::to_string(stage));
    save_state(state, out);
    std::cout << "wrote " << out.string() << "\n";
    return;
  }
  auto final_ckpt = run_training(ds, config.training, config.paths.checkpoint_dir, &log);
  std::cout << "wrote " << final_ckpt.string() << "\n";
}

void cmd_infer(const RunConfig& config, const CommandOverrides& o, int source, int target) {
  config.validate();
  Dataset ds = load_corpus(config);
  if (source < 0 || source >= static_cast<int>(ds.shapes.size()) || target < 0 ||
      target >= static_cast<int>(ds.shapes.size()))
    throw ConfigError("infer: shape index out of range (corpus has " +
                      std::to_string(ds.shapes.size()) + " shapes)");
  ParameterStore params = load_model(config, o);
  std::filesystem::create_directories(config.paths.output_dir);
  const Matrix3X& a = ds.shapes[source].surface.points;
  const Matrix3X& b = ds.shapes[target].surface.points;

  auto results = correspond_dense(a, b, params, config.inference.tau);
  export_correspondences_jsonl(results, config.paths.output_dir / "correspondences.jsonl");

  std::vector<int> labels = segment(a, params);
  {
    std::ofstream seg(config.paths.output_dir / "segmentation.csv");
    seg << "point_index,branch\n";
    for (size_t i = 0; i < labels.size(); ++i) seg << i << "," << labels[i] << "\n";
  }

  if (o.query_point) {
    Eigen::VectorXd cmap = confidence_map(a, *o.query_point, b, params);
    write_blob(config.paths.output_dir / "confidence_map.bin",
               Blob::from_matrix(Eigen::MatrixXd(cmap)));
  }

  auto [rec_a, rec_b] = cross_reconstruct(a, b, params);
  auto save_points_obj = [](const Matrix3X& pts, const std::filesystem::path& path) {
    std::ofstream out(path);
    out.precision(17);
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      out << "v " << pts(i, 0) << " " << pts(i, 1) << " " << pts(i, 2) << "\n";
  };
  save_points_obj(rec_a, config.paths.output_dir / "cross_reconstruction_source.obj");
  save_points_obj(rec_b, config.paths.output_dir / "cross_reconstruction_target.obj");

  if (o.frames) {
    auto frames = interpolate_offsets(b, rec_a, *o.frames);  // rec_a is indexed like b
    for (size_t t = 0; t < frames.size(); ++t)
      save_points_obj(frames[t],
                      config.paths.output_dir / ("frame_" + std::to_string(t) + ".obj"));
  }
  std::cout << "wrote inference outputs to " << config.paths.output_dir.string() << "\n";
}

void cmd_eval(const RunConfig& config, const CommandOverrides& o) {
  config.validate();
  Dataset ds = load_corpus(config);
  ParameterStore params = load_model(config, o);
  std::filesystem::create_directories(config.paths.output_dir);
  nlohmann::json report;
  bool has_gt = !ds.shapes.empty() && ds.shapes.front().has_ground_truth();
  Rng rng(config.training.seed ^ 0xe7a1ULL);

  if (has_gt) {
    // Random ordered shape pairs shared by the correspondence and
    // non-existence metrics.
    int pair_budget = std::min<int>(20, static_cast<int>(ds.shapes.size()) *
                                            (static_cast<int>(ds.shapes.size()) - 1));
    std::vector<Eigen::Vector3d> pred_pts, gt_pts;
    std::vector<double> confidences;
    std::vector<bool> exists_gt;
    for (int p = 0; p < pair_budget; ++p) {
      int ia = static_cast<int>(rng.uniform_int(ds.shapes.size()));
      int ib = static_cast<int>(rng.uniform_int(ds.shapes.size() - 1));
      if (ib >= ia) ++ib;
      const ShapeRecord& A = ds.shapes[ia];
      const ShapeRecord& B = ds.shapes[ib];
      auto results = correspond_dense(*A.gt_points, *B.gt_points, params, config.inference.tau);
      std::vector<int> match = gt_match(A, B);
      for (const auto& r : results) {
        bool counterpart = match[r.source_index] >= 0;
        confidences.push_back(r.confidence);
        exists_gt.push_back(counterpart);
        if (counterpart) {
          pred_pts.push_back(B.gt_points->row(r.target_index));
          gt_pts.push_back(B.gt_points->row(match[r.source_index]));
        }
      }
    }
    Matrix3X pred(pred_pts.size(), 3), gt(gt_pts.size(), 3);
    for (size_t i = 0; i < pred_pts.size(); ++i) {
      pred.row(i) = pred_pts[i];
      gt.row(i) = gt_pts[i];
    }
    AccuracyCurve curve = accuracy_curve(pred, gt, config.eval_thresholds());
    report["accuracy"] = {{"auc", curve.auc},
                          {"auc_range", {0.0, curve.thresholds.back()}},
                          {"thresholds", curve.thresholds},
                          {"fractions", curve.fractions}};
    write_curve_csv(curve.thresholds, curve.fractions,
                    config.paths.output_dir / "accuracy_curve.csv", "threshold,fraction");

    // Modified IoU over the collection.
    FamilyGroundTruth fgt = family_ground_truth(ds.family);
    std::vector<std::vector<int>> pred_labels, gt_labels;
    for (const auto& s : ds.shapes) {
      pred_labels.push_back(segment(*s.gt_points, params));
      std::vector<int> gl(s.gt_part_labels->size());
      for (Eigen::Index i = 0; i < s.gt_part_labels->size(); ++i) gl[i] = (*s.gt_part_labels)(i);
      gt_labels.push_back(std::move(gl));
    }
    report["modified_iou"] = modified_iou(pred_labels, gt_labels, fgt.combinations);

    bool both_classes = std::find(exists_gt.begin(), exists_gt.end(), false) != exists_gt.end() &&
                        std::find(exists_gt.begin(), exists_gt.end(), true) != exists_gt.end();
    if (both_classes) {
      RocCurve roc = nonexistence_roc(confidences, exists_gt);
      report["nonexistence"] = {{"auc", roc.auc}};
      write_curve_csv(roc.fpr, roc.tpr, config.paths.output_dir / "nonexistence_roc.csv",
                      "fpr,tpr");
    } else {
      report["nonexistence"] = {{"notice", "all sampled pairs share all parts; ROC skipped"}};
    }
  } else {
    report["notice"] =
        "corpus has no ground truth; accuracy, IoU, and non-existence blocks skipped";
  }

  std::vector<Matrix3X> shape_points;
  for (const auto& s : ds.shapes) shape_points.push_back(s.surface.points);
  ReconstructionChamfer cd =
      reconstruction_chamfer(shape_points, params, config.evaluation.grid_resolution,
                             config.evaluation.sample_count, config.training.seed);
  report["reconstruction_cd_x1e3"] = {{"mean", cd.scaled.mean},
                                      {"std", cd.scaled.std},
                                      {"evaluated", cd.evaluated},
                                      {"skipped_empty", cd.skipped_empty}};

  Eigen::Index total_points = 0;
  for (const auto& s : ds.shapes) total_points += s.surface.points.rows();
  Eigen::MatrixXd all_pevs(total_points, params.config.k);
  Eigen::Index row = 0;
  for (const auto& s : ds.shapes) {
    Eigen::RowVectorXd z = encode(s.surface.points, params);
    all_pevs.middleRows(row, s.surface.points.rows()) =
        part_embedding(s.surface.points, z, params);
    row += s.surface.points.rows();
  }
  MeanStd cs = onehot_cosine_stats(all_pevs);
  report["onehot_cosine"] = {{"mean", cs.mean}, {"std", cs.std}};

  std::ofstream out(config.paths.output_dir / "metrics.json");
  if (!out) throw IoError("cannot write metrics report");
  out << report.dump(2) << "\n";
  std::cout << report.dump(2) << "\n";
}

void cmd_export(const RunConfig& config, const CommandOverrides& o) {
  config.validate();
  Dataset ds = load_corpus(config);
  ParameterStore params = load_model(config, o);
  std::filesystem::create_directories(config.paths.output_dir);
  for (const auto& s : ds.shapes) {
    Eigen::RowVectorXd z = encode(s.surface.points, params);
    bool empty = false;
    TriangleMesh mesh =
        reconstruct_surface(z, params, config.inference.grid_resolution, &empty);
    if (empty) {
      std::cerr << "warning: empty reconstruction for shape " << s.id << "\n";
      continue;
    }
    save_mesh(mesh, config.paths.output_dir / (s.id + "_reconstruction.obj"));
    export_pevs(s.surface.points, params, config.paths.output_dir / (s.id + "_pevs"));
  }
  std::cout << "wrote exports to " << config.paths.output_dir.string() << "\n";
}

}  // namespace icorr
