#include "icorr/trainer.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <ostream>

#include "json.hpp"

namespace icorr {

namespace {

constexpr int kStage1Resolutions[3] = {16, 32, 64};

bool g_trainable_in_stage(const std::string& name, int stage) {
  if (stage >= 2) return true;
  return name.rfind("g.", 0) != 0;  // stage 1 trains E and f only
}

struct BatchStorage {
  std::deque<Matrix3X> mats;
  std::deque<Eigen::VectorXd> vecs;
};

Matrix3X* store(BatchStorage& s, Matrix3X m) {
  s.mats.push_back(std::move(m));
  return &s.mats.back();
}

Eigen::VectorXd* store(BatchStorage& s, Eigen::VectorXd v) {
  s.vecs.push_back(std::move(v));
  return &s.vecs.back();
}

Matrix3X subsample_rows(const Matrix3X& m, int count, Rng& rng, std::vector<int>* picked = nullptr) {
  if (count <= 0 || count >= m.rows()) {
    if (picked) {
      picked->resize(m.rows());
      for (Eigen::Index i = 0; i < m.rows(); ++i) (*picked)[i] = static_cast<int>(i);
    }
    return m;
  }
  Matrix3X out(count, 3);
  if (picked) picked->resize(count);
  for (int i = 0; i < count; ++i) {
    int j = static_cast<int>(rng.uniform_int(m.rows()));
    out.row(i) = m.row(j);
    if (picked) (*picked)[i] = j;
  }
  return out;
}

// Builds one shape's batch entry with per-iteration subsampling.
int add_shape_entry(LossBatch& batch, BatchStorage& storage, const ShapeRecord& shape,
                    int resolution, const TrainingConfig& cfg, Rng& rng, bool need_occ) {
  ShapeBatchEntry e{};
  e.encoder_points = store(storage, subsample_rows(shape.surface.points,
                                                   cfg.encoder_points_per_step, rng));
  std::vector<int> surf_idx;
  Matrix3X surf = subsample_rows(shape.surface.points, cfg.surface_points_per_step, rng, &surf_idx);
  e.surface_points = store(storage, std::move(surf));
  Matrix3X normals(surf_idx.size(), 3);
  for (size_t i = 0; i < surf_idx.size(); ++i) normals.row(i) = shape.surface.normals.row(surf_idx[i]);
  e.surface_normals = store(storage, std::move(normals));
  if (need_occ) {
    auto it = shape.samples.find(resolution);
    if (it == shape.samples.end())
      throw ConfigError("corpus is missing occupancy samples at resolution " +
                        std::to_string(resolution));
    const SampledOccupancy& pool = it->second;
    int count = std::min<int>(cfg.occ_samples_per_step, static_cast<int>(pool.points.rows()));
    Matrix3X pts(count, 3);
    Eigen::VectorXd labels(count);
    for (int i = 0; i < count; ++i) {
      int j = static_cast<int>(rng.uniform_int(pool.points.rows()));
      pts.row(i) = pool.points.row(j);
      labels(i) = pool.labels(j);
    }
    e.occ_points = store(storage, std::move(pts));
    e.occ_labels = store(storage, std::move(labels));
  }
  batch.shapes.push_back(e);
  return static_cast<int>(batch.shapes.size()) - 1;
}

void adam_step(TrainingState& state, const std::map<std::string, Eigen::MatrixXd>& grads,
               const TrainingConfig& cfg, int stage) {
  ++state.adam_step;
  double t = static_cast<double>(state.adam_step);
  double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
  double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);
  for (auto& [name, theta] : state.params.arrays) {
    if (!g_trainable_in_stage(name, stage)) continue;
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Eigen::MatrixXd& g = git->second;
    Eigen::MatrixXd& m = state.moments["m." + name];
    Eigen::MatrixXd& v = state.moments["v." + name];
    if (m.size() == 0) m = Eigen::MatrixXd::Zero(g.rows(), g.cols());
    if (v.size() == 0) v = Eigen::MatrixXd::Zero(g.rows(), g.cols());
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
    Eigen::MatrixXd mhat = m / bc1;
    Eigen::MatrixXd vhat = v / bc2;
    theta.array() -= cfg.learning_rate * mhat.array() / (vhat.array().sqrt() + cfg.adam_eps);
  }
}

// No timestamps here: identical runs must produce byte-identical logs.
void log_line(std::ostream* log, int stage, int resolution, int64_t iteration,
              const LossReport& rep) {
  if (log == nullptr) return;
  nlohmann::json j = nlohmann::json::parse(rep.to_json_line());
  j["stage"] = stage;
  j["resolution"] = resolution;
  j["iteration"] = iteration;
  (*log) << j.dump() << "\n";
}

uint64_t iter_salt(int stage, int res_index, int64_t iteration) {
  return (static_cast<uint64_t>(stage) << 56) ^ (static_cast<uint64_t>(res_index) << 48) ^
         static_cast<uint64_t>(iteration);
}

void maybe_checkpoint(const TrainingState& state, const TrainingConfig& cfg,
                      const std::filesystem::path* dir) {
  if (dir == nullptr || cfg.checkpoint_every <= 0) return;
  if (state.iteration % cfg.checkpoint_every == 0) save_state(state, *dir / "ckpt_latest");
}

std::vector<int> pick_shapes(size_t n, int count, Rng& rng) {
  std::vector<int> idx;
  for (int i = 0; i < count; ++i) idx.push_back(static_cast<int>(rng.uniform_int(n)));
  return idx;
}

}  // namespace

LossOptions TrainingConfig::loss_options() const {
  LossOptions opts;
  opts.toggles = toggles;
  return opts;
}

void TrainingConfig::validate() const {
  if (learning_rate <= 0) throw ConfigError("training: learning rate must be positive");
  if (shapes_per_batch < 1 || pairs_per_batch < 1) throw ConfigError("training: batch sizes must be positive");
  if (stage1_iterations < 0 || stage2_iterations < 0 || stage3_iterations < 0)
    throw ConfigError("training: iteration counts must be nonnegative");
  weights.validate();
  network.validate();
}

TrainingState train_stage1(const Dataset& corpus, const TrainingConfig& config, std::ostream* log,
                           TrainingState* initial, const std::filesystem::path* checkpoint_dir) {
  config.validate();
  if (corpus.shapes.empty()) throw ConfigError("train_stage1: empty corpus");
  for (int r : kStage1Resolutions)
    for (const auto& s : corpus.shapes)
      if (s.samples.find(r) == s.samples.end())
        throw ConfigError("train_stage1: corpus is missing resolution " + std::to_string(r));

  TrainingState state;
  if (initial != nullptr && initial->stage == 1) {
    state = *initial;
  } else {
    state.stage = 1;
    state.params = init_parameters(config.network, config.seed);
    state.params.stage_tag = "stage1";
    state.resolution = kStage1Resolutions[0];
    state.iteration = 0;
  }
  Rng master(config.seed);
  const int64_t per_res = config.stage1_iterations;
  auto t0 = std::chrono::steady_clock::now();
  for (int ri = 0; ri < 3; ++ri) {
    int res = kStage1Resolutions[ri];
    if (res < state.resolution) continue;  // resumed past this resolution
    state.resolution = res;
    if (!config.preserve_moments_across_resolutions && state.iteration % per_res == 0) {
      state.moments.clear();
      state.adam_step = 0;
    }
    int64_t start_iter = state.iteration - static_cast<int64_t>(ri) * per_res;
    for (int64_t it = std::max<int64_t>(start_iter, 0); it < per_res; ++it) {
      Rng rng = master.fork(iter_salt(1, ri, it));
      LossBatch batch;
      BatchStorage storage;
      for (int s : pick_shapes(corpus.shapes.size(),
                               std::min<int>(config.shapes_per_batch,
                                             static_cast<int>(corpus.shapes.size())),
                               rng))
        add_shape_entry(batch, storage, corpus.shapes[s], res, config, rng, true);
      std::map<std::string, Eigen::MatrixXd> grads;
      LossReport rep = total_loss(batch, state.params, config.weights, 1, config.loss_options(),
                                  &grads, &rng);
      adam_step(state, grads, config, 1);
      ++state.iteration;
      log_line(log, 1, res, state.iteration, rep);
      maybe_checkpoint(state, config, checkpoint_dir);
    }
  }
  state.params.stage_tag = "stage1";
  return state;
}

TrainingState train_stage2(const Dataset& corpus, const TrainingConfig& config, TrainingState state,
                           std::ostream* log, const std::filesystem::path* checkpoint_dir) {
  config.validate();
  if (state.params.stage_tag != "stage1" && state.params.stage_tag != "stage2")
    throw ConfigError("train_stage2: expected a stage1 state, got '" + state.params.stage_tag + "'");
  if (state.stage != 2) {
    state.stage = 2;
    state.iteration = 0;
    state.params.stage_tag = "stage2";
  }
  const int res = 64;
  Rng master(config.seed + 0x2222ULL);
  auto t0 = std::chrono::steady_clock::now();
  for (int64_t it = state.iteration; it < config.stage2_iterations; ++it) {
    Rng rng = master.fork(iter_salt(2, 0, it));
    LossBatch batch;
    BatchStorage storage;
    for (int s : pick_shapes(corpus.shapes.size(),
                             std::min<int>(config.shapes_per_batch,
                                           static_cast<int>(corpus.shapes.size())),
                             rng))
      add_shape_entry(batch, storage, corpus.shapes[s], res, config, rng, true);
    std::map<std::string, Eigen::MatrixXd> grads;
    LossReport rep =
        total_loss(batch, state.params, config.weights, 2, config.loss_options(), &grads, &rng);
    adam_step(state, grads, config, 2);
    ++state.iteration;
    log_line(log, 2, res, state.iteration, rep);
    maybe_checkpoint(state, config, checkpoint_dir);
  }
  state.params.stage_tag = "stage2";
  return state;
}

TrainingState train_stage3(const Dataset& corpus, const TrainingConfig& config, TrainingState state,
                           std::ostream* log, const std::filesystem::path* checkpoint_dir) {
  config.validate();
  if (corpus.shapes.size() < 2) throw ConfigError("train_stage3: corpus must contain at least 2 shapes");
  if (state.params.stage_tag != "stage2" && state.params.stage_tag != "stage3")
    throw ConfigError("train_stage3: expected a stage2 state, got '" + state.params.stage_tag + "'");
  if (state.stage != 3) {
    state.stage = 3;
    state.iteration = 0;
    state.params.stage_tag = "stage3";
  }
  const int res = 64;
  Rng master(config.seed + 0x3333ULL);
  auto t0 = std::chrono::steady_clock::now();
  for (int64_t it = state.iteration; it < config.stage3_iterations; ++it) {
    Rng rng = master.fork(iter_salt(3, 0, it));
    LossBatch batch;
    BatchStorage storage;
    std::map<int, int> shape_entry;  // corpus index -> batch index
    auto entry_for = [&](int s) {
      auto e = shape_entry.find(s);
      if (e != shape_entry.end()) return e->second;
      int idx = add_shape_entry(batch, storage, corpus.shapes[s], res, config, rng, true);
      shape_entry[s] = idx;
      return idx;
    };
    for (int p = 0; p < config.pairs_per_batch; ++p) {
      int a = static_cast<int>(rng.uniform_int(corpus.shapes.size()));
      int b = static_cast<int>(rng.uniform_int(corpus.shapes.size() - 1));
      if (b >= a) ++b;  // distinct by construction
      batch.pairs.emplace_back(entry_for(a), entry_for(b));
    }
    std::map<std::string, Eigen::MatrixXd> grads;
    LossReport rep =
        total_loss(batch, state.params, config.weights, 3, config.loss_options(), &grads, &rng);
    adam_step(state, grads, config, 3);
    ++state.iteration;
    log_line(log, 3, res, state.iteration, rep);
    maybe_checkpoint(state, config, checkpoint_dir);
  }
  state.params.stage_tag = "stage3";
  return state;
}

void save_state(const TrainingState& state, const std::filesystem::path& dir) {
  std::map<std::string, Eigen::MatrixXd> opt = state.moments;
  Eigen::MatrixXd meta(1, 3);
  meta << static_cast<double>(state.adam_step), static_cast<double>(state.stage),
      static_cast<double>(state.resolution);
  opt["trainer_meta"] = meta;
  save_checkpoint(state.params, dir, &opt, state.iteration);
}

TrainingState load_state(const std::filesystem::path& dir) {
  TrainingState state;
  std::map<std::string, Eigen::MatrixXd> opt;
  state.params = load_checkpoint(dir, &opt, &state.iteration);
  auto meta = opt.find("trainer_meta");
  if (meta != opt.end()) {
    state.adam_step = static_cast<int64_t>(meta->second(0, 0));
    state.stage = static_cast<int>(meta->second(0, 1));
    state.resolution = static_cast<int>(meta->second(0, 2));
    opt.erase(meta);
  }
  state.moments = std::move(opt);
  return state;
}

std::filesystem::path run_training(const Dataset& corpus, const TrainingConfig& config,
                                   const std::filesystem::path& checkpoint_dir, std::ostream* log) {
  config.validate();
  std::filesystem::create_directories(checkpoint_dir);
  auto stage_path = [&](int s) { return checkpoint_dir / ("ckpt_stage" + std::to_string(s)); };
  auto final_path = stage_path(3);

  TrainingState state;
  int resume_stage = 0;
  if (std::filesystem::exists(checkpoint_dir / "ckpt_latest" / "manifest.json")) {
    state = load_state(checkpoint_dir / "ckpt_latest");
    resume_stage = state.stage;
  } else {
    for (int s = 3; s >= 1; --s) {
      if (std::filesystem::exists(stage_path(s) / "manifest.json")) {
        state = load_state(stage_path(s));
        resume_stage = s;
        // A stage-boundary checkpoint means that stage is complete.
        state.iteration = (s == 1)   ? 3LL * config.stage1_iterations
                          : (s == 2) ? config.stage2_iterations
                                     : config.stage3_iterations;
        break;
      }
    }
  }

  if (resume_stage <= 1) {
    TrainingState* init = resume_stage == 1 ? &state : nullptr;
    bool stage1_done = resume_stage == 1 && state.iteration >= 3LL * config.stage1_iterations;
    if (!stage1_done) {
      state = train_stage1(corpus, config, log, init, &checkpoint_dir);
    }
    save_state(state, stage_path(1));
  }
  if (resume_stage <= 2) {
    bool stage2_done = resume_stage == 2 && state.iteration >= config.stage2_iterations;
    if (!stage2_done) state = train_stage2(corpus, config, std::move(state), log, &checkpoint_dir);
    save_state(state, stage_path(2));
  }
  state = train_stage3(corpus, config, std::move(state), log, &checkpoint_dir);
  save_state(state, final_path);
  return final_path;
}

}  // namespace icorr
