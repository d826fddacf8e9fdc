#include "icorr/run_config.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

namespace icorr {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::string& section, const std::set<std::string>& known) {
  if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (known.find(it.key()) == known.end())
      throw ConfigError("unknown config key '" + section + "." + it.key() + "'");
}

template <typename T>
void get(const json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for config key '") + key + "': " + e.what());
  }
}

void parse_corpus(const json& j, CorpusConfig& c) {
  reject_unknown(j, "corpus",
                 {"family", "mesh_dir", "count", "surface_points", "resolutions", "seed"});
  get(j, "family", c.family);
  get(j, "mesh_dir", c.mesh_dir);
  get(j, "count", c.count);
  get(j, "surface_points", c.surface_points);
  get(j, "resolutions", c.resolutions);
  get(j, "seed", c.seed);
}

void parse_network(const json& j, NetworkConfig& n) {
  reject_unknown(j, "network",
                 {"d", "k", "encoder_widths", "encoder_post_width", "f_hidden", "g_layers",
                  "g_width", "leaky_slope"});
  get(j, "d", n.d);
  get(j, "k", n.k);
  get(j, "encoder_widths", n.encoder_widths);
  get(j, "encoder_post_width", n.encoder_post_width);
  get(j, "f_hidden", n.f_hidden);
  get(j, "g_layers", n.g_layers);
  get(j, "g_width", n.g_width);
  get(j, "leaky_slope", n.leaky_slope);
}

void parse_training(const json& j, TrainingConfig& t) {
  reject_unknown(j, "training",
                 {"learning_rate", "adam_beta1", "adam_beta2", "adam_eps", "shapes_per_batch",
                  "pairs_per_batch", "stage1_iterations", "stage2_iterations", "stage3_iterations",
                  "occ_samples_per_step", "surface_points_per_step", "encoder_points_per_step",
                  "seed", "preserve_moments_across_resolutions", "checkpoint_every", "weights",
                  "toggles"});
  get(j, "learning_rate", t.learning_rate);
  get(j, "adam_beta1", t.adam_beta1);
  get(j, "adam_beta2", t.adam_beta2);
  get(j, "adam_eps", t.adam_eps);
  get(j, "shapes_per_batch", t.shapes_per_batch);
  get(j, "pairs_per_batch", t.pairs_per_batch);
  get(j, "stage1_iterations", t.stage1_iterations);
  get(j, "stage2_iterations", t.stage2_iterations);
  get(j, "stage3_iterations", t.stage3_iterations);
  get(j, "occ_samples_per_step", t.occ_samples_per_step);
  get(j, "surface_points_per_step", t.surface_points_per_step);
  get(j, "encoder_points_per_step", t.encoder_points_per_step);
  get(j, "seed", t.seed);
  get(j, "preserve_moments_across_resolutions", t.preserve_moments_across_resolutions);
  get(j, "checkpoint_every", t.checkpoint_every);
  if (j.contains("weights")) {
    reject_unknown(j["weights"], "training.weights", {"cd", "emd", "nor", "smo"});
    get(j["weights"], "cd", t.weights.cd);
    get(j["weights"], "emd", t.weights.emd);
    get(j["weights"], "nor", t.weights.nor);
    get(j["weights"], "smo", t.weights.smo);
  }
  if (j.contains("toggles")) {
    reject_unknown(j["toggles"], "training.toggles", {"cd", "emd", "nor", "smo"});
    get(j["toggles"], "cd", t.toggles.cd);
    get(j["toggles"], "emd", t.toggles.emd);
    get(j["toggles"], "nor", t.toggles.nor);
    get(j["toggles"], "smo", t.toggles.smo);
  }
}

}  // namespace

void RunConfig::validate() const {
  if (corpus.family.empty() == corpus.mesh_dir.empty())
    throw ConfigError("corpus: exactly one of 'family' and 'mesh_dir' must be set");
  if (!corpus.family.empty() && corpus.family != "table" && corpus.family != "chair")
    throw ConfigError("corpus: unknown family '" + corpus.family + "'");
  if (corpus.count < 1) throw ConfigError("corpus: count must be positive");
  if (corpus.surface_points < 1) throw ConfigError("corpus: surface_points must be positive");
  for (int r : corpus.resolutions)
    if (r < 2) throw ConfigError("corpus: resolutions must be at least 2");
  if (inference.tau < 0.0 || inference.tau > 1.0)
    throw ConfigError("inference: tau must lie in [0,1]");
  if (inference.grid_resolution < 8)
    throw ConfigError("inference: grid_resolution must be at least 8");
  if (evaluation.threshold_max <= 0 || evaluation.threshold_step <= 0)
    throw ConfigError("evaluation: threshold grid must be positive");
  training.validate();
}

std::vector<double> RunConfig::eval_thresholds() const {
  std::vector<double> t;
  int steps = static_cast<int>(evaluation.threshold_max / evaluation.threshold_step + 0.5);
  for (int i = 0; i <= steps; ++i) t.push_back(i * evaluation.threshold_step);
  return t;
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j, "<root>",
                 {"corpus", "network", "training", "inference", "evaluation", "paths"});
  RunConfig c;
  if (j.contains("corpus")) parse_corpus(j["corpus"], c.corpus);
  if (j.contains("network")) parse_network(j["network"], c.training.network);
  if (j.contains("training")) parse_training(j["training"], c.training);
  if (j.contains("inference")) {
    reject_unknown(j["inference"], "inference", {"tau", "grid_resolution"});
    get(j["inference"], "tau", c.inference.tau);
    get(j["inference"], "grid_resolution", c.inference.grid_resolution);
  }
  if (j.contains("evaluation")) {
    reject_unknown(j["evaluation"], "evaluation",
                   {"threshold_max", "threshold_step", "grid_resolution", "sample_count"});
    get(j["evaluation"], "threshold_max", c.evaluation.threshold_max);
    get(j["evaluation"], "threshold_step", c.evaluation.threshold_step);
    get(j["evaluation"], "grid_resolution", c.evaluation.grid_resolution);
    get(j["evaluation"], "sample_count", c.evaluation.sample_count);
  }
  if (j.contains("paths")) {
    reject_unknown(j["paths"], "paths", {"dataset_dir", "checkpoint_dir", "output_dir"});
    std::string s;
    s.clear();
    get(j["paths"], "dataset_dir", s);
    if (!s.empty()) c.paths.dataset_dir = s;
    s.clear();
    get(j["paths"], "checkpoint_dir", s);
    if (!s.empty()) c.paths.checkpoint_dir = s;
    s.clear();
    get(j["paths"], "output_dir", s);
    if (!s.empty()) c.paths.output_dir = s;
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["corpus"] = {{"family", c.corpus.family},         {"mesh_dir", c.corpus.mesh_dir},
                 {"count", c.corpus.count},           {"surface_points", c.corpus.surface_points},
                 {"resolutions", c.corpus.resolutions}, {"seed", c.corpus.seed}};
  const NetworkConfig& n = c.training.network;
  j["network"] = {{"d", n.d},
                  {"k", n.k},
                  {"encoder_widths", n.encoder_widths},
                  {"encoder_post_width", n.encoder_post_width},
                  {"f_hidden", n.f_hidden},
                  {"g_layers", n.g_layers},
                  {"g_width", n.g_width},
                  {"leaky_slope", n.leaky_slope}};
  const TrainingConfig& t = c.training;
  j["training"] = {{"learning_rate", t.learning_rate},
                   {"adam_beta1", t.adam_beta1},
                   {"adam_beta2", t.adam_beta2},
                   {"adam_eps", t.adam_eps},
                   {"shapes_per_batch", t.shapes_per_batch},
                   {"pairs_per_batch", t.pairs_per_batch},
                   {"stage1_iterations", t.stage1_iterations},
                   {"stage2_iterations", t.stage2_iterations},
                   {"stage3_iterations", t.stage3_iterations},
                   {"occ_samples_per_step", t.occ_samples_per_step},
                   {"surface_points_per_step", t.surface_points_per_step},
                   {"encoder_points_per_step", t.encoder_points_per_step},
                   {"seed", t.seed},
                   {"preserve_moments_across_resolutions", t.preserve_moments_across_resolutions},
                   {"checkpoint_every", t.checkpoint_every},
                   {"weights",
                    {{"cd", t.weights.cd}, {"emd", t.weights.emd}, {"nor", t.weights.nor},
                     {"smo", t.weights.smo}}},
                   {"toggles",
                    {{"cd", t.toggles.cd}, {"emd", t.toggles.emd}, {"nor", t.toggles.nor},
                     {"smo", t.toggles.smo}}}};
  j["inference"] = {{"tau", c.inference.tau}, {"grid_resolution", c.inference.grid_resolution}};
  j["evaluation"] = {{"threshold_max", c.evaluation.threshold_max},
                     {"threshold_step", c.evaluation.threshold_step},
                     {"grid_resolution", c.evaluation.grid_resolution},
                     {"sample_count", c.evaluation.sample_count}};
  j["paths"] = {{"dataset_dir", c.paths.dataset_dir.string()},
                {"checkpoint_dir", c.paths.checkpoint_dir.string()},
                {"output_dir", c.paths.output_dir.string()}};
  return j.dump(2);
}

}  // namespace icorr
