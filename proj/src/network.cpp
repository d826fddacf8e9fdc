#include "icorr/network.hpp"

#include <cmath>
#include <fstream>
#include <tuple>

#include "icorr/container.hpp"
#include "json.hpp"

namespace icorr {

using nlohmann::json;

void NetworkConfig::validate() const {
  if (d < 1) throw ConfigError("network: d must be >= 1");
  if (k < 2) throw ConfigError("network: k must be >= 2");
  if (encoder_widths.empty()) throw ConfigError("network: encoder needs at least one width");
  for (int w : encoder_widths)
    if (w < 1) throw ConfigError("network: encoder widths must be positive");
  if (encoder_post_width < 1) throw ConfigError("network: encoder post width must be positive");
  if (f_hidden.size() != 2) throw ConfigError("network: f has 3 FC layers (2 hidden widths)");
  for (int w : f_hidden)
    if (w < 1) throw ConfigError("network: f widths must be positive");
  if (g_layers < 2) throw ConfigError("network: g needs at least 2 layers");
  if (g_width < 1) throw ConfigError("network: g width must be positive");
  if (leaky_slope <= 0 || leaky_slope >= 1) throw ConfigError("network: leaky slope must be in (0,1)");
}

namespace {

// Layer name -> (fan_in, fan_out) for every array in the store.
std::vector<std::tuple<std::string, int, int>> layer_shapes(const NetworkConfig& c) {
  std::vector<std::tuple<std::string, int, int>> layers;
  int in = 3;
  for (size_t i = 0; i < c.encoder_widths.size(); ++i) {
    layers.emplace_back("E.pt" + std::to_string(i), in, c.encoder_widths[i]);
    in = c.encoder_widths[i];
  }
  layers.emplace_back("E.post", in, c.encoder_post_width);
  layers.emplace_back("E.head", c.encoder_post_width, c.d);
  layers.emplace_back("f.0", 3 + c.d, c.f_hidden[0]);
  layers.emplace_back("f.1", c.f_hidden[0], c.f_hidden[1]);
  layers.emplace_back("f.2", c.f_hidden[1], c.k);
  in = c.k + c.d;
  for (int l = 0; l < c.g_layers; ++l) {
    int out = (l == c.g_layers - 1) ? 3 : c.g_width;
    layers.emplace_back("g." + std::to_string(l), in, out);
    in = out;
  }
  return layers;
}

inline Eigen::MatrixXd lrelu(const Eigen::MatrixXd& x, double slope) {
  return x.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

inline Eigen::MatrixXd sigmoid_m(const Eigen::MatrixXd& x) {
  return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

const Eigen::MatrixXd& arr(const ParameterStore& p, const std::string& name) {
  auto it = p.arrays.find(name);
  if (it == p.arrays.end()) throw DataError("parameter store is missing array '" + name + "'");
  return it->second;
}

}  // namespace

ParameterStore init_parameters(const NetworkConfig& config, uint64_t seed) {
  config.validate();
  ParameterStore store;
  store.config = config;
  store.seed = seed;
  Rng rng(seed);
  for (const auto& [name, fan_in, fan_out] : layer_shapes(config)) {
    double limit = std::sqrt(3.0 / fan_in);
    Eigen::MatrixXd w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
    store.arrays[name + ".W"] = std::move(w);
    store.arrays[name + ".b"] = Eigen::MatrixXd::Zero(1, fan_out);
  }
  return store;
}

Eigen::RowVectorXd encode(const Matrix3X& points, const ParameterStore& params) {
  if (points.rows() == 0) throw DataError("encode: empty point set");
  const NetworkConfig& c = params.config;
  Eigen::MatrixXd h = points;
  for (size_t i = 0; i < c.encoder_widths.size(); ++i) {
    std::string n = "E.pt" + std::to_string(i);
    h = lrelu((h * arr(params, n + ".W")).rowwise() + arr(params, n + ".b").row(0), c.leaky_slope);
  }
  Eigen::RowVectorXd pooled = h.colwise().maxCoeff();
  Eigen::RowVectorXd post =
      lrelu(pooled * arr(params, "E.post.W") + arr(params, "E.post.b").row(0), c.leaky_slope);
  return post * arr(params, "E.head.W") + arr(params, "E.head.b").row(0);
}

Eigen::MatrixXd part_embedding(const Matrix3X& x, const Eigen::RowVectorXd& z,
                               const ParameterStore& params) {
  const NetworkConfig& c = params.config;
  Eigen::MatrixXd in(x.rows(), 3 + c.d);
  in << x, z.replicate(x.rows(), 1);
  Eigen::MatrixXd h1 =
      lrelu((in * arr(params, "f.0.W")).rowwise() + arr(params, "f.0.b").row(0), c.leaky_slope);
  Eigen::MatrixXd h2 =
      lrelu((h1 * arr(params, "f.1.W")).rowwise() + arr(params, "f.1.b").row(0), c.leaky_slope);
  return sigmoid_m((h2 * arr(params, "f.2.W")).rowwise() + arr(params, "f.2.b").row(0));
}

OccupancyValue occupancy(const Eigen::Vector3d& x, const Eigen::RowVectorXd& z,
                         const ParameterStore& params) {
  Matrix3X xs(1, 3);
  xs.row(0) = x;
  Eigen::RowVectorXd pev = part_embedding(xs, z, params).row(0);
  int best = 0;
  for (int i = 1; i < pev.size(); ++i)
    if (pev(i) > pev(best)) best = i;
  return {pev(best), best + 1};
}

Matrix3X inverse_map(const Eigen::MatrixXd& pev, const Eigen::RowVectorXd& z,
                     const ParameterStore& params) {
  const NetworkConfig& c = params.config;
  if (pev.cols() != c.k) throw DataError("inverse_map: PEV dimension mismatch");
  Eigen::MatrixXd h(pev.rows(), c.k + c.d);
  h << pev, z.replicate(pev.rows(), 1);
  for (int l = 0; l < c.g_layers; ++l) {
    std::string n = "g." + std::to_string(l);
    Eigen::MatrixXd u = (h * arr(params, n + ".W")).rowwise() + arr(params, n + ".b").row(0);
    h = (l == c.g_layers - 1) ? Eigen::MatrixXd(u.array().tanh().matrix()) : lrelu(u, c.leaky_slope);
  }
  return h;
}

Eigen::Vector3d spatial_gradient(const Eigen::Vector3d& x, const Eigen::RowVectorXd& z,
                                 const ParameterStore& params) {
  const NetworkConfig& c = params.config;
  Eigen::RowVectorXd in(3 + c.d);
  in << x.transpose(), z;
  Eigen::RowVectorXd u1 = in * arr(params, "f.0.W") + arr(params, "f.0.b").row(0);
  Eigen::RowVectorXd m1 =
      u1.unaryExpr([&](double v) { return v > 0.0 ? 1.0 : c.leaky_slope; });
  Eigen::RowVectorXd h1 = u1.cwiseProduct(m1);
  Eigen::RowVectorXd u2 = h1 * arr(params, "f.1.W") + arr(params, "f.1.b").row(0);
  Eigen::RowVectorXd m2 =
      u2.unaryExpr([&](double v) { return v > 0.0 ? 1.0 : c.leaky_slope; });
  Eigen::RowVectorXd h2 = u2.cwiseProduct(m2);
  Eigen::RowVectorXd u3 = h2 * arr(params, "f.2.W") + arr(params, "f.2.b").row(0);
  int b = 0;
  for (int i = 1; i < u3.size(); ++i)
    if (u3(i) > u3(b)) b = i;
  double s = 1.0 / (1.0 + std::exp(-u3(b)));
  double sp = s * (1.0 - s);
  // Chain through the argmax branch only.
  Eigen::RowVectorXd v2 = arr(params, "f.2.W").col(b).transpose().cwiseProduct(m2);
  Eigen::RowVectorXd v1 = (v2 * arr(params, "f.1.W").transpose()).cwiseProduct(m1);
  Eigen::RowVectorXd gx = v1 * arr(params, "f.0.W").topRows(3).transpose();
  return sp * gx.transpose();
}

// ---- checkpoints ----

namespace {

json config_to_json(const NetworkConfig& c) {
  return json{{"d", c.d},
              {"k", c.k},
              {"encoder_widths", c.encoder_widths},
              {"encoder_post_width", c.encoder_post_width},
              {"f_hidden", c.f_hidden},
              {"g_layers", c.g_layers},
              {"g_width", c.g_width},
              {"leaky_slope", c.leaky_slope}};
}

NetworkConfig config_from_json(const json& j) {
  NetworkConfig c;
  c.d = j.at("d").get<int>();
  c.k = j.at("k").get<int>();
  c.encoder_widths = j.at("encoder_widths").get<std::vector<int>>();
  c.encoder_post_width = j.at("encoder_post_width").get<int>();
  c.f_hidden = j.at("f_hidden").get<std::vector<int>>();
  c.g_layers = j.at("g_layers").get<int>();
  c.g_width = j.at("g_width").get<int>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  c.validate();
  return c;
}

}  // namespace

void save_checkpoint(const ParameterStore& params, const std::filesystem::path& dir,
                     const std::map<std::string, Eigen::MatrixXd>* optimizer_state,
                     int64_t iteration) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["version"] = 1;
  manifest["kind"] = "checkpoint";
  manifest["seed"] = params.seed;
  manifest["stage_tag"] = params.stage_tag;
  manifest["iteration"] = iteration;
  manifest["config"] = config_to_json(params.config);
  json names = json::array();
  for (const auto& [name, m] : params.arrays) {
    json entry = {{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}};
    names.push_back(entry);
    write_blob(dir / (name + ".bin"), Blob::from_matrix(m));
  }
  manifest["arrays"] = names;
  json opt_names = json::array();
  if (optimizer_state) {
    for (const auto& [name, m] : *optimizer_state) {
      opt_names.push_back(name);
      write_blob(dir / ("opt." + name + ".bin"), Blob::from_matrix(m));
    }
  }
  manifest["optimizer_arrays"] = opt_names;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write checkpoint manifest in " + dir.string());
  out << manifest.dump(2) << "\n";
}

ParameterStore load_checkpoint(const std::filesystem::path& dir,
                               std::map<std::string, Eigen::MatrixXd>* optimizer_state,
                               int64_t* iteration) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("cannot open checkpoint manifest in " + dir.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw DataError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.value("kind", "") != "checkpoint")
    throw DataError("not a checkpoint container: " + dir.string());
  ParameterStore params;
  params.seed = manifest.at("seed").get<uint64_t>();
  params.stage_tag = manifest.at("stage_tag").get<std::string>();
  params.config = config_from_json(manifest.at("config"));
  if (iteration) *iteration = manifest.value("iteration", int64_t{0});
  for (const auto& entry : manifest.at("arrays")) {
    std::string name = entry.at("name").get<std::string>();
    Eigen::MatrixXd m = read_blob(dir / (name + ".bin")).to_matrix();
    if (m.rows() != entry.at("rows").get<Eigen::Index>() ||
        m.cols() != entry.at("cols").get<Eigen::Index>())
      throw DataError("checkpoint array '" + name + "' shape mismatch vs. manifest");
    params.arrays[name] = std::move(m);
  }
  // Validate against the config's expected shapes.
  for (const auto& [name, fan_in, fan_out] : layer_shapes(params.config)) {
    const Eigen::MatrixXd& w = arr(params, name + ".W");
    if (w.rows() != fan_in || w.cols() != fan_out)
      throw DataError("checkpoint array '" + name + ".W' inconsistent with config");
  }
  if (optimizer_state) {
    optimizer_state->clear();
    for (const auto& n : manifest.value("optimizer_arrays", std::vector<std::string>())) {
      (*optimizer_state)[n] = read_blob(dir / ("opt." + n + ".bin")).to_matrix();
    }
  }
  return params;
}

// ---- taped model ----

TapedModel::TapedModel(ad::Tape& tape, const ParameterStore& params)
    : t_(tape), cfg_(params.config) {
  for (const auto& [name, m] : params.arrays) p_[name] = t_.leaf(m);
}

ad::Ref TapedModel::param(const std::string& name) const {
  auto it = p_.find(name);
  if (it == p_.end()) throw DataError("taped model is missing array '" + name + "'");
  return it->second;
}

ad::Ref TapedModel::encode(const Matrix3X& points) {
  if (points.rows() == 0) throw DataError("encode: empty point set");
  ad::Ref h = t_.constant(points);
  for (size_t i = 0; i < cfg_.encoder_widths.size(); ++i) {
    std::string n = "E.pt" + std::to_string(i);
    h = t_.leaky_relu(t_.add_row(t_.matmul(h, param(n + ".W")), param(n + ".b")), cfg_.leaky_slope);
  }
  ad::Ref pooled = t_.colmax(h);
  ad::Ref post = t_.leaky_relu(
      t_.add_row(t_.matmul(pooled, param("E.post.W")), param("E.post.b")), cfg_.leaky_slope);
  return t_.add_row(t_.matmul(post, param("E.head.W")), param("E.head.b"));
}

ad::Ref TapedModel::pev(ad::Ref x, ad::Ref z_row) {
  int n = static_cast<int>(t_.val(x).rows());
  ad::Ref in = t_.hcat(x, t_.repeat_row(z_row, n));
  ad::Ref h1 = t_.leaky_relu(t_.add_row(t_.matmul(in, param("f.0.W")), param("f.0.b")), cfg_.leaky_slope);
  ad::Ref h2 = t_.leaky_relu(t_.add_row(t_.matmul(h1, param("f.1.W")), param("f.1.b")), cfg_.leaky_slope);
  return t_.sigmoid(t_.add_row(t_.matmul(h2, param("f.2.W")), param("f.2.b")));
}

ad::Ref TapedModel::occupancy_batch(ad::Ref x, ad::Ref z_row, std::vector<int>* branch) {
  ad::Ref occ = t_.rowmax(pev(x, z_row), branch);
  if (branch != nullptr)
    for (int& b : *branch) ++b;  // 1-based, matching occupancy()
  return occ;
}

ad::Ref TapedModel::inverse(ad::Ref pev_ref, ad::Ref z_row) {
  int n = static_cast<int>(t_.val(pev_ref).rows());
  ad::Ref h = t_.hcat(pev_ref, t_.repeat_row(z_row, n));
  for (int l = 0; l < cfg_.g_layers; ++l) {
    std::string nm = "g." + std::to_string(l);
    ad::Ref u = t_.add_row(t_.matmul(h, param(nm + ".W")), param(nm + ".b"));
    h = (l == cfg_.g_layers - 1) ? t_.tanh(u) : t_.leaky_relu(u, cfg_.leaky_slope);
  }
  return h;
}

ad::Ref TapedModel::surface_normals(ad::Ref x, ad::Ref z_row, std::vector<char>* valid, double eps) {
  const int n = static_cast<int>(t_.val(x).rows());
  ad::Ref in = t_.hcat(x, t_.repeat_row(z_row, n));
  ad::Ref u1 = t_.add_row(t_.matmul(in, param("f.0.W")), param("f.0.b"));
  // Activation masks are piecewise constant in both x and the parameters,
  // so treating them as constants keeps the gradient exact a.e.
  auto mask_of = [&](ad::Ref u) {
    const Eigen::MatrixXd& v = t_.val(u);
    return Eigen::MatrixXd(
        (v.array() > 0.0)
            .select(Eigen::MatrixXd::Ones(v.rows(), v.cols()),
                    Eigen::MatrixXd::Constant(v.rows(), v.cols(), cfg_.leaky_slope)));
  };
  Eigen::MatrixXd m1 = mask_of(u1);
  ad::Ref h1 = t_.cmul(u1, m1);
  ad::Ref u2 = t_.add_row(t_.matmul(h1, param("f.1.W")), param("f.1.b"));
  Eigen::MatrixXd m2 = mask_of(u2);
  ad::Ref h2 = t_.cmul(u2, m2);
  ad::Ref u3 = t_.add_row(t_.matmul(h2, param("f.2.W")), param("f.2.b"));
  ad::Ref o = t_.sigmoid(u3);

  ad::Ref w1x_t = t_.transpose(t_.gather_rows(param("f.0.W"), {0, 1, 2}));  // h0 x 3 -> 3 x h0 transposed below
  ad::Ref w2_t = t_.transpose(param("f.1.W"));
  ad::Ref w3_t = t_.transpose(param("f.2.W"));  // k x h2

  const Eigen::MatrixXd u3v = t_.val(u3);  // copy: pushing nodes may reallocate
  std::vector<ad::Ref> rows;
  rows.reserve(n);
  for (int j = 0; j < n; ++j) {
    int b = 0;
    for (int c = 1; c < cfg_.k; ++c)
      if (u3v(j, c) > u3v(j, b)) b = c;
    ad::Ref v2 = t_.cmul(t_.gather_rows(w3_t, {b}), m2.row(j));          // 1 x h2
    ad::Ref v1 = t_.cmul(t_.matmul(v2, w2_t), m1.row(j));                // 1 x h1
    ad::Ref gx = t_.matmul(v1, w1x_t);                                   // 1 x 3
    // sigma'(u) = s (1 - s)
    ad::Ref s = t_.slice_cols(t_.gather_rows(o, {j}), b, 1);
    ad::Ref sp = t_.mul(s, t_.affine(s, -1.0, 1.0));
    rows.push_back(t_.scale_all(gx, sp));
  }
  ad::Ref grads = t_.vcat(rows);
  if (valid) {
    valid->assign(n, 1);
    const Eigen::MatrixXd& gv = t_.val(grads);
    for (int j = 0; j < n; ++j)
      if (gv.row(j).norm() < eps) (*valid)[j] = 0;
  }
  return t_.normalize_rows(grads, eps);
}

void TapedModel::accumulate_gradients(std::map<std::string, Eigen::MatrixXd>& grads) const {
  for (const auto& [name, ref] : p_) {
    const Eigen::MatrixXd& g = t_.grad(ref);
    auto it = grads.find(name);
    if (it == grads.end())
      grads[name] = g;
    else
      it->second += g;
  }
}

}  // namespace icorr
