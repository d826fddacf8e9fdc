#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

#include "icorr/commands.hpp"
#include "icorr/evaluation.hpp"
#include "icorr/inference.hpp"
#include "icorr/losses.hpp"
#include "icorr/synthetic.hpp"

namespace py = pybind11;
using namespace icorr;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Unsupervised dense 3D shape correspondence via branched implicit functions";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<NetworkConfig>(m, "NetworkConfig")
      .def(py::init<>())
      .def_readwrite("d", &NetworkConfig::d)
      .def_readwrite("k", &NetworkConfig::k)
      .def_readwrite("encoder_widths", &NetworkConfig::encoder_widths)
      .def_readwrite("encoder_post_width", &NetworkConfig::encoder_post_width)
      .def_readwrite("f_hidden", &NetworkConfig::f_hidden)
      .def_readwrite("g_layers", &NetworkConfig::g_layers)
      .def_readwrite("g_width", &NetworkConfig::g_width)
      .def_readwrite("leaky_slope", &NetworkConfig::leaky_slope);

  py::class_<ParameterStore>(m, "ParameterStore")
      .def_readonly("config", &ParameterStore::config)
      .def_readonly("seed", &ParameterStore::seed)
      .def_readonly("stage_tag", &ParameterStore::stage_tag)
      .def("array", [](const ParameterStore& p, const std::string& name) {
        auto it = p.arrays.find(name);
        if (it == p.arrays.end()) throw ConfigError("unknown parameter array '" + name + "'");
        return it->second;
      })
      .def("array_names", [](const ParameterStore& p) {
        std::vector<std::string> names;
        for (const auto& [n, a] : p.arrays) names.push_back(n);
        return names;
      });

  m.def("init_parameters", &init_parameters, py::arg("config"), py::arg("seed"));
  m.def("load_checkpoint",
        [](const std::filesystem::path& dir) { return load_checkpoint(dir); }, py::arg("dir"));
  m.def("save_checkpoint",
        [](const ParameterStore& p, const std::filesystem::path& dir) {
          save_checkpoint(p, dir);
        },
        py::arg("params"), py::arg("dir"));

  m.def("encode", &encode, py::arg("points"), py::arg("params"));
  m.def("part_embedding", &part_embedding, py::arg("points"), py::arg("z"), py::arg("params"));
  m.def("inverse_map", &inverse_map, py::arg("pev"), py::arg("z"), py::arg("params"));
  m.def("spatial_gradient", &spatial_gradient, py::arg("x"), py::arg("z"), py::arg("params"));
  m.def("occupancy",
        [](const Eigen::Vector3d& x, const Eigen::RowVectorXd& z, const ParameterStore& p) {
          auto o = occupancy(x, z, p);
          return py::make_tuple(o.value, o.branch);
        },
        py::arg("x"), py::arg("z"), py::arg("params"));

  py::class_<CorrespondenceResult>(m, "CorrespondenceResult")
      .def_readonly("source_index", &CorrespondenceResult::source_index)
      .def_readonly("target_index", &CorrespondenceResult::target_index)
      .def_readonly("confidence", &CorrespondenceResult::confidence)
      .def_readonly("exists", &CorrespondenceResult::exists);

  m.def("confidence", &confidence, py::arg("o_p"), py::arg("o_q"));
  m.def("correspond_dense", &correspond_dense, py::arg("a"), py::arg("b"), py::arg("params"),
        py::arg("tau") = 0.2);
  m.def("segment", &segment, py::arg("points"), py::arg("params"));
  m.def("cross_reconstruct", &cross_reconstruct, py::arg("a"), py::arg("b"), py::arg("params"));
  m.def("interpolate_offsets", &interpolate_offsets, py::arg("a"), py::arg("b"), py::arg("n"));

  m.def("reconstruct_surface",
        [](const Eigen::RowVectorXd& z, const ParameterStore& p, int resolution) {
          bool empty = false;
          TriangleMesh mesh = reconstruct_surface(z, p, resolution, &empty);
          return py::make_tuple(mesh.vertices, mesh.faces, empty);
        },
        py::arg("z"), py::arg("params"), py::arg("grid_resolution"));

  m.def("chamfer_distance", &chamfer_distance, py::arg("a"), py::arg("b"));
  m.def("emd_distance",
        [](const Matrix3X& a, const Matrix3X& b, uint64_t seed, int max_exact) {
          Rng rng(seed);
          return emd_distance(a, b, &rng, max_exact);
        },
        py::arg("a"), py::arg("b"), py::arg("seed") = 0, py::arg("max_exact") = 512);

  py::class_<SyntheticShape>(m, "SyntheticShape")
      .def_readonly("points", &SyntheticShape::points)
      .def_readonly("normals", &SyntheticShape::normals)
      .def_property_readonly("part_labels",
                             [](const SyntheticShape& s) { return s.part_labels; })
      .def_property_readonly("correspondence_ids",
                             [](const SyntheticShape& s) { return s.correspondence_ids; })
      .def_readonly("present_parts", &SyntheticShape::present_parts)
      .def_property_readonly("vertices", [](const SyntheticShape& s) { return s.mesh.vertices; })
      .def_property_readonly("faces", [](const SyntheticShape& s) { return s.mesh.faces; });

  m.def("generate_synthetic_family", &generate_synthetic_family, py::arg("family"),
        py::arg("count"), py::arg("seed"), py::arg("points_per_shape") = 2048);

  py::class_<AccuracyCurve>(m, "AccuracyCurve")
      .def_readonly("thresholds", &AccuracyCurve::thresholds)
      .def_readonly("fractions", &AccuracyCurve::fractions)
      .def_readonly("auc", &AccuracyCurve::auc);
  py::class_<RocCurve>(m, "RocCurve")
      .def_readonly("fpr", &RocCurve::fpr)
      .def_readonly("tpr", &RocCurve::tpr)
      .def_readonly("auc", &RocCurve::auc);

  m.def("accuracy_curve", &accuracy_curve, py::arg("predicted"), py::arg("ground_truth"),
        py::arg("thresholds"));
  m.def("default_accuracy_thresholds", &default_accuracy_thresholds);
  m.def("modified_iou", &modified_iou, py::arg("pred_labels"), py::arg("gt_labels"),
        py::arg("gt_combinations"));
  m.def("nonexistence_roc", &nonexistence_roc, py::arg("confidences"), py::arg("exists_gt"));
  m.def("onehot_cosine_stats",
        [](const Eigen::MatrixXd& pevs) {
          MeanStd s = onehot_cosine_stats(pevs);
          return py::make_tuple(s.mean, s.std);
        },
        py::arg("pevs"));

  m.def("run_cli",
        [](const std::string& subcommand, const std::string& config_json,
           const std::filesystem::path& workdir) {
          // Small harness for driving full pipelines from Python tests.
          std::filesystem::create_directories(workdir);
          auto cfg_path = workdir / "config.json";
          std::ofstream(cfg_path) << config_json;
          RunConfig config = load_run_config(cfg_path);
          // Relative paths are anchored at the workdir, not the process cwd.
          for (auto* p : {&config.paths.dataset_dir, &config.paths.checkpoint_dir,
                          &config.paths.output_dir})
            if (p->is_relative()) *p = workdir / *p;
          CommandOverrides o;
          if (subcommand == "sample")
            cmd_sample(config);
          else if (subcommand == "train")
            cmd_train(config, o);
          else if (subcommand == "eval")
            cmd_eval(config, o);
          else if (subcommand == "export")
            cmd_export(config, o);
          else
            throw ConfigError("unknown subcommand '" + subcommand + "'");
        },
        py::arg("subcommand"), py::arg("config_json"), py::arg("workdir"));
}
