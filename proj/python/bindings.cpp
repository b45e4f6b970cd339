#include "ntkop/experiment.hpp"
#include "ntkop/neural_op.hpp"
#include "ntkop/ntk.hpp"
#include "ntkop/poisson.hpp"
#include "ntkop/serialize.hpp"
#include "ntkop/train.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace ntkop;

PYBIND11_MODULE(_core, m)
{
  m.doc() = "Two-layer neural operator, its empirical NTK and kernel gradient descent";

  py::enum_<GridScheme>(m, "GridScheme")
    .value("equispaced", GridScheme::equispaced)
    .value("iid_uniform", GridScheme::iid_uniform)
    .value("custom", GridScheme::custom);

  py::class_<Grid, std::shared_ptr<Grid>>(m, "Grid")
    .def_property_readonly("points", &Grid::points)
    .def_property_readonly("weights", &Grid::weights)
    .def_property_readonly("scheme", &Grid::scheme)
    .def("__len__", &Grid::size);

  m.def("make_grid",
        [](int n_x, GridScheme scheme, std::uint64_t seed) {
          return std::const_pointer_cast<Grid>(make_grid(n_x, scheme, seed));
        },
        py::arg("n_x"), py::arg("scheme") = GridScheme::equispaced, py::arg("seed") = 0);

  py::class_<SampledFunction>(m, "SampledFunction")
    .def(py::init([](std::shared_ptr<Grid> g, const Eigen::VectorXd& v) {
      return SampledFunction(g, v);
    }))
    .def_property_readonly("values", &SampledFunction::values)
    .def_property_readonly("grid", [](const SampledFunction& f) {
      return std::const_pointer_cast<Grid>(f.grid_ptr());
    });
  m.def("emp_inner", &emp_inner);
  m.def("emp_norm", &emp_norm);

  py::class_<Polynomial>(m, "Polynomial")
    .def(py::init<std::vector<double>>())
    .def("__call__", &Polynomial::operator())
    .def_property_readonly("coeffs", &Polynomial::coeffs)
    .def("sup_norm", &Polynomial::sup_norm)
    .def("normalized", &Polynomial::normalized);
  m.def("greens_kernel", &greens_kernel);
  m.def("solve_poisson", [](const Polynomial& u, const Eigen::VectorXd& x) {
    const auto v = solve_poisson(u);
    return Eigen::VectorXd(x.unaryExpr([&](double xi) { return v(xi); }));
  }, py::arg("u"), py::arg("x"), "Exact Poisson solution of u evaluated at the points x.");

  py::enum_<Split>(m, "Split").value("train", Split::train).value("test", Split::test);
  py::class_<Dataset>(m, "Dataset")
    .def("__len__", &Dataset::size)
    .def_readonly("inputs", &Dataset::inputs)
    .def_readonly("targets", &Dataset::targets)
    .def_readonly("input_polys", &Dataset::input_polys)
    .def_property_readonly("grid", [](const Dataset& d) { return std::const_pointer_cast<Grid>(d.grid); })
    .def("to_json", [](const Dataset& d) { return dataset_to_json(d).dump(); });
  m.def("make_dataset",
        [](int n_u, std::shared_ptr<Grid> grid, int max_degree, std::uint64_t seed, Split split) {
          return make_dataset(n_u, grid, max_degree, seed, split);
        },
        py::arg("n_u"), py::arg("grid"), py::arg("max_degree") = 4, py::arg("seed") = 0,
        py::arg("split") = Split::train);
  m.def("load_dataset", &load_dataset);

  py::class_<ArchConfig>(m, "ArchConfig")
    .def(py::init<>())
    .def_readwrite("width", &ArchConfig::width)
    .def_readwrite("tau", &ArchConfig::tau)
    .def_readwrite("kernel_bandwidth", &ArchConfig::kernel_bandwidth)
    .def_readwrite("feature_scales", &ArchConfig::feature_scales)
    .def_property_readonly("d_tilde", &ArchConfig::d_tilde)
    .def_property_readonly("kappa_sq", &ArchConfig::kappa_sq)
    .def("default_alpha", &ArchConfig::default_alpha);

  py::class_<Params>(m, "Params")
    .def_readwrite("a", &Params::a)
    .def_readwrite("B", &Params::B)
    .def("flatten", &Params::flatten)
    .def("norm_sq", &Params::norm_sq);
  py::class_<FeatureField>(m, "FeatureField").def_property_readonly("values", &FeatureField::values);

  m.def("build_features", &build_features);
  m.def("init_symmetric", &init_symmetric, py::arg("cfg"), py::arg("seed") = 0);
  m.def("forward", [](const Params& t, const FeatureField& f) { return forward(t, f).scalar(); });
  m.def("grad", &grad);
  m.def("param_distance", &param_distance);

  m.def("ntk_block", [](const Params& t, const FeatureField& u, const FeatureField& v, double tau) {
    return ntk_block(t, u, v, tau).matrix;
  });
  m.def("linearized_iterate", [](const Params& t, const Params& t0, const FeatureField& f) {
    return linearized_iterate(t, t0, f).scalar();
  });
  m.def("taylor_remainder", &taylor_remainder);
  m.def("effective_dimension", &effective_dimension);

  py::class_<TrainRecord>(m, "TrainRecord")
    .def_readonly("t", &TrainRecord::t)
    .def_readonly("emp_risk", &TrainRecord::emp_risk)
    .def_readonly("test_risk", &TrainRecord::test_risk)
    .def_readonly("weight_dist", &TrainRecord::weight_dist);
  py::class_<TrainReport>(m, "TrainReport")
    .def_readonly("records", &TrainReport::records)
    .def_readonly("final_params", &TrainReport::final_params)
    .def_readonly("initial", &TrainReport::initial);
  m.def("train",
        [](const ArchConfig& arch, const Dataset& tr, const Dataset& te, int iterations,
           std::optional<double> alpha, int eval_points, bool linearized, std::uint64_t seed) {
          TrainConfig cfg;
          cfg.alpha = alpha ? *alpha : arch.default_alpha();
          cfg.iterations = iterations;
          cfg.linearized = linearized;
          cfg.eval_grid = make_grid(eval_points);
          return train(cfg, arch, tr, te, seed);
        },
        py::arg("arch"), py::arg("train"), py::arg("test"), py::arg("iterations"),
        py::arg("alpha") = py::none(), py::arg("eval_points") = 512,
        py::arg("linearized") = false, py::arg("seed") = 0);

  m.def("kgd_train_predictions",
        [](const Params& theta0, const Dataset& data, const ArchConfig& arch, double alpha,
           int iterations) {
          const auto set = make_training_set(data, arch);
          const auto gram = GramTensor::assemble(theta0, set.features, arch.tau);
          return kgd_run(gram, set.targets, alpha, iterations, std::max(iterations, 1))
            .final_predictions;
        },
        "F_T on the training inputs from kernel gradient descent with the NTK at theta0.");

  m.def("spectrum",
        [](const Params& theta0, const Dataset& data, const ArchConfig& arch,
           const std::vector<double>& lambdas) {
          const auto set = make_training_set(data, arch);
          const auto rep = spectral_report(GramTensor::assemble(theta0, set.features, arch.tau), lambdas);
          return py::make_tuple(rep.eigenvalues, rep.n_eff, rep.decay_exponent);
        });

  m.def("run_experiment", [](const std::string& config_json) {
    const auto out = run(ExperimentConfig::from_json(nlohmann::json::parse(config_json)));
    return py::make_tuple(out.files, out.summary.dump());
  }, "Run a CLI experiment from a JSON config; returns (files, summary JSON).");

  py::register_exception<DivergenceError>(m, "DivergenceError");
}
