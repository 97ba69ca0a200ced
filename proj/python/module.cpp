#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spdelab/dynamics.hpp"
#include "spdelab/experiments.hpp"
#include "spdelab/fem.hpp"
#include "spdelab/noise.hpp"
#include "spdelab/runner.hpp"
#include "spdelab/spectral.hpp"

#include <nlohmann/json.hpp>

namespace py = pybind11;
using namespace spdelab;

PYBIND11_MODULE(_spdelab, m) {
    m.doc() = "semilinear stochastic heat equation discretization laboratory";
    m.attr("__version__") = kVersion;

    py::class_<SpectralModel>(m, "SpectralModel")
        .def_static("dirichlet", &SpectralModel::dirichlet, py::arg("modes"))
        .def_readonly("modes", &SpectralModel::modes)
        .def_readonly("eigenvalues", &SpectralModel::eigenvalues)
        .def("evaluate", &SpectralModel::evaluate);

    m.def("semigroup_apply", &semigroup_apply);
    m.def("frac_power_apply", &frac_power_apply);
    m.def("smoothing_probe", &smoothing_probe);

    py::class_<NoiseModel>(m, "NoiseModel")
        .def_static("power_decay", &NoiseModel::power_decay, py::arg("alpha"),
                    py::arg("modes"))
        .def_readonly("alpha", &NoiseModel::alpha)
        .def_readonly("modes", &NoiseModel::modes)
        .def("beta_max", &NoiseModel::beta_max);

    m.def("admissible_beta", &admissible_beta);
    m.def("weighted_hs_norm", &weighted_hs_norm);
    m.def("normal_draw", &normal_draw);
    m.def("increments", &increments, py::arg("noise"), py::arg("seed"),
          py::arg("sample"), py::arg("level_m"), py::arg("n"), py::arg("k_fine"),
          py::arg("n_fine"));

    py::class_<Mesh>(m, "Mesh")
        .def_static("uniform", &Mesh::uniform)
        .def_readonly("interior_nodes", &Mesh::interior_nodes)
        .def_readonly("spacing", &Mesh::spacing);

    py::class_<FemOperators>(m, "FemOperators")
        .def_static("assemble", &FemOperators::assemble, py::arg("interior_nodes"))
        .def("eigenvalues", &FemOperators::eigenvalues,
             py::return_value_policy::copy)
        .def("eigenvalue_closed_form", &FemOperators::eigenvalue_closed_form)
        .def("dim", &FemOperators::dim);

    py::class_<SecondMoment>(m, "SecondMoment")
        .def_readonly("exact", &SecondMoment::exact)
        .def_readonly("discrete", &SecondMoment::discrete);
    m.def("second_moment_linear", &second_moment_linear);

    py::class_<RateFit>(m, "RateFit")
        .def_readonly("slope", &RateFit::slope)
        .def_readonly("intercept", &RateFit::intercept)
        .def_readonly("residual_sum", &RateFit::residual_sum)
        .def_readonly("points", &RateFit::points);
    m.def("fit_rate", &fit_rate, py::arg("points"), py::arg("abscissa") = "scale");

    py::class_<GronwallVerdict>(m, "GronwallVerdict")
        .def_readonly("hypothesis_holds", &GronwallVerdict::hypothesis_holds)
        .def_readonly("first_violation", &GronwallVerdict::first_violation)
        .def_readonly("constant", &GronwallVerdict::constant);
    m.def("gronwall_check", &gronwall_check);

    m.def("run_experiment", [](const std::string& config_json, bool asserts) {
        const auto res =
            run_experiment(nlohmann::json::parse(config_json), asserts);
        return py::make_tuple(res.exit_code, res.message, res.csv_path);
    });
}
