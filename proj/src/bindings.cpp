#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "mskfit/datagen.hpp"
#include "mskfit/dynamics.hpp"
#include "mskfit/experiment.hpp"
#include "mskfit/muscle.hpp"
#include "mskfit/physics.hpp"
#include "mskfit/trainer.hpp"
#include "mskfit/wavelet.hpp"

namespace py = pybind11;
using namespace mskfit;

namespace {

TimeSeries make_series(double dt, const std::vector<double>& values) {
    return TimeSeries(dt, values);
}

py::dict trial_to_dict(const Trial& tr) {
    py::dict d;
    d["dt"] = tr.q.dt;
    d["emg_bi"] = tr.e_bi.values;
    d["emg_tri"] = tr.e_tri.values;
    d["q"] = tr.q.values;
    return d;
}

}  // namespace

PYBIND11_MODULE(_mskfit, m) {
    m.doc() = "sEMG-driven elbow motion surrogate with wavelet multi-scale training";

    // ---- wavelet ----
    py::class_<wavelet::WaveletFilter>(m, "WaveletFilter")
        .def_readonly("lowpass", &wavelet::WaveletFilter::lowpass)
        .def_readonly("highpass", &wavelet::WaveletFilter::highpass);
    m.def("build_db2_filter", &wavelet::build_db2_filter);
    m.def(
        "project_to_scale",
        [](const std::vector<double>& x, double dt, int j) {
            const auto f = wavelet::build_db2_filter();
            return wavelet::project_to_scale(make_series(dt, x), j, f).values;
        },
        py::arg("signal"), py::arg("dt"), py::arg("j"));
    m.def(
        "wavelet_roundtrip",
        [](const std::vector<double>& x, double dt, int depth) {
            const auto f = wavelet::build_db2_filter();
            const auto pyr = wavelet::decompose(make_series(dt, x), depth, f);
            return wavelet::reconstruct(pyr, f).values;
        },
        py::arg("signal"), py::arg("dt"), py::arg("depth"));
    m.def(
        "decompose_bands",
        [](const std::vector<double>& x, double dt, int depth) {
            const auto f = wavelet::build_db2_filter();
            const auto pyr = wavelet::decompose(make_series(dt, x), depth, f);
            py::dict d;
            d["base"] = pyr.base;
            d["details"] = pyr.details;
            d["original_length"] = pyr.original_length;
            return d;
        },
        py::arg("signal"), py::arg("dt"), py::arg("depth"));

    // ---- muscle ----
    m.def("activation", &muscle::activation, py::arg("u"), py::arg("shape"));
    m.def("active_force_length", &muscle::active_force_length);
    m.def("passive_force_length", &muscle::passive_force_length);
    m.def("force_velocity", &muscle::force_velocity);

    // ---- dynamics ----
    m.def(
        "solve_forward",
        [](const std::vector<double>& e_bi, const std::vector<double>& e_tri, double dt) {
            const dynamics::ElbowSetup setup;
            return dynamics::solve_forward(make_series(dt, e_bi), make_series(dt, e_tri), setup.q0,
                                           setup.qdot0, setup.geometry, setup.kappa_bi,
                                           setup.kappa_tri, setup.activation)
                .values;
        },
        py::arg("emg_bi"), py::arg("emg_tri"), py::arg("dt"),
        "Forward dynamics of the default elbow setup");
    m.def(
        "solve_pendulum",
        [](double q0, std::size_t samples, double dt) {
            const dynamics::ElbowGeometry geo;
            return dynamics::solve_pendulum(q0, 0.0, geo, samples, dt).q.values;
        },
        py::arg("q0"), py::arg("samples"), py::arg("dt"));

    // ---- metrics ----
    m.def(
        "metrics",
        [](const std::vector<double>& q, const std::vector<double>& q_hat) {
            const auto r = physics::metrics(q, q_hat);
            py::dict d;
            d["mse"] = r.mse;
            d["r2"] = r.r2;
            d["nmse"] = r.nmse;
            return d;
        },
        py::arg("q"), py::arg("q_hat"));

    // ---- data generation ----
    m.def(
        "build_verification_set",
        [](double sigma, std::uint64_t seed, std::size_t n, double dt) {
            const auto v = datagen::build_verification_set(sigma, seed, n, dt);
            py::list trials;
            for (const auto& tr : v.set.trials) trials.append(trial_to_dict(tr));
            py::dict d;
            d["trials"] = trials;
            d["train_ids"] = v.train_ids;
            d["test_ids"] = v.test_ids;
            return d;
        },
        py::arg("sigma"), py::arg("seed") = 42, py::arg("n") = 500, py::arg("dt") = 0.005);

    // ---- experiments (JSON string interface) ----
    m.def("default_spec",
          []() { return experiment::ExperimentSpec{}.to_json_text(); });
    m.def(
        "run_training",
        [](const std::string& spec_json, int threads) {
            const auto spec = experiment::ExperimentSpec::from_json_text(spec_json);
            const auto data = datagen::build_verification_set(spec.datagen.sigma, spec.datagen.seed,
                                                              spec.datagen.samples, spec.datagen.dt,
                                                              spec.train.setup);
            std::vector<Trial> train, test;
            for (int id : spec.train.train_trials) train.push_back(data.set.trials.at(id - 1));
            for (int id : spec.train.test_trials) test.push_back(data.set.trials.at(id - 1));
            const auto outcomes = trainer::run_seeds(train, test, spec.train, threads);
            py::list out;
            for (const auto& oc : outcomes) {
                py::dict d;
                d["seed"] = oc.seed;
                d["diverged"] = oc.diverged;
                if (!oc.diverged) {
                    d["test_mse"] = oc.result.eval.average.mse;
                    d["test_r2"] = oc.result.eval.average.r2;
                    d["test_nmse"] = oc.result.eval.average.nmse;
                    py::dict ident;
                    for (std::size_t l = 0; l < 4; ++l) {
                        ident[physics::IdentTargets::names[l]] = oc.result.eval.gamma[l];
                    }
                    d["identified"] = ident;
                }
                out.append(d);
            }
            return out;
        },
        py::arg("spec_json"), py::arg("threads") = 1);
}
