#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "koopmatch/catalog.hpp"
#include "koopmatch/dictlearn.hpp"
#include "koopmatch/edmdm.hpp"
#include "koopmatch/jobs.hpp"
#include "koopmatch/laplace.hpp"

namespace py = pybind11;
using namespace koop;

namespace {

SystemSpec system_from_json(const std::string& id, const std::string& params_json) {
    return catalog::make_system(id, params_json.empty()
                                        ? nlohmann::json::object()
                                        : nlohmann::json::parse(params_json));
}

EigenStack stack_from_json(const std::string& id, const std::string& params_json) {
    return catalog_eigenstack(id, params_json.empty() ? nlohmann::json::object()
                                                      : nlohmann::json::parse(params_json));
}

}  // namespace

PYBIND11_MODULE(_koopmatch, m) {
    m.doc() = "Matching dynamical systems through Koopman eigenfunctions";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

    py::class_<SystemSpec>(m, "SystemSpec")
        .def_readonly("id", &SystemSpec::id)
        .def_readonly("dim", &SystemSpec::dim)
        .def_readonly("params", &SystemSpec::params)
        .def("field", [](const SystemSpec& s, const Vec& x) { return evaluate_field(s, x); })
        .def("flow", [](const SystemSpec& s, const Vec& x, double t) { return flow(s, x, t, 1e-10); });

    m.def("make_system", &system_from_json, py::arg("id"), py::arg("params_json") = "");

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("times", &Trajectory::times)
        .def_readonly("states", &Trajectory::states)
        .def_readonly("terminated_early", &Trajectory::terminated_early)
        .def_readonly("reason", &Trajectory::reason);

    m.def(
        "integrate",
        [](const SystemSpec& sys, const Vec& x0, double t_end, double tol) {
            return integrate(sys, x0, t_end, tol);
        },
        py::arg("sys"), py::arg("x0"), py::arg("t_end"), py::arg("tol") = 1e-10);

    py::class_<SamplePairs>(m, "SamplePairs")
        .def_readonly("x", &SamplePairs::x)
        .def_readonly("x_next", &SamplePairs::x_next)
        .def_readonly("dt", &SamplePairs::dt)
        .def_readonly("discarded", &SamplePairs::discarded);

    m.def(
        "sample_pairs",
        [](const SystemSpec& sys, const Vec& lo, const Vec& hi, int n, double dt,
           std::uint64_t seed) { return sample_pairs(sys, lo, hi, n, dt, seed); },
        py::arg("sys"), py::arg("lo"), py::arg("hi"), py::arg("n"), py::arg("dt"),
        py::arg("seed"));

    py::class_<Eigenfunction>(m, "Eigenfunction")
        .def_property_readonly("lam", [](const Eigenfunction& g) { return g.lambda; })
        .def("__call__", [](const Eigenfunction& g, const Vec& x) { return g.eval(x); });

    py::class_<EigenStack>(m, "EigenStack")
        .def_property_readonly("eigenvalues", &EigenStack::eigenvalues)
        .def("value", &EigenStack::value)
        .def_property_readonly("dim", &EigenStack::dim)
        .def_property_readonly("entries", [](const EigenStack& s) { return s.entries; });

    m.def("catalog_eigenstack", &stack_from_json, py::arg("id"), py::arg("params_json") = "");
    m.def("keig_1d_quadrature", &keig_1d_quadrature);
    m.def(
        "keig_residual",
        [](const SystemSpec& sys, const Eigenfunction& g, const std::vector<Vec>& pts) {
            return keig_residual(sys, g, pts);
        });

    py::class_<TransformMap>(m, "TransformMap")
        .def("__call__", [](const TransformMap& t, const Vec& x) { return t.forward(x); })
        .def("inverse", [](const TransformMap& t, const Vec& y) {
            if (!t.has_inverse()) throw ValidationError("transform has no inverse");
            return t.inverse(y);
        })
        .def("in_domain", &TransformMap::in_domain)
        .def("jacobian", &TransformMap::jacobian)
        .def_readonly("label", &TransformMap::label);

    m.def(
        "build_match",
        [](const EigenStack& g1, const EigenStack& g2) { return build_match(g1, g2); },
        py::arg("g1"), py::arg("g2"));
    m.def(
        "conjugacy_defect",
        [](const TransformMap& h, const SystemSpec& s1, const SystemSpec& s2,
           const std::vector<Vec>& samples, double horizon, int steps) {
            DefectResult r = conjugacy_defect(h, s1, s2, samples, horizon, steps);
            return py::make_tuple(r.defect, r.retained, r.skipped);
        });
    m.def("pushforward_field", &pushforward_field);
    m.def("compose", [](const TransformMap& o, const TransformMap& i) { return compose(o, i); });
    m.def("identity_map", &identity_map);

    py::class_<Dictionary>(m, "Dictionary")
        .def_readonly("n", &Dictionary::n)
        .def_readonly("fixed_prefix", &Dictionary::fixed_prefix)
        .def("__call__", [](const Dictionary& d, const Vec& z) { return d.eval(z); })
        .def("evaluate", &Dictionary::evaluate);

    m.def("multinomial_dictionary", &multinomial_dictionary, py::arg("d") = 2,
          py::arg("max_index") = 9);
    m.def("cantor_pair", &cantor_pair);

    py::class_<KoopmanMatrix>(m, "KoopmanMatrix")
        .def_readonly("k", &KoopmanMatrix::k)
        .def_readonly("dt", &KoopmanMatrix::dt)
        .def_property_readonly("mode", [](const KoopmanMatrix& k) {
            return k.mode == KoopmanMatrix::Mode::generator ? "generator" : "discrete";
        });

    m.def("project_generator", &project_generator);
    m.def("project_generator_truncated", &project_generator_truncated);
    m.def("edmd_fit", &edmd_fit);

    py::class_<SpectralDecomposition>(m, "SpectralDecomposition")
        .def_readonly("eigenvalues", &SpectralDecomposition::eigenvalues)
        .def_readonly("left_vectors", &SpectralDecomposition::left_vectors)
        .def_readonly("distinct", &SpectralDecomposition::distinct)
        .def_readonly("min_gap", &SpectralDecomposition::min_gap);

    m.def("left_eigens", &left_eigens);
    m.def("pair_spectra", &pair_spectra);

    py::class_<MatchingPoint>(m, "MatchingPoint")
        .def(py::init([](const Vec& z1, const Vec& z2) {
            return MatchingPoint{z1, z2};
        }))
        .def_readonly("z1", &MatchingPoint::z1)
        .def_readonly("z2", &MatchingPoint::z2);

    py::class_<MatchResult>(m, "MatchResult")
        .def_readonly("d_diag", &MatchResult::d_diag)
        .def_readonly("h_matrix", &MatchResult::h_matrix)
        .def_readonly("h_map", &MatchResult::h_map)
        .def_readonly("similarity_residual", &MatchResult::similarity_residual)
        .def_readonly("distinct_spectra", &MatchResult::distinct_spectra);

    m.def(
        "edmdm_pipeline",
        [](const KoopmanMatrix& k1, const KoopmanMatrix& k2, const Dictionary& dict,
           const MatchingPoint& mp, double pair_tol) {
            EdmdmOptions opts;
            opts.pair_tol = pair_tol;
            return edmdm_pipeline(k1, k2, dict, mp, opts);
        },
        py::arg("k1"), py::arg("k2"), py::arg("dict"), py::arg("mp"),
        py::arg("pair_tol") = 1e-6);

    py::class_<MlpDictionary>(m, "MlpDictionary")
        .def_static("init", &MlpDictionary::init)
        .def("as_dictionary", &MlpDictionary::as_dictionary)
        .def("flatten", &MlpDictionary::flatten)
        .def_property_readonly("n", &MlpDictionary::n);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("lr", &TrainConfig::lr)
        .def_readwrite("ridge", &TrainConfig::ridge)
        .def_readwrite("beta", &TrainConfig::beta)
        .def_readwrite("iters", &TrainConfig::iters)
        .def_readwrite("sim_every", &TrainConfig::sim_every)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("width", &TrainConfig::width);

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("dict", &TrainResult::dict)
        .def_readonly("k1", &TrainResult::k1)
        .def_readonly("k2", &TrainResult::k2)
        .def_property_readonly("loss_history",
                               [](const TrainResult& r) { return r.history.loss; });

    m.def("train", &train);
    m.def("grad_check", &grad_check);
    m.def("combined_loss",
          [](const KoopmanMatrix& k1, const KoopmanMatrix& k2, const Dictionary& dict,
             const SamplePairs& d1, const SamplePairs& d2) {
              return combined_loss(k1, k2, dict, d1, d2);
          });
    m.def("similarity_step",
          [](const KoopmanMatrix& k1, const KoopmanMatrix& k2, const Dictionary& dict,
             const SamplePairs& d1, const SamplePairs& d2, double beta,
             std::uint64_t seed) {
              auto [o1, o2, st] = similarity_step(k1, k2, dict, d1, d2, beta, seed);
              return py::make_tuple(o1, o2, st.p, st.residual, st.cond);
          });

    m.def(
        "laplace_average",
        [](const SystemSpec& sys, const std::string& observable, const Complex& lambda,
           double horizon, const std::string& direction, double step, const Vec& x) {
            LaplaceConfig cfg;
            if (observable == "x1")
                cfg.observable = [](const Vec& p) { return p[0]; };
            else if (observable == "x2")
                cfg.observable = [](const Vec& p) { return p[1]; };
            else if (observable == "norm")
                cfg.observable = [](const Vec& p) { return p.norm(); };
            else
                throw ValidationError("unknown observable");
            cfg.lambda = lambda;
            cfg.horizon = horizon;
            cfg.direction = direction == "backward" ? LaplaceConfig::Direction::backward
                                                    : LaplaceConfig::Direction::forward;
            cfg.step = step;
            return laplace_average(cfg, sys, x);
        },
        py::arg("sys"), py::arg("observable"), py::arg("lam"), py::arg("horizon"),
        py::arg("direction"), py::arg("step"), py::arg("x"));

    m.def(
        "run_job",
        [](const std::string& config_json, const std::string& out_dir) {
            RunReport r = run_job(nlohmann::json::parse(config_json), out_dir);
            return py::make_tuple(r.exit_code, r.status, r.metrics.dump());
        },
        py::arg("config_json"), py::arg("out_dir"));
    m.def(
        "reproduce",
        [](const std::string& name, const std::string& out_dir) {
            RunReport r = reproduce(name, out_dir);
            return py::make_tuple(r.exit_code, r.status, r.metrics.dump());
        },
        py::arg("name"), py::arg("out_dir"));
}
