// Python bindings: a thin layer over the C++ library. Matrices cross as
// NumPy float64 arrays; library errors surface as ojastream.OjaError.
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "oja/engine.hpp"
#include "oja/harness.hpp"
#include "oja/subspace.hpp"
#include "oja/theory.hpp"

namespace py = pybind11;
using namespace oja;

namespace {

NormKind norm_kind(const std::string& name) {
  if (name == "fro" || name == "frobenius") return NormKind::Frobenius;
  if (name == "2" || name == "spectral") return NormKind::Spectral;
  throw Error(ErrorCode::InvalidArgument, "norm must be 'fro' or 'spectral'");
}

}  // namespace

PYBIND11_MODULE(_ojastream, m) {
  m.doc() = "Streaming Oja subspace estimation";

  static py::exception<Error> oja_error(m, "OjaError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      // Message starts with the error code, e.g. "GapViolation: ...".
      PyErr_SetString(oja_error.ptr(), e.what());
    }
  });

  py::class_<CovSpec>(m, "CovSpec")
      .def_readonly("lambdas", &CovSpec::lambdas)
      .def_readonly("p", &CovSpec::p)
      .def_readonly("q", &CovSpec::q)
      .def_readonly("rotation", &CovSpec::rotation)
      .def_property_readonly("dim", &CovSpec::dim)
      .def_property_readonly("gap", &CovSpec::gap)
      .def_property_readonly("family", [](const CovSpec& s) { return std::string(to_string(s.family)); })
      .def("principal_basis", py::overload_cast<>(&CovSpec::principal_basis, py::const_))
      .def("covariance", &CovSpec::covariance);

  m.def(
      "make_spec",
      [](const Vector& lambdas, std::size_t p, std::optional<std::uint64_t> rotation_seed, const std::string& family,
         std::optional<std::size_t> q) { return make_spec(lambdas, p, rotation_seed, family_from_string(family), q); },
      py::arg("lambdas"), py::arg("p"), py::arg("rotation_seed") = py::none(), py::arg("family") = "gaussian",
      py::arg("q") = py::none());
  m.def(
      "draw_samples", [](const CovSpec& s, std::uint64_t seed, std::size_t n) { return draw_samples(s, seed, n); },
      py::arg("spec"), py::arg("seed"), py::arg("n"));

  py::class_<Schedule>(m, "Schedule")
      .def_static("constant", &Schedule::constant, py::arg("eta"))
      .def_static("harmonic", &Schedule::harmonic, py::arg("c_eta"), py::arg("gamma_ref"))
      .def_static("two_phase", &Schedule::two_phase, py::arg("n_o"), py::arg("c_o_prime"), py::arg("c_eta"),
                  py::arg("gamma"), py::arg("d"), py::arg("delta"))
      .def("rate", &Schedule::rate)
      .def("__repr__", &Schedule::describe);

  py::class_<Normalizer>(m, "Normalizer")
      .def_static("qr", &Normalizer::qr)
      .def_static("polar", &Normalizer::polar)
      .def_static("deferred", &Normalizer::deferred, py::arg("period") = 10, py::arg("guard") = 0.1)
      .def("__repr__", &Normalizer::describe);

  py::class_<OjaState>(m, "OjaState")
      .def_readonly("u", &OjaState::u)
      .def_readonly("n", &OjaState::n)
      .def_readonly("normalized", &OjaState::normalized);

  m.def("init_state", &init_state, py::arg("d"), py::arg("p"), py::arg("seed"));
  m.def(
      "step", [](const OjaState& s, const Vector& x, double eta, const Normalizer& n) { return step(s, x, eta, n); },
      py::arg("state"), py::arg("x"), py::arg("eta"), py::arg("normalizer") = Normalizer::qr());

  // Runs on a synthetic stream (spec given) or on the rows of a sample matrix.
  m.def(
      "run",
      [](const OjaState& init, const CovSpec* spec, std::optional<Matrix> samples, std::size_t n_steps,
         const Schedule& schedule, const Normalizer& normalizer, std::uint64_t seed) {
        RunOptions opts;
        opts.seed = seed;
        opts.checkpoints = {n_steps};
        RunResult r;
        if (samples) {
          MatrixSource src(*samples);
          r = run(init, src, n_steps, schedule, normalizer, opts);
        } else {
          if (!spec) throw Error(ErrorCode::InvalidArgument, "run needs a spec or a sample matrix");
          SyntheticStream src(*spec, seed, n_steps);
          r = run(init, src, n_steps, schedule, normalizer, opts);
        }
        return r.state;
      },
      py::arg("init"), py::arg("spec") = nullptr, py::arg("samples") = py::none(), py::arg("n_steps"),
      py::arg("schedule") = Schedule(), py::arg("normalizer") = Normalizer::qr(), py::arg("seed") = 0);

  m.def("principal_angles", [](const Matrix& x, const Matrix& y) { return principal_angles(x, y).angles; });
  m.def(
      "sin_theta", [](const Matrix& x, const Matrix& y, const std::string& k) { return sin_theta_norm(x, y, norm_kind(k)); },
      py::arg("x"), py::arg("y"), py::arg("norm") = "fro");
  m.def(
      "tan_theta", [](const Matrix& x, const Matrix& y, const std::string& k) { return tan_theta_norm(x, y, norm_kind(k)); },
      py::arg("x"), py::arg("y"), py::arg("norm") = "fro");
  m.def(
      "chart", [](const Matrix& v, std::optional<std::size_t> q) { return q ? scrT(v, *q) : scrT(v); }, py::arg("v"),
      py::arg("q") = py::none());

  m.def("phi", [](const Vector& l, std::size_t p) { return phi(l, p).phi; }, py::arg("lambdas"), py::arg("p"));
  m.def(
      "phi_gap_free", [](const Vector& l, std::size_t p, std::size_t q, double g) { return phi_gap_free(l, p, q, g).phi; },
      py::arg("lambdas"), py::arg("p"), py::arg("q"), py::arg("gamma_tilde"));
  m.def(
      "minimax_lower_bound",
      [](const Vector& l, std::size_t p, std::size_t q, std::size_t n, double c) {
        return minimax_lower_bound(l, p, q, n, c).value;
      },
      py::arg("lambdas"), py::arg("p"), py::arg("q"), py::arg("n"), py::arg("c") = 1.0);
  m.def(
      "offline_pca", [](const Matrix& x, std::size_t p) { return offline_pca(x, p).basis; }, py::arg("samples"),
      py::arg("p"));
  m.def("N_o_formula", &N_o_formula, py::arg("p"), py::arg("B"), py::arg("delta"), py::arg("gamma"), py::arg("d"),
        py::arg("c_o") = 1.0);

  // Whole experiment from a JSON config string; returns the JSON summary text.
  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const ExperimentConfig cfg = parse_config_text(config_json);
        ExperimentResult res;
        {
          py::gil_scoped_release release;
          res = run_experiment(cfg);
        }
        return summary_json(cfg, res).dump();
      },
      py::arg("config_json"));
}
