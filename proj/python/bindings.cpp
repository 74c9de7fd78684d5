#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mirrorquant/checks.hpp"
#include "mirrorquant/convex_bench.hpp"
#include "mirrorquant/harness.hpp"
#include "mirrorquant/mirror_map.hpp"
#include "mirrorquant/optimizers.hpp"
#include "mirrorquant/projections.hpp"

namespace py = pybind11;
namespace mq = mirrorquant;

namespace {

// One convex benchmark cell with the prescribed step size; constants are
// estimated on the fly, and the schedule cap is pinned to B.
py::dict run_convex(const std::string& problem, const std::string& map_name, double B, long t,
                    double beta0, double scale, long interval) {
  mq::ConvexProblem prob = mq::ConvexProblem::by_id(problem);
  mq::MirrorMap map = mq::MirrorMap::from_string(map_name);
  mq::ConvexConstants consts = mq::estimate_constants(prob, map);
  mq::ConvergenceParams params =
      mq::ConvergenceParams::prescribed(consts.R, consts.L, consts.rho, B, t);
  mq::BetaSchedule schedule{beta0, B > beta0 ? scale : 1.0, interval, B};
  mq::ConvexReport r = mq::run_md_convex(prob, map, schedule, params);

  py::dict d;
  d["problem"] = r.problem_id;
  d["map"] = r.map_name;
  d["t"] = r.t;
  d["gap"] = r.gap;
  d["bound"] = r.bound;
  d["eta"] = r.eta;
  d["beta_final"] = r.beta_final;
  d["R"] = r.R;
  d["L"] = r.L;
  d["rho"] = r.rho;
  d["B"] = r.B;
  d["ok"] = r.ok;
  return d;
}

// Training entry point over serialized JSON; the python wrapper in
// __init__.py round-trips dicts through this.
std::string train_json(const std::string& config_text) {
  mq::TrainConfig config = mq::TrainConfig::from_json(nlohmann::json::parse(config_text));
  mq::TrainResult result = mq::train(config);
  return result.summary.dump(2);
}

py::list run_checks(std::uint64_t seed) {
  py::list out;
  for (const auto& c : mq::run_all_checks(seed)) {
    py::dict d;
    d["name"] = c.name;
    d["pass"] = c.pass;
    d["worst"] = c.worst;
    d["detail"] = c.detail;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_mirrorquant, m) {
  m.doc() = "mirror-descent quantization core (C++ extension)";

  // scalar projections and their inverses/derivatives
  m.def("tanh_project", py::overload_cast<double, double>(&mq::tanh_project),
        py::arg("x"), py::arg("beta"), "tanh(beta * x)");
  m.def("tanh_project", py::overload_cast<const std::vector<double>&, double>(&mq::tanh_project),
        py::arg("x"), py::arg("beta"));
  m.def("tanh_inverse", py::overload_cast<double, double>(&mq::tanh_inverse),
        py::arg("w"), py::arg("beta"),
        "atanh(w) / beta; raises ValueError for |w| >= 1");
  m.def("tanh_inverse", py::overload_cast<const std::vector<double>&, double>(&mq::tanh_inverse),
        py::arg("w"), py::arg("beta"));
  m.def("tanh_jacobian", py::overload_cast<double, double>(&mq::tanh_jacobian),
        py::arg("x"), py::arg("beta"), "beta * (1 - tanh^2(beta x))");
  m.def("shifted_tanh_project", py::overload_cast<double, double>(&mq::shifted_tanh_project),
        py::arg("x"), py::arg("beta"),
        "(tanh(beta (x + 1/2)) + tanh(beta (x - 1/2))) / 2");
  m.def("shifted_tanh_inverse", &mq::shifted_tanh_inverse, py::arg("w"), py::arg("beta"),
        "numeric inverse of shifted_tanh_project (bisection)");
  m.def("shifted_tanh_jacobian", py::overload_cast<double, double>(&mq::shifted_tanh_jacobian),
        py::arg("x"), py::arg("beta"));
  m.def("sign_project", py::overload_cast<double>(&mq::sign_project), py::arg("x"),
        "+1 for x >= 0, -1 otherwise");

  // softmax family (vector rows)
  m.def("softmax_project", &mq::softmax_project, py::arg("u"), py::arg("beta"),
        "softmax(beta * u), max-subtracted; sums to 1");
  m.def("softmax_inverse", &mq::softmax_inverse, py::arg("u"), py::arg("beta"),
        "canonical inverse log(u) / beta; raises ValueError on nonpositive entries");
  m.def("softmax_diag_jacobian", &mq::softmax_diag_jacobian, py::arg("u"), py::arg("beta"),
        "diagonal of the softmax Jacobian, beta * u (1 - u)");

  // mirror maps
  py::class_<mq::MirrorMap>(m, "MirrorMap",
                            "strictly convex mirror map; beta enters as Phi_beta = Phi / beta")
      .def_static("from_string", &mq::MirrorMap::from_string, py::arg("name"),
                  "one of: tanh_entropy, negative_entropy, quadratic, "
                  "numeric (alias numeric_shifted_tanh)")
      .def_property_readonly("name", &mq::MirrorMap::name)
      .def("value", py::overload_cast<double, double>(&mq::MirrorMap::value, py::const_),
           py::arg("x"), py::arg("beta"))
      .def("value",
           py::overload_cast<const std::vector<double>&, double>(&mq::MirrorMap::value,
                                                                 py::const_),
           py::arg("x"), py::arg("beta"))
      .def("grad", py::overload_cast<double, double>(&mq::MirrorMap::grad, py::const_),
           py::arg("x"), py::arg("beta"))
      .def("grad",
           py::overload_cast<const std::vector<double>&, double>(&mq::MirrorMap::grad,
                                                                 py::const_),
           py::arg("x"), py::arg("beta"))
      .def("bregman", &mq::MirrorMap::bregman, py::arg("p"), py::arg("q"), py::arg("beta"),
           "D(p, q) = Phi(p) - Phi(q) - <grad Phi(q), p - q>");

  // mirror-descent updates and baselines
  m.def("md_tanh_step", py::overload_cast<double, double, double, double>(&mq::md_tanh_step),
        py::arg("w"), py::arg("g"), py::arg("eta"), py::arg("beta"),
        "closed-form tanh mirror step, tanh(atanh(w) - beta eta g)");
  m.def("md_tanh_step",
        py::overload_cast<const std::vector<double>&, const std::vector<double>&, double, double>(
            &mq::md_tanh_step),
        py::arg("w"), py::arg("g"), py::arg("eta"), py::arg("beta"));
  m.def("md_softmax_step", &mq::md_softmax_step, py::arg("u"), py::arg("g"), py::arg("eta"),
        py::arg("beta"),
        "exponentiated-gradient step u e^{-beta eta g} / Z on the simplex");
  m.def("pgd_step", &mq::pgd_step, py::arg("x"), py::arg("g"), py::arg("eta"), py::arg("lo"),
        py::arg("hi"), "projected gradient step onto the box [lo, hi]");

  // schedules
  m.def(
      "anneal_beta",
      [](long k, double beta0, double scale, long interval, double cap) {
        mq::BetaSchedule s{beta0, scale, interval, cap};
        s.validate();
        return mq::anneal_beta(s, k);
      },
      py::arg("k"), py::arg("beta0") = 1.0, py::arg("scale") = 1.02, py::arg("interval") = 200,
      py::arg("cap") = 1e4, "beta_k = min(cap, beta0 * scale^floor(k / interval))");
  m.def(
      "eta_at",
      [](long k, double eta0, double lr_scale, long lr_interval) {
        mq::StepSizeSchedule s{eta0, lr_scale, lr_interval};
        s.validate();
        return mq::eta_at(s, k);
      },
      py::arg("k"), py::arg("eta0") = 1e-3, py::arg("lr_scale") = 0.3,
      py::arg("lr_interval") = 30000, "eta_k = eta0 * lr_scale^floor(k / lr_interval)");

  // saturation threshold and rounding
  m.def("epsilon_gamma", &mq::epsilon_gamma, py::arg("B"), py::arg("eps"),
        "gamma = atanh(1 - eps) / B: |x| >= gamma gives 1 - |tanh(B x)| <= eps");
  m.def(
      "finalize_quantize_w",
      [](const std::vector<double>& w, const std::vector<double>& levels) {
        mq::QuantLevels q{levels};
        q.validate();
        return mq::finalize_quantize_w(w, q);
      },
      py::arg("w"), py::arg("levels"), "round each parameter to the nearest level");
  m.def(
      "finalize_quantize_u",
      [](const std::vector<double>& u, const std::vector<double>& levels) {
        mq::QuantLevels q{levels};
        q.validate();
        return mq::finalize_quantize_u(u, q);
      },
      py::arg("u"), py::arg("levels"),
      "per-parameter argmax over row-major simplex rows (first max wins)");

  // benchmarks, training, self-checks
  m.def("run_convex", &run_convex, py::arg("problem"), py::arg("map"), py::arg("B"),
        py::arg("t"), py::arg("beta0") = 1.0, py::arg("scale") = 1.05, py::arg("interval") = 100,
        "run one annealed-MD convex cell; returns gap/bound/constants as a dict");
  m.def("train_json", &train_json, py::arg("config_json"),
        "train from a JSON config string; returns the summary JSON string");
  m.def("run_checks", &run_checks, py::arg("seed") = 1234,
        "run every built-in invariant check; returns a list of result dicts");
}
