#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "relu_lqr/errors.hpp"
#include "relu_lqr/experiments.hpp"
#include "relu_lqr/lqr.hpp"
#include "relu_lqr/network.hpp"
#include "relu_lqr/regime.hpp"
#include "relu_lqr/trainer.hpp"

namespace py = pybind11;
using namespace relu_lqr;

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Policy gradient for scalar LQR with a ReLU controller";

  auto error = py::register_exception<Error>(mod, "Error");
  py::register_exception<InvalidInputError>(mod, "InvalidInputError", error.ptr());
  py::register_exception<UnstableError>(mod, "UnstableError", error.ptr());
  py::register_exception<UnstableIterateError>(mod, "UnstableIterateError", error.ptr());
  py::register_exception<DegenerateWindowError>(mod, "DegenerateWindowError", error.ptr());
  py::register_exception<SchemaMismatchError>(mod, "SchemaMismatchError", error.ptr());

  py::class_<SystemSpec>(mod, "SystemSpec")
      .def(py::init<>())
      .def(py::init([](double a, double b, double q, double r, double gamma, double sigma_rho_sq,
                       double delta0) {
             return SystemSpec{a, b, q, r, gamma, sigma_rho_sq, delta0};
           }),
           py::arg("a") = 0.9, py::arg("b") = 0.1, py::arg("q") = 2.0, py::arg("r") = 0.01,
           py::arg("gamma") = 0.98, py::arg("sigma_rho_sq") = 1.0, py::arg("delta0") = 0.1)
      .def_readwrite("a", &SystemSpec::a)
      .def_readwrite("b", &SystemSpec::b)
      .def_readwrite("q", &SystemSpec::q)
      .def_readwrite("r", &SystemSpec::r)
      .def_readwrite("gamma", &SystemSpec::gamma)
      .def_readwrite("sigma_rho_sq", &SystemSpec::sigma_rho_sq)
      .def_readwrite("delta0", &SystemSpec::delta0)
      .def("validate", [](const SystemSpec& s) { validate(s); });
  mod.def("base_case", &base_case);

  py::enum_<StepRule>(mod, "StepRule")
      .value("WIDTH_SCALED", StepRule::kWidthScaled)
      .value("CONSTANT", StepRule::kConstant);

  py::class_<PiecewiseGains>(mod, "Gains")
      .def(py::init<double, double>(), py::arg("k1"), py::arg("k2"))
      .def_readwrite("k1", &PiecewiseGains::k1)
      .def_readwrite("k2", &PiecewiseGains::k2)
      .def("__repr__", [](const PiecewiseGains& g) {
        return "Gains(" + std::to_string(g.k1) + ", " + std::to_string(g.k2) + ")";
      });

  py::class_<RiccatiSolution>(mod, "RiccatiSolution")
      .def_readonly("k_star", &RiccatiSolution::k_star)
      .def_readonly("p_star", &RiccatiSolution::p_star);
  mod.def("riccati_solve", &riccati_solve, py::arg("sys"));
  mod.def("optimal_cost", &optimal_cost, py::arg("sys"), py::arg("sol"));

  mod.def(
      "value_coeffs",
      [](const SystemSpec& sys, PiecewiseGains mu) {
        const ValueCoeffs p = value_coeffs(sys, mu);
        return py::make_tuple(p.p1, p.p2, std::string(to_string(p.region)));
      },
      py::arg("sys"), py::arg("mu"), "(P1, P2, region)");
  mod.def(
      "cost", [](const SystemSpec& sys, PiecewiseGains mu) { return cost(sys, mu); },
      py::arg("sys"), py::arg("mu"));
  mod.def(
      "grad_mu",
      [](const SystemSpec& sys, PiecewiseGains mu) {
        const Vec2 g = grad_mu(sys, mu);
        return py::make_tuple(g.x1, g.x2);
      },
      py::arg("sys"), py::arg("mu"));

  py::class_<ThetaNetwork>(mod, "ThetaNetwork")
      .def(py::init<std::vector<double>, std::vector<double>>(), py::arg("w"), py::arg("v"))
      .def_readwrite("w", &ThetaNetwork::w)
      .def_readwrite("v", &ThetaNetwork::v)
      .def_property_readonly("width", &ThetaNetwork::width);
  mod.def(
      "init_network",
      [](std::size_t m, double beta, std::uint64_t seed) {
        return init_network({m, beta, std::nullopt, seed});
      },
      py::arg("m"), py::arg("beta") = 10.0, py::arg("seed") = 0);
  mod.def("effective_gains", &effective_gains, py::arg("theta"));

  py::class_<HistoryRow>(mod, "HistoryRow")
      .def_readonly("k", &HistoryRow::k)
      .def_readonly("K1", &HistoryRow::K1)
      .def_readonly("K2", &HistoryRow::K2)
      .def_readonly("J", &HistoryRow::J)
      .def_readonly("gap", &HistoryRow::gap)
      .def_readonly("grad_norm", &HistoryRow::grad_norm)
      .def_readonly("crossings", &HistoryRow::crossings)
      .def_readonly("safe", &HistoryRow::safe);

  py::class_<TrainHistory>(mod, "TrainHistory")
      .def_readonly("rows", &TrainHistory::rows)
      .def_readonly("theta_final", &TrainHistory::theta_final)
      .def_readonly("eta", &TrainHistory::eta)
      .def_readonly("J_star", &TrainHistory::J_star)
      .def_readonly("iterations", &TrainHistory::iterations)
      .def_readonly("stop_reason", &TrainHistory::stop_reason);

  mod.def(
      "train",
      [](const SystemSpec& sys, std::size_t m, double beta, std::uint64_t seed, double iota,
         StepRule step_rule, std::size_t max_iters, std::optional<double> gap_tol,
         std::size_t record_every, std::optional<ThetaNetwork> theta0) {
        TrainConfig cfg;
        cfg.sys = sys;
        cfg.init = {m, beta, std::nullopt, seed};
        cfg.iota = iota;
        cfg.step_rule = step_rule;
        cfg.max_iters = max_iters;
        cfg.gap_tol = gap_tol;
        cfg.record_every = record_every;
        cfg.theta0 = std::move(theta0);
        py::gil_scoped_release release;
        return train(cfg);
      },
      py::arg("sys"), py::arg("m") = 1000, py::arg("beta") = 10.0, py::arg("seed") = 0,
      py::arg("iota") = 0.01, py::arg("step_rule") = StepRule::kConstant,
      py::arg("max_iters") = 25000, py::arg("gap_tol") = py::none(),
      py::arg("record_every") = 1, py::arg("theta0") = py::none());

  mod.def("edge_case_network", &experiments::edge_case_network, py::arg("seed"),
          py::arg("beta") = 10.0);

  mod.def(
      "regime_ledger",
      [](const SystemSpec& sys, double beta, std::size_t m, double iota, double L_mu,
         double alpha_mu) {
        RegimeInputs inp;
        inp.sys = sys;
        inp.beta = beta;
        inp.m = m;
        inp.iota = iota;
        inp.L_mu = L_mu;
        inp.alpha_mu = alpha_mu;
        py::dict out;
        const RegimeConstants k = compute_constants(inp);
        for (const auto& [name, value] : ledger_entries(k)) out[py::str(name)] = value;
        for (const auto& [name, ok] : verdict_entries(k.verdicts)) {
          out[py::str("verdict." + name)] = ok;
        }
        out["m0"] = k.m0 ? py::cast(*k.m0) : py::none();
        return out;
      },
      py::arg("sys"), py::arg("beta"), py::arg("m"), py::arg("iota"), py::arg("L_mu"),
      py::arg("alpha_mu"));
}
