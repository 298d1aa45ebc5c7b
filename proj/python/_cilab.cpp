#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cilab/accuracy.hpp"
#include "cilab/dynamics.hpp"
#include "cilab/harness.hpp"
#include "cilab/mc.hpp"
#include "cilab/rewards.hpp"
#include "cilab/stability.hpp"

namespace py = pybind11;
using namespace cilab;

namespace {

RewardSpec spec_of(const std::string& scheme, double epsilon) {
  RewardSpec s{parse_scheme(scheme), epsilon};
  s.validate();
  return s;
}

py::dict trajectory_dict(const Trajectory& tr) {
  py::dict d;
  d["times"] = tr.times;
  d["accuracy"] = tr.accuracy;
  d["diversity"] = tr.diversity;
  std::vector<std::vector<double>> states;
  states.reserve(tr.states.size());
  for (const auto& s : tr.states) states.emplace_back(s.values().begin(), s.values().end());
  d["states"] = std::move(states);
  if (tr.converged_at) {
    d["converged_at"] = *tr.converged_at;
  } else {
    d["converged_at"] = py::none();
  }
  return d;
}

std::vector<std::pair<double, double>> estimates(const std::vector<McEstimate>& est) {
  std::vector<std::pair<double, double>> out;
  for (const auto& e : est) out.emplace_back(e.value, e.std_error);
  return out;
}

}  // namespace

PYBIND11_MODULE(_cilab, m) {
  m.doc() = "Reward schemes and collective accuracy of attention allocations";

  py::register_exception<Error>(m, "CilabError", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

  py::class_<FactorModel>(m, "FactorModel")
      .def_static("from_weights", &FactorModel::from_weights, py::arg("weights"))
      .def_static("sample", &sample_factor_weights, py::arg("n"), py::arg("seed"),
                  "Uniform random weights normalised to one, sorted descending")
      .def(
          "with_blocks",
          [](const FactorModel& self, std::size_t block_size, double c) {
            return self.with_covariance(Covariance::block_equicorrelated(self.size(), block_size, c));
          },
          py::arg("block_size"), py::arg("c"))
      .def_property_readonly("beta", [](const FactorModel& self) {
        return std::vector<double>(self.beta().begin(), self.beta().end());
      })
      .def_property_readonly("independent", &FactorModel::independent)
      .def("__len__", &FactorModel::size);

  m.def(
      "expected_rewards",
      [](const FactorModel& model, std::vector<double> rho, const std::string& scheme, const std::string& mode,
         double epsilon) {
        RewardOptions opt;
        opt.mode = parse_reward_mode(mode);
        return expected_rewards(model, Attention(std::move(rho)), spec_of(scheme, epsilon), opt).values;
      },
      py::arg("model"), py::arg("rho"), py::arg("scheme"), py::arg("mode") = "auto", py::arg("epsilon") = 1e-6);

  m.def(
      "collective_accuracy",
      [](const FactorModel& model, std::vector<double> rho, const std::string& method) {
        const Attention a(std::move(rho));
        if (method == "auto") return collective_accuracy(model, a);
        if (method == "exact") return collective_accuracy_exact(model, a);
        if (method == "approx") return collective_accuracy_approx(model, a);
        if (method == "sparse") return collective_accuracy_sparse(model, a);
        if (method == "integral") return collective_accuracy_double_integral(model, a);
        throw InvalidArgument("unknown accuracy method '" + method + "'");
      },
      py::arg("model"), py::arg("rho"), py::arg("method") = "auto");

  m.def(
      "diversity", [](std::vector<double> rho) { return diversity(Attention(std::move(rho))); }, py::arg("rho"));

  m.def(
      "integrate",
      [](const FactorModel& model, const std::string& scheme, py::object init, double t_max, double rel_tol,
         double abs_tol, double epsilon) {
        IntegratorConfig cfg;
        cfg.t_max = t_max;
        cfg.rel_tol = rel_tol;
        cfg.abs_tol = abs_tol;
        const Attention start = py::isinstance<py::str>(init)
                                    ? initial_allocation(model.size(), parse_init(init.cast<std::string>()))
                                    : Attention(init.cast<std::vector<double>>());
        Trajectory tr;
        {
          py::gil_scoped_release release;
          tr = integrate(model, spec_of(scheme, epsilon), start, cfg);
        }
        return trajectory_dict(tr);
      },
      py::arg("model"), py::arg("scheme"), py::arg("init") = "uniform", py::arg("t_max") = IntegratorConfig{}.t_max,
      py::arg("rel_tol") = IntegratorConfig{}.rel_tol, py::arg("abs_tol") = IntegratorConfig{}.abs_tol,
      py::arg("epsilon") = 1e-6);

  m.def(
      "mc_expected_rewards",
      [](const FactorModel& model, std::vector<double> rho, const std::string& scheme, std::size_t samples,
         std::uint64_t seed, unsigned threads) {
        const Attention a(std::move(rho));
        const auto spec = spec_of(scheme, 1e-6);
        std::vector<McEstimate> est;
        {
          py::gil_scoped_release release;
          est = mc_expected_rewards(model, a, spec, samples, seed, threads);
        }
        return estimates(est);
      },
      py::arg("model"), py::arg("rho"), py::arg("scheme"), py::arg("samples"), py::arg("seed") = 0,
      py::arg("threads") = 1, "List of (mean, standard error) per factor");

  m.def(
      "mc_accuracy",
      [](const FactorModel& model, std::vector<double> rho, std::size_t samples, std::uint64_t seed) {
        const auto e = mc_accuracy(model, Attention(std::move(rho)), samples, seed);
        return std::make_pair(e.value, e.std_error);
      },
      py::arg("model"), py::arg("rho"), py::arg("samples"), py::arg("seed") = 0);

  m.def(
      "stationarity_check",
      [](const FactorModel& model, const std::string& scheme, std::vector<double> rho) {
        return stationarity_check(model, spec_of(scheme, 1e-6), Attention(std::move(rho)));
      },
      py::arg("model"), py::arg("scheme"), py::arg("rho"));

  m.def(
      "two_factor_perturbation",
      [](const FactorModel& model, std::size_t i, std::size_t j, double delta, std::size_t samples,
         std::uint64_t seed) {
        const auto r = two_factor_perturbation(model, i, j, delta, {samples, seed});
        py::dict d;
        d["predicted_rate"] = r.report.predicted_rate;
        d["measured_rate"] = r.report.measured_rate;
        d["relative_error"] = r.report.relative_error;
        d["passed"] = r.report.passed;
        d["std_error"] = r.measured_std_error;
        d["restoring"] = r.restoring;
        return d;
      },
      py::arg("model"), py::arg("i"), py::arg("j"), py::arg("delta"), py::arg("samples") = 1000000,
      py::arg("seed") = 0);

  m.def(
      "finite_population_run",
      [](const FactorModel& model, const std::string& scheme, std::size_t population, std::size_t rounds,
         double imitation_rate, std::uint64_t seed) {
        FinitePopulationConfig cfg;
        cfg.population = population;
        cfg.rounds = rounds;
        cfg.imitation_rate = imitation_rate;
        cfg.seed = seed;
        Trajectory tr;
        {
          py::gil_scoped_release release;
          tr = finite_population_run(model, spec_of(scheme, 1e-6), cfg);
        }
        return trajectory_dict(tr);
      },
      py::arg("model"), py::arg("scheme"), py::arg("population") = 100000, py::arg("rounds") = 20000,
      py::arg("imitation_rate") = 0.05, py::arg("seed") = 0);

  m.attr("__version__") = std::string(version());
}
