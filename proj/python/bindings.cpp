#include "adns/bounds.hpp"
#include "adns/commands.hpp"
#include "adns/config.hpp"
#include "adns/error.hpp"
#include "adns/linalg.hpp"
#include "adns/metrics.hpp"
#include "adns/nullspace.hpp"
#include "adns/report.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace adns;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

DenseMatrix to_matrix(const Array& a) {
    if (a.ndim() != 2) throw ValidationError("expected a 2-d array");
    const auto rows = static_cast<std::size_t>(a.shape(0)), cols = static_cast<std::size_t>(a.shape(1));
    return DenseMatrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const DenseMatrix& m) {
    Array out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

AccuracyMatrix to_accuracy(const std::vector<std::vector<double>>& rows) {
    AccuracyMatrix m(rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
        if (rows[j].size() != j + 1) throw ValidationError("accuracy row " + std::to_string(j) + " must have " +
                                                           std::to_string(j + 1) + " entries");
        for (std::size_t i = 0; i <= j; ++i) m.set(j, i, rows[j][i]);
    }
    return m;
}

py::dict bound_dict(const BoundReport& r) {
    py::dict d;
    d["bound"] = to_string(r.theorem);
    d["lhs"] = r.lhs;
    d["rhs"] = r.rhs;
    d["slack"] = r.slack;
    d["lipschitz"] = r.lipschitz;
    d["eta"] = r.eta;
    d["steps"] = r.steps;
    d["terms"] = r.terms;
    d["precondition_met"] = r.precondition_met;
    if (r.premise_held) d["premise_held"] = *r.premise_held;
    if (r.premise_rate) d["premise_rate"] = *r.premise_rate;
    return d;
}

// Runs every seed of a config and returns the results document as JSON text.
std::string run_config_json(const std::string& config_text) {
    const ExperimentConfig c = parse_config_text(config_text);
    std::vector<RunJob> jobs;
    for (std::uint64_t s : c.seeds) jobs.push_back({c.trainer, s, "", jobs.size()});
    return format_results_json(execute_jobs(c, jobs));
}

}  // namespace

PYBIND11_MODULE(_adns, m) {
    m.doc() = "Low-rank null-space continual learning core";
    configure_logging(LogLevel::Error);

    static py::exception<Error> base(m, "Error");
    static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            py::set_error(config_error, e.what());
        } catch (const ValidationError& e) {
            py::set_error(PyExc_ValueError, e.what());
        } catch (const Error& e) {
            py::set_error(base, e.what());
        }
    });

    m.def(
        "sym_eig",
        [](const Array& a) {
            SymEigResult r = sym_eig(to_matrix(a));
            return py::make_tuple(r.eigenvalues, to_array(r.eigenvectors));
        },
        py::arg("a"), "Eigenvalues (descending) and eigenvectors of a symmetric matrix.");
    m.def(
        "thin_svd",
        [](const Array& a) {
            SvdResult s = thin_svd(to_matrix(a));
            return py::make_tuple(to_array(s.u), s.sigma, to_array(s.vt));
        },
        py::arg("a"));
    m.def(
        "rank_k_truncate", [](const Array& a, std::size_t k) { return to_array(rank_k_truncate(thin_svd(to_matrix(a)), k)); },
        py::arg("a"), py::arg("k"), "Best rank-k approximation.");

    m.def(
        "alpha_at",
        [](double alpha_max, double alpha_min, std::size_t tasks, std::size_t t) {
            return alpha_at(ThresholdSchedule{alpha_max, alpha_min, tasks}, t);
        },
        py::arg("alpha_max"), py::arg("alpha_min"), py::arg("total_tasks"), py::arg("task_index"));
    m.def(
        "extract_null_space", [](const Array& cov, double alpha) { return to_array(extract_null_space(to_matrix(cov), alpha).basis); },
        py::arg("covariance"), py::arg("alpha"));
    m.def(
        "merge_shared_low_rank",
        [](const Array& pre, const Array& cur, const std::string& strategy, double k0) {
            RankPolicy p{parse_rank_strategy(strategy), k0};
            return to_array(merge_shared_low_rank({to_matrix(pre), 0}, {to_matrix(cur), 0}, p).basis);
        },
        py::arg("u_pre"), py::arg("u_cur"), py::arg("strategy") = "Avg", py::arg("k0") = 0.9);
    m.def(
        "merge_random",
        [](const Array& pre, const Array& cur, std::size_t k, std::uint64_t seed) {
            return to_array(merge_random({to_matrix(pre), 0}, {to_matrix(cur), 0}, k, seed).basis);
        },
        py::arg("u_pre"), py::arg("u_cur"), py::arg("k"), py::arg("seed"));
    m.def(
        "project_gradient", [](const Array& g, const Array& basis) { return to_array(project_gradient(to_matrix(g), {to_matrix(basis), 0})); },
        py::arg("gradient"), py::arg("basis"));

    m.def("acc", [](const std::vector<std::vector<double>>& r) { return acc(to_accuracy(r)); }, py::arg("rows"));
    m.def("bwt", [](const std::vector<std::vector<double>>& r) { return bwt(to_accuracy(r)); }, py::arg("rows"));
    m.def("la", [](const std::vector<std::vector<double>>& r) { return la(to_accuracy(r)); }, py::arg("rows"));

    m.def(
        "quadratic_testbed",
        [](std::uint64_t seed, double eta_scale, std::size_t steps) {
            QuadraticTestbedConfig c;
            c.eta_scale = eta_scale;
            c.steps = steps;
            QuadraticTestbedResult r = run_quadratic_testbed(c, seed);
            py::dict d;
            d["plasticity"] = bound_dict(r.plasticity);
            d["stability"] = bound_dict(r.stability);
            d["projector_ranks"] = r.projector_ranks;
            return d;
        },
        py::arg("seed"), py::arg("eta_scale") = 1.0, py::arg("steps") = 50,
        "Bound reports on the two-block least-squares testbed.");

    m.def(
        "normalize_config", [](const std::string& text) { return config_to_json(parse_config_text(text)); },
        py::arg("config_json"), "Validated config with defaults filled, as canonical JSON.");
    m.def("standard_suite_config", [] { return config_to_json(standard_suite_config()); });
    m.def("run_config", &run_config_json, py::arg("config_json"),
          "Trains every seed of a config; returns the results document as JSON.");
}
