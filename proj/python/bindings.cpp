#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "zproc/csv.hpp"
#include "zproc/errors.hpp"
#include "zproc/limits.hpp"
#include "zproc/mc.hpp"
#include "zproc/models.hpp"
#include "zproc/rng.hpp"
#include "zproc/zcore.hpp"

namespace py = pybind11;
using namespace zproc;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Vec vec_from_list(const std::vector<double>& xs) {
    Vec v(static_cast<int>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<int>(i)] = xs[i];
    return v;
}

std::vector<double> vec_to_list(const Vec& v) {
    return {v.data(), v.data() + v.dim()};
}

std::vector<std::vector<double>> mat_to_list(const Mat& m) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.dim()));
    for (int i = 0; i < m.dim(); ++i) {
        rows[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(m.dim()));
        for (int j = 0; j < m.dim(); ++j) rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    }
    return rows;
}

// 1-d arrays become a single column; 2-d arrays one row per observation.
Dataset dataset_from_array(const DoubleArray& arr) {
    const py::buffer_info info = arr.request();
    if (info.ndim == 1) {
        const double* p = static_cast<const double*>(info.ptr);
        return Dataset::column(std::vector<double>(p, p + info.shape[0]));
    }
    if (info.ndim == 2) {
        const double* p = static_cast<const double*>(info.ptr);
        const auto rows = static_cast<std::size_t>(info.shape[0]);
        const auto cols = static_cast<std::size_t>(info.shape[1]);
        return Dataset(std::vector<double>(p, p + rows * cols), static_cast<int>(cols));
    }
    throw InvalidInput("data must be a 1-d or 2-d array");
}

SpdMatrix spd_from_array(const DoubleArray& arr) {
    const py::buffer_info info = arr.request();
    if (info.ndim != 2 || info.shape[0] != info.shape[1]) {
        throw InvalidInput("info must be a square matrix");
    }
    const int d = static_cast<int>(info.shape[0]);
    const double* p = static_cast<const double*>(info.ptr);
    Mat m(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = p[i * d + j];
    return SpdMatrix(m, 1e-9);
}

SurvData surv_from_arrays(const std::vector<double>& time, const std::vector<int>& status,
                          const DoubleArray& covariates) {
    const py::buffer_info info = covariates.request();
    SurvData data;
    data.time = time;
    data.status = status;
    if (info.ndim == 1) {
        data.dim = 1;
        const double* p = static_cast<const double*>(info.ptr);
        data.covariates.assign(p, p + info.shape[0]);
    } else if (info.ndim == 2) {
        data.dim = static_cast<int>(info.shape[1]);
        const double* p = static_cast<const double*>(info.ptr);
        data.covariates.assign(p, p + info.shape[0] * info.shape[1]);
    } else {
        throw InvalidInput("covariates must be a 1-d or 2-d array");
    }
    data.validate();
    break_time_ties(data);
    return data;
}

py::dict report_to_dict(const TestReport& r) {
    py::dict d;
    d["statistic"] = r.statistic;
    d["p_value"] = r.p_value;
    py::dict reject;
    for (const auto& [level, flag] : r.reject_at) {
        char key[16];
        std::snprintf(key, sizeof(key), "%.2f", level);
        reject[key] = flag;
    }
    d["reject_at"] = reject;
    d["changepoint_u"] = r.changepoint_u;
    d["theta_hat"] = vec_to_list(r.theta_hat);
    d["info_hat"] = mat_to_list(r.info_hat.mat());
    d["solver_iters"] = r.solver_iters;
    return d;
}

py::dict zpath_to_dict(const ZPath& p) {
    py::dict d;
    d["n"] = p.n;
    d["dim"] = p.dim;
    d["u"] = p.u;
    std::vector<std::vector<double>> z(p.n + 1);
    for (std::size_t k = 0; k <= p.n; ++k) {
        const auto row = p.z_at(k);
        z[k].assign(row.begin(), row.end());
    }
    d["z"] = z;
    d["sqnorm"] = p.sqnorm;
    return d;
}

py::object parse_json_string(const std::string& s) {
    return py::module_::import("json").attr("loads")(s);
}

const CritTable* table_ptr(const std::optional<CritTable>& t) {
    return t.has_value() ? &*t : nullptr;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Z-estimators and the Z-process change-point test";

    py::register_exception<InvalidInput>(m, "InvalidInputError", PyExc_ValueError);
    static py::exception<NumericsError> numerics_exc(m, "NumericsFailure");
    py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefiniteError", numerics_exc.ptr());
    py::register_exception<SingularJacobian>(m, "SingularJacobianError", numerics_exc.ptr());
    py::register_exception<NoConvergence>(m, "NoConvergenceError", numerics_exc.ptr());

    py::class_<RngStream>(m, "RngStream")
        .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed"), py::arg("stream") = 0)
        .def("next_u64", &RngStream::next_u64)
        .def("uniform01", &RngStream::uniform01)
        .def("normal", &RngStream::normal)
        .def("normals", [](RngStream& rng, std::size_t n) { return rng.normals(n); });

    m.def("kolmogorov_cdf", &kolmogorov_cdf, py::arg("x"));
    m.def("kolmogorov_quantile", &kolmogorov_quantile, py::arg("level"));

    py::class_<CritTable>(m, "CritTable")
        .def_readonly("dim", &CritTable::dim)
        .def_readonly("grid_n", &CritTable::grid_n)
        .def_readonly("reps", &CritTable::reps)
        .def_readonly("seed", &CritTable::seed)
        .def_readonly("ecdf", &CritTable::ecdf)
        .def("quantile", &CritTable::quantile, py::arg("level"))
        .def("p_value", [](const CritTable& t, double s) { return p_value(t, s, t.dim); },
             py::arg("statistic"));

    m.def("simulate_sup_bridge", &simulate_sup_bridge, py::arg("dim"), py::arg("grid_n"),
          py::arg("reps"), py::arg("seed"), py::arg("threads") = 0,
          py::call_guard<py::gil_scoped_release>());
    m.def("p_value",
          [](double s, int dim, const std::optional<CritTable>& table) {
              return p_value(s, dim, table_ptr(table));
          },
          py::arg("statistic"), py::arg("dim"), py::arg("table") = py::none());

    py::class_<EstimatingFunctionSpec>(m, "EstimatingFunctionSpec")
        .def_readonly("dim", &EstimatingFunctionSpec::dim)
        .def_readonly("label", &EstimatingFunctionSpec::label);

    m.def("gaussian_mean_spec", &gaussian_mean_spec, py::arg("sigma"));
    m.def("gaussian_meanvar_spec", &gaussian_meanvar_spec);
    m.def("ou_drift_spec", &ou_drift_spec, py::arg("sigma"), py::arg("delta"));

    m.def(
        "spec_from_callables",
        [](int dim,
           std::function<std::vector<double>(std::vector<double>, std::vector<double>)> psi,
           std::function<std::vector<std::vector<double>>(std::vector<double>, std::vector<double>)> dpsi,
           const std::string& label) {
            EstimatingFunctionSpec spec;
            spec.dim = dim;
            spec.label = label;
            spec.psi = [dim, psi](Obs obs, const Vec& theta, Vec& out) {
                const auto r = psi(std::vector<double>(obs.begin(), obs.end()), vec_to_list(theta));
                if (static_cast<int>(r.size()) != dim) throw InvalidInput("psi returned wrong dim");
                for (int i = 0; i < dim; ++i) out[i] = r[static_cast<std::size_t>(i)];
            };
            spec.dpsi = [dim, dpsi](Obs obs, const Vec& theta, Mat& out) {
                const auto r = dpsi(std::vector<double>(obs.begin(), obs.end()), vec_to_list(theta));
                if (static_cast<int>(r.size()) != dim) throw InvalidInput("dpsi returned wrong dim");
                for (int i = 0; i < dim; ++i)
                    for (int j = 0; j < dim; ++j) out(i, j) = r[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            };
            return spec;
        },
        py::arg("dim"), py::arg("psi"), py::arg("dpsi"), py::arg("label") = "custom");

    m.def(
        "solve_z_estimator",
        [](const EstimatingFunctionSpec& spec, const DoubleArray& data, const std::vector<double>& theta0) {
            const SolveResult r = solve_z_estimator(spec, dataset_from_array(data), vec_from_list(theta0));
            py::dict d;
            d["theta"] = vec_to_list(r.theta);
            d["iterations"] = r.iterations;
            return d;
        },
        py::arg("spec"), py::arg("data"), py::arg("theta0"));

    m.def(
        "information_hat",
        [](const EstimatingFunctionSpec& spec, const DoubleArray& data,
           const std::vector<double>& theta_hat, const std::string& mode) {
            const SpdMatrix info = information_hat(spec, dataset_from_array(data),
                                                   vec_from_list(theta_hat), info_mode_from_string(mode));
            return mat_to_list(info.mat());
        },
        py::arg("spec"), py::arg("data"), py::arg("theta_hat"), py::arg("mode") = "outer");

    m.def(
        "z_process",
        [](const EstimatingFunctionSpec& spec, const DoubleArray& data,
           const std::vector<double>& theta_hat, const DoubleArray& info) {
            return zpath_to_dict(z_process(spec, dataset_from_array(data), vec_from_list(theta_hat),
                                           spd_from_array(info)));
        },
        py::arg("spec"), py::arg("data"), py::arg("theta_hat"), py::arg("info"));

    m.def(
        "run_test",
        [](const EstimatingFunctionSpec& spec, const DoubleArray& data,
           const std::vector<double>& theta0, const std::string& mode,
           const std::optional<CritTable>& table) {
            return report_to_dict(run_test(spec, dataset_from_array(data), vec_from_list(theta0),
                                           info_mode_from_string(mode), table_ptr(table)));
        },
        py::arg("spec"), py::arg("data"), py::arg("theta0"), py::arg("mode") = "outer",
        py::arg("table") = py::none());

    m.def(
        "gaussian_simulate",
        [](int n, double mu0, double sigma, double shift, std::optional<double> change_u,
           std::uint64_t seed, std::uint64_t stream) {
            RngStream rng(seed, stream);
            return gaussian_simulate({n, mu0, sigma, shift, change_u}, rng);
        },
        py::arg("n"), py::arg("mu0") = 0.0, py::arg("sigma") = 1.0, py::arg("shift") = 0.0,
        py::arg("change_u") = py::none(), py::arg("seed") = 0, py::arg("stream") = 0);

    m.def(
        "ou_simulate",
        [](int n, double theta, double sigma, double delta, double x0,
           std::optional<double> change_u, double theta_post, std::uint64_t seed,
           std::uint64_t stream) {
            OuConfig cfg;
            cfg.n = n;
            cfg.theta = theta;
            cfg.sigma = sigma;
            cfg.delta = delta;
            cfg.x0 = x0;
            cfg.change_u = change_u;
            cfg.theta_post = theta_post;
            RngStream rng(seed, stream);
            return ou_simulate(cfg, rng);
        },
        py::arg("n"), py::arg("theta") = 1.0, py::arg("sigma") = 1.0, py::arg("delta") = 0.1,
        py::arg("x0") = 0.0, py::arg("change_u") = py::none(), py::arg("theta_post") = 0.0,
        py::arg("seed") = 0, py::arg("stream") = 0);

    m.def("ou_closed_form_theta", &ou_closed_form_theta, py::arg("path"), py::arg("delta"));

    m.def(
        "cox_simulate",
        [](const std::vector<double>& theta, int n, double censor_rate,
           std::optional<double> change_u, const std::optional<std::vector<double>>& theta_post,
           std::uint64_t seed, std::uint64_t stream) {
            CoxSimConfig cfg;
            cfg.theta = vec_from_list(theta);
            cfg.n = n;
            cfg.censor_rate = censor_rate;
            cfg.change_u = change_u;
            if (theta_post) cfg.theta_post = vec_from_list(*theta_post);
            RngStream rng(seed, stream);
            const SurvData data = cox_simulate(cfg, rng);
            py::dict d;
            d["time"] = data.time;
            d["status"] = data.status;
            std::vector<std::vector<double>> z(data.size());
            for (std::size_t i = 0; i < data.size(); ++i) {
                const auto row = data.z(i);
                z[i].assign(row.begin(), row.end());
            }
            d["covariates"] = z;
            return d;
        },
        py::arg("theta"), py::arg("n"), py::arg("censor_rate") = 0.0,
        py::arg("change_u") = py::none(), py::arg("theta_post") = py::none(), py::arg("seed") = 0,
        py::arg("stream") = 0);

    m.def(
        "cox_fit",
        [](const std::vector<double>& time, const std::vector<int>& status,
           const DoubleArray& covariates, const std::optional<std::vector<double>>& theta0) {
            const SurvData data = surv_from_arrays(time, status, covariates);
            const Vec start = theta0 ? vec_from_list(*theta0) : Vec::zeros(data.dim);
            const CoxFit fit = cox_fit(data, start);
            py::dict d;
            d["theta"] = vec_to_list(fit.theta);
            d["iterations"] = fit.iterations;
            return d;
        },
        py::arg("time"), py::arg("status"), py::arg("covariates"), py::arg("theta0") = py::none());

    m.def(
        "cox_run_test",
        [](const std::vector<double>& time, const std::vector<int>& status,
           const DoubleArray& covariates, const std::string& mode, const std::string& clock,
           const std::optional<CritTable>& table) {
            const SurvData data = surv_from_arrays(time, status, covariates);
            return report_to_dict(cox_run_test(data, Vec::zeros(data.dim),
                                               info_mode_from_string(mode),
                                               cox_clock_from_string(clock), table_ptr(table)));
        },
        py::arg("time"), py::arg("status"), py::arg("covariates"), py::arg("mode") = "outer",
        py::arg("clock") = "events", py::arg("table") = py::none());

    m.def(
        "cox_zprocess_time",
        [](const std::vector<double>& time, const std::vector<int>& status,
           const DoubleArray& covariates, const std::vector<double>& theta_hat) {
            const SurvData data = surv_from_arrays(time, status, covariates);
            return cox_zprocess_time(data, vec_from_list(theta_hat));
        },
        py::arg("time"), py::arg("status"), py::arg("covariates"), py::arg("theta_hat"));

    m.def(
        "mc_size_power",
        [](const std::string& config_json) {
            McReport report;
            {
                py::gil_scoped_release release;
                report = mc_size_power(mc_config_from_json_string(config_json));
            }
            return parse_json_string(report.to_json_string(0));
        },
        py::arg("config_json"));

    m.def(
        "mc_moments",
        [](const std::string& config_json) {
            McReport report;
            {
                py::gil_scoped_release release;
                report = mc_moments(mc_config_from_json_string(config_json));
            }
            return parse_json_string(report.to_json_string(0));
        },
        py::arg("config_json"));

    m.attr("__version__") = "0.1.0";
}
