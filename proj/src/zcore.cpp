#include "zproc/zcore.hpp"

#include <cmath>
#include <utility>

#include "zproc/errors.hpp"

namespace zproc {

Dataset::Dataset(std::vector<double> storage, int cols) : storage_(std::move(storage)), cols_(cols) {
    if (cols_ < 1) throw InvalidInput("Dataset: cols must be >= 1");
    if (storage_.size() % static_cast<std::size_t>(cols_) != 0) {
        throw InvalidInput("Dataset: storage size not a multiple of cols");
    }
}

Dataset Dataset::column(std::vector<double> xs) { return Dataset(std::move(xs), 1); }

Dataset Dataset::pairs_from_path(const std::vector<double>& path) {
    if (path.size() < 2) throw InvalidInput("Dataset: path needs at least 2 points");
    std::vector<double> rows;
    rows.reserve(2 * (path.size() - 1));
    for (std::size_t k = 1; k < path.size(); ++k) {
        rows.push_back(path[k - 1]);
        rows.push_back(path[k]);
    }
    return Dataset(std::move(rows), 2);
}

InfoMode info_mode_from_string(const std::string& s) {
    if (s == "outer") return InfoMode::outer;
    if (s == "jacobian") return InfoMode::jacobian;
    throw InvalidInput("unknown information mode '" + s + "' (expected outer|jacobian)");
}

std::string to_string(InfoMode mode) { return mode == InfoMode::outer ? "outer" : "jacobian"; }

SolveResult solve_z_estimator(const EstimatingFunctionSpec& spec, const Dataset& data,
                              const Vec& theta0, double tol, int max_iter) {
    if (data.size() == 0) throw InvalidInput(spec.label + ": empty data");
    if (theta0.dim() != spec.dim) throw DimensionMismatch(spec.label + ": theta0 has wrong dim");

    const double inv_n = 1.0 / static_cast<double>(data.size());
    auto mean_psi = [&](const Vec& theta) {
        Vec sum(spec.dim);
        Vec val(spec.dim);
        for (std::size_t i = 0; i < data.size(); ++i) {
            spec.psi(data.row(i), theta, val);
            sum += val;
        }
        sum *= inv_n;
        return sum;
    };
    auto mean_dpsi = [&](const Vec& theta) {
        Mat sum(spec.dim);
        Mat val(spec.dim);
        for (std::size_t i = 0; i < data.size(); ++i) {
            spec.dpsi(data.row(i), theta, val);
            sum += val;
        }
        sum *= inv_n;
        return sum;
    };

    try {
        NewtonResult r = newton_solve(mean_psi, mean_dpsi, theta0, tol, max_iter);
        return {r.root, r.iterations};
    } catch (const SingularJacobian& e) {
        throw SingularJacobian(spec.label + ": " + e.what(), e.diagnostics);
    } catch (const NoConvergence& e) {
        throw NoConvergence(spec.label + ": " + e.what(), e.diagnostics);
    }
}

SpdMatrix information_hat(const EstimatingFunctionSpec& spec, const Dataset& data,
                          const Vec& theta_hat, InfoMode mode) {
    if (data.size() == 0) throw InvalidInput(spec.label + ": empty data");
    const int d = spec.dim;
    Mat acc(d);

    if (mode == InfoMode::outer) {
        Vec val(d);
        for (std::size_t i = 0; i < data.size(); ++i) {
            spec.psi(data.row(i), theta_hat, val);
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) acc(r, c) += val[r] * val[c];
        }
    } else {
        Mat val(d);
        for (std::size_t i = 0; i < data.size(); ++i) {
            spec.dpsi(data.row(i), theta_hat, val);
            acc += val;
        }
        acc *= -1.0;
    }
    acc *= 1.0 / static_cast<double>(data.size());
    acc.symmetrize();
    SpdMatrix info(acc);
    Cholesky check(info);  // degenerate information surfaces here
    (void)check;
    return info;
}

ZPath whiten_partial_sums(std::span<const Vec> increments, const SpdMatrix& info,
                          const std::vector<double>* u_grid) {
    const std::size_t n = increments.size();
    if (n == 0) throw InvalidInput("whiten_partial_sums: no increments");
    const int d = info.dim();
    if (u_grid != nullptr && u_grid->size() != n + 1) {
        throw DimensionMismatch("whiten_partial_sums: u grid must have n+1 points");
    }

    Cholesky chol(info);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));

    ZPath path;
    path.n = n;
    path.dim = d;
    path.u.resize(n + 1);
    path.z.assign((n + 1) * static_cast<std::size_t>(d), 0.0);
    path.sqnorm.assign(n + 1, 0.0);

    Vec sum(d);
    for (std::size_t k = 1; k <= n; ++k) {
        sum += increments[k - 1];
        Vec y = chol.solve_lower(sum);
        y *= scale;
        double* dst = path.z.data() + k * static_cast<std::size_t>(d);
        for (int j = 0; j < d; ++j) dst[j] = y[j];
        path.sqnorm[k] = y.sqnorm();
    }
    for (std::size_t k = 0; k <= n; ++k) {
        path.u[k] = (u_grid != nullptr) ? (*u_grid)[k]
                                        : static_cast<double>(k) / static_cast<double>(n);
    }
    return path;
}

ZPath z_process(const EstimatingFunctionSpec& spec, const Dataset& data, const Vec& theta_hat,
                const SpdMatrix& info) {
    const std::size_t n = data.size();
    if (n == 0) throw InvalidInput(spec.label + ": empty data");
    if (info.dim() != spec.dim) throw DimensionMismatch(spec.label + ": info has wrong dim");

    std::vector<Vec> increments(n, Vec(spec.dim));
    for (std::size_t i = 0; i < n; ++i) spec.psi(data.row(i), theta_hat, increments[i]);
    return whiten_partial_sums(increments, info);
}

double test_statistic(const ZPath& path) {
    double best = 0.0;
    for (double s : path.sqnorm) best = std::max(best, s);
    return std::sqrt(best);
}

double changepoint_estimate(const ZPath& path) {
    std::size_t best_k = 0;
    double best = path.sqnorm[0];
    for (std::size_t k = 1; k < path.sqnorm.size(); ++k) {
        if (path.sqnorm[k] > best) {
            best = path.sqnorm[k];
            best_k = k;
        }
    }
    return path.u[best_k];
}

double pinning_tolerance(std::size_t n, double solver_tol, double min_pivot) {
    return 10.0 * std::sqrt(static_cast<double>(n)) * solver_tol / min_pivot;
}

TestReport finish_report(const ZPath& path, const Vec& theta_hat, const SpdMatrix& info,
                         int solver_iters, const CritTable* table) {
    TestReport report;
    report.statistic = test_statistic(path);
    report.p_value = p_value(report.statistic, path.dim, table);
    for (double alpha : {0.10, 0.05, 0.01}) report.reject_at[alpha] = report.p_value <= alpha;
    report.changepoint_u = changepoint_estimate(path);
    report.theta_hat = theta_hat;
    report.info_hat = info;
    report.solver_iters = solver_iters;
    return report;
}

TestRun run_test_with_path(const EstimatingFunctionSpec& spec, const Dataset& data,
                           const Vec& theta0, InfoMode mode, const CritTable* table, double tol) {
    const std::size_t n = data.size();
    if (n <= static_cast<std::size_t>(spec.dim)) {
        throw InvalidInput(spec.label + ": need more than dim = " + std::to_string(spec.dim) +
                           " observations, got " + std::to_string(n));
    }

    SolveResult fit = solve_z_estimator(spec, data, theta0, tol);
    SpdMatrix info = information_hat(spec, data, fit.theta, mode);
    ZPath path = z_process(spec, data, fit.theta, info);

    const double pin = pinning_tolerance(n, tol, Cholesky(info).min_pivot());
    if (std::sqrt(path.sqnorm[n]) > pin) {
        throw NumericsError(spec.label + ": bridge endpoint " + std::to_string(std::sqrt(path.sqnorm[n])) +
                            " exceeds pinning tolerance " + std::to_string(pin));
    }
    TestRun run;
    run.report = finish_report(path, fit.theta, info, fit.iterations, table);
    run.path = std::move(path);
    return run;
}

TestReport run_test(const EstimatingFunctionSpec& spec, const Dataset& data, const Vec& theta0,
                    InfoMode mode, const CritTable* table, double tol) {
    return run_test_with_path(spec, data, theta0, mode, table, tol).report;
}

}  // namespace zproc
