#pragma once

// Z-estimation and the Z-process: solve the estimating equation on the full
// sample, whiten the partial sums of the estimating function at the
// estimate, and test the sup-norm of the resulting bridge against the
// Brownian-bridge limit.

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "zproc/limits.hpp"
#include "zproc/numerics.hpp"

namespace zproc {

// Row-major observation matrix. One row per observation; models decide the
// width (1 for scalar series, 2 for consecutive diffusion pairs, ...).
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<double> storage, int cols);

    static Dataset column(std::vector<double> xs);
    // Consecutive pairs (X_{k-1}, X_k) of a path of length n+1.
    static Dataset pairs_from_path(const std::vector<double>& path);

    std::size_t size() const { return cols_ == 0 ? 0 : storage_.size() / static_cast<std::size_t>(cols_); }
    int cols() const { return cols_; }
    std::span<const double> row(std::size_t i) const {
        return {storage_.data() + i * static_cast<std::size_t>(cols_), static_cast<std::size_t>(cols_)};
    }
    const std::vector<double>& storage() const { return storage_; }

private:
    std::vector<double> storage_;
    int cols_ = 0;
};

using Obs = std::span<const double>;

// Per-observation estimating function psi and its exact theta-Jacobian.
// Callbacks must be reentrant; they are evaluated concurrently across
// Monte Carlo replications.
struct EstimatingFunctionSpec {
    int dim = 1;
    std::string label;
    std::function<void(Obs, const Vec&, Vec&)> psi;
    std::function<void(Obs, const Vec&, Mat&)> dpsi;
};

enum class InfoMode { outer, jacobian };

InfoMode info_mode_from_string(const std::string& s);
std::string to_string(InfoMode mode);

// Whitened partial-sum process on a grid of n+1 points. z is (n+1) x dim
// row major; z[0] = 0 and |z[n]| is pinned near 0 because the full-sample
// estimating equation is solved to tolerance.
struct ZPath {
    std::size_t n = 0;
    int dim = 0;
    std::vector<double> u;
    std::vector<double> z;
    std::vector<double> sqnorm;

    std::span<const double> z_at(std::size_t k) const {
        return {z.data() + k * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
};

struct TestReport {
    double statistic = 0.0;
    double p_value = 1.0;
    std::map<double, bool> reject_at;  // levels 0.10, 0.05, 0.01
    double changepoint_u = 0.0;
    Vec theta_hat;
    SpdMatrix info_hat;
    int solver_iters = 0;
};

struct SolveResult {
    Vec theta;
    int iterations = 0;
};

inline constexpr double kSolverTol = 1e-10;

// Root of (1/n) sum_i psi(x_i, theta) = 0 by damped Newton. Solver errors
// are rethrown annotated with the model label.
SolveResult solve_z_estimator(const EstimatingFunctionSpec& spec, const Dataset& data,
                              const Vec& theta0, double tol = kSolverTol, int max_iter = 60);

// Sample information at theta_hat: outer mode (1/n) sum psi psi^T,
// jacobian mode -(1/n) sum dpsi symmetrized.
SpdMatrix information_hat(const EstimatingFunctionSpec& spec, const Dataset& data,
                          const Vec& theta_hat, InfoMode mode);

// Z_k = L^{-1} n^{-1/2} sum_{i<=k} psi(x_i, theta_hat), L = chol(info).
ZPath z_process(const EstimatingFunctionSpec& spec, const Dataset& data, const Vec& theta_hat,
                const SpdMatrix& info);

// Same whitening applied to precomputed increments (Cox score path). The
// grid defaults to k/n; pass a custom grid for the information clock.
ZPath whiten_partial_sums(std::span<const Vec> increments, const SpdMatrix& info,
                          const std::vector<double>* u_grid = nullptr);

// S_n = max_k |Z_k|.
double test_statistic(const ZPath& path);

// Grid position of the smallest index attaining the maximum norm.
double changepoint_estimate(const ZPath& path);

// Bound implied by the solver tolerance; |z[n]| must stay below it.
double pinning_tolerance(std::size_t n, double solver_tol, double min_pivot);

// Full pipeline: estimate, whiten, sup, calibrate. The table may be null
// for dim 1 (series calibration); refuses n <= dim.
TestReport run_test(const EstimatingFunctionSpec& spec, const Dataset& data, const Vec& theta0,
                    InfoMode mode, const CritTable* table = nullptr, double tol = kSolverTol);

struct TestRun {
    TestReport report;
    ZPath path;
};

// Same pipeline, keeping the whitened path (for dumps and plots).
TestRun run_test_with_path(const EstimatingFunctionSpec& spec, const Dataset& data,
                           const Vec& theta0, InfoMode mode, const CritTable* table = nullptr,
                           double tol = kSolverTol);

// Report assembly shared with the Cox pipeline.
TestReport finish_report(const ZPath& path, const Vec& theta_hat, const SpdMatrix& info,
                         int solver_iters, const CritTable* table);

}  // namespace zproc
