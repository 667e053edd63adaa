#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "zproc/errors.hpp"
#include "zproc/models.hpp"
#include "zproc/zcore.hpp"

using namespace zproc;

namespace {

// Wrap a spec with psi -> A psi (dpsi -> A dpsi).
EstimatingFunctionSpec left_multiplied(const EstimatingFunctionSpec& spec, const Mat& a) {
    EstimatingFunctionSpec out = spec;
    out.psi = [spec, a](Obs obs, const Vec& theta, Vec& val) {
        Vec raw(spec.dim);
        spec.psi(obs, theta, raw);
        val = a.apply(raw);
    };
    out.dpsi = [spec, a](Obs obs, const Vec& theta, Mat& val) {
        Mat raw(spec.dim);
        spec.dpsi(obs, theta, raw);
        val = a.times(raw);
    };
    return out;
}

}  // namespace

TEST_SUITE("zcore") {

TEST_CASE("gaussian mean solver returns the sample mean") {
    const Dataset data = Dataset::column({1.0, 4.0});  // mean 2.5
    const SolveResult r = solve_z_estimator(gaussian_mean_spec(1.0), data, Vec{0.0});
    CHECK(r.theta[0] == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("mean-variance solver matches the two-dimensional score root") {
    const Dataset data = Dataset::column({-1.0, 1.0});
    const SolveResult r = solve_z_estimator(gaussian_meanvar_spec(), data, Vec{0.3, 0.5});
    CHECK(std::fabs(r.theta[0] - 0.0) <= 1e-9);
    CHECK(std::fabs(r.theta[1] - 1.0) <= 1e-9);
}

TEST_CASE("ou solver matches the closed form") {
    OuConfig cfg;
    cfg.theta = 1.0;
    cfg.sigma = 1.0;
    cfg.delta = 0.1;
    cfg.n = 2000;
    RngStream rng(2718, 0);
    const std::vector<double> path = ou_simulate(cfg, rng);
    const Dataset data = Dataset::pairs_from_path(path);
    const SolveResult r = solve_z_estimator(ou_drift_spec(1.0, 0.1), data, Vec{0.5});
    CHECK(std::fabs(r.theta[0] - ou_closed_form_theta(path, 0.1)) <= 1e-8);
}

TEST_CASE("solver error is annotated with the model label") {
    EstimatingFunctionSpec spec = gaussian_mean_spec(1.0);
    spec.label = "labelled-model";
    spec.dpsi = [](Obs, const Vec&, Mat& out) { out(0, 0) = 0.0; };  // force singular jacobian
    const Dataset data = Dataset::column({1.0, 2.0});
    try {
        solve_z_estimator(spec, data, Vec{0.0});
        CHECK(false);
    } catch (const SingularJacobian& e) {
        CHECK(std::string(e.what()).find("labelled-model") != std::string::npos);
    }
}

TEST_CASE("information in both modes for the gaussian mean model") {
    const Dataset data = Dataset::column({0.0, 1.0, 2.0});
    const Vec theta_hat{1.0};
    const EstimatingFunctionSpec spec = gaussian_mean_spec(1.0);

    const SpdMatrix jac = information_hat(spec, data, theta_hat, InfoMode::jacobian);
    CHECK(jac(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

    const SpdMatrix outer = information_hat(spec, data, theta_hat, InfoMode::outer);
    CHECK(outer(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));  // mle variance of {0,1,2}
}

TEST_CASE("ou jacobian information matches the hand derivative") {
    const std::vector<double> path = {1.0, 0.8, 0.9, 0.5};
    const Dataset data = Dataset::pairs_from_path(path);
    const double delta = 0.1, sigma = 2.0;
    const SpdMatrix info =
        information_hat(ou_drift_spec(sigma, delta), data, Vec{1.0}, InfoMode::jacobian);
    const double expect = delta * (1.0 + 0.64 + 0.81) / (3.0 * sigma * sigma);
    CHECK(info(0, 0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("degenerate data makes the outer information non-SPD") {
    const Dataset data = Dataset::column({3.0, 3.0, 3.0, 3.0});
    const EstimatingFunctionSpec spec = gaussian_mean_spec(1.0);
    const Vec root = solve_z_estimator(spec, data, Vec{0.0}).theta;
    CHECK_THROWS_AS(information_hat(spec, data, root, InfoMode::outer), NotPositiveDefinite);
}

TEST_CASE("two-point z-process is the hand-computed bridge") {
    const Dataset data = Dataset::column({-1.0, 1.0});
    const SpdMatrix info(Mat::identity(1));
    const ZPath path = z_process(gaussian_mean_spec(1.0), data, Vec{0.0}, info);

    REQUIRE(path.n == 2);
    CHECK(path.z_at(0)[0] == 0.0);
    CHECK(path.z_at(1)[0] == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(path.z_at(2)[0] == doctest::Approx(0.0));
    CHECK(test_statistic(path) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(changepoint_estimate(path) == doctest::Approx(0.5));
    for (std::size_t k = 0; k <= path.n; ++k) {
        CHECK(path.sqnorm[k] == doctest::Approx(path.z_at(k)[0] * path.z_at(k)[0]).epsilon(1e-12));
    }
}

TEST_CASE("all-zero path has zero statistic and changepoint at the first index") {
    ZPath path;
    path.n = 2;
    path.dim = 1;
    path.u = {0.0, 0.5, 1.0};
    path.z = {0.0, 0.0, 0.0};
    path.sqnorm = {0.0, 0.0, 0.0};
    CHECK(test_statistic(path) == 0.0);
    CHECK(changepoint_estimate(path) == 0.0);
}

TEST_CASE("statistic is invariant under data reversal") {
    RngStream rng(4242, 0);
    IidGaussianConfig cfg;
    cfg.n = 400;
    cfg.mu0 = 0.7;
    cfg.sigma = 1.3;
    std::vector<double> xs = gaussian_simulate(cfg, rng);
    std::vector<double> rev = xs;
    std::reverse(rev.begin(), rev.end());

    const EstimatingFunctionSpec spec = gaussian_mean_spec(cfg.sigma);
    const TestReport a = run_test(spec, Dataset::column(xs), Vec{0.0}, InfoMode::outer);
    const TestReport b = run_test(spec, Dataset::column(rev), Vec{0.0}, InfoMode::outer);
    CHECK(std::fabs(a.statistic - b.statistic) <= 1e-6);
}

TEST_CASE("whitening invariance: A psi with outer information keeps sqnorm") {
    RngStream rng(515, 0);
    IidGaussianConfig cfg;
    cfg.n = 120;
    cfg.mu0 = 0.4;
    cfg.sigma = 0.8;
    const std::vector<double> xs = gaussian_simulate(cfg, rng);
    const Dataset data = Dataset::column(xs);

    const EstimatingFunctionSpec spec = gaussian_meanvar_spec();
    const Vec theta = solve_z_estimator(spec, data, Vec{0.0, 1.0}).theta;

    for (int trial = 0; trial < 5; ++trial) {
        Mat a(2);
        do {
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) a(i, j) = rng.normal();
        } while (std::fabs(a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) < 0.2);

        const EstimatingFunctionSpec mixed = left_multiplied(spec, a);
        const ZPath base = z_process(spec, data, theta, information_hat(spec, data, theta, InfoMode::outer));
        const ZPath rot =
            z_process(mixed, data, theta, information_hat(mixed, data, theta, InfoMode::outer));
        for (std::size_t k = 0; k <= base.n; ++k) {
            CHECK(std::fabs(base.sqnorm[k] - rot.sqnorm[k]) <=
                  1e-8 * std::max(1.0, std::fabs(base.sqnorm[k])));
        }
    }
}

TEST_CASE("factorization invariance: quad_form equals the whitened sqnorm") {
    RngStream rng(626, 0);
    IidGaussianConfig cfg;
    cfg.n = 60;
    const std::vector<double> xs = gaussian_simulate(cfg, rng);
    const Dataset data = Dataset::column(xs);
    const EstimatingFunctionSpec spec = gaussian_meanvar_spec();
    const Vec theta = solve_z_estimator(spec, data, Vec{0.0, 1.0}).theta;
    const SpdMatrix info = information_hat(spec, data, theta, InfoMode::outer);
    const ZPath path = z_process(spec, data, theta, info);

    Vec partial(2), val(2);
    const double root_n = std::sqrt(static_cast<double>(data.size()));
    for (std::size_t k = 1; k <= data.size(); ++k) {
        spec.psi(data.row(k - 1), theta, val);
        partial += val;
        Vec scaled = partial;
        scaled *= 1.0 / root_n;
        CHECK(std::fabs(quad_form(scaled, info) - path.sqnorm[k]) <= 1e-12 * std::max(1.0, path.sqnorm[k]));
    }
}

TEST_CASE("grid refinement only raises the supremum") {
    RngStream rng(737, 0);
    IidGaussianConfig cfg;
    cfg.n = 200;
    const std::vector<double> xs = gaussian_simulate(cfg, rng);
    const TestRun run = run_test_with_path(gaussian_mean_spec(1.0), Dataset::column(xs), Vec{0.0},
                                           InfoMode::outer);
    const double full = test_statistic(run.path);
    for (int stride : {2, 3, 7, 50}) {
        double sub = 0.0;
        for (std::size_t k = 0; k <= run.path.n; k += static_cast<std::size_t>(stride)) {
            sub = std::max(sub, std::sqrt(run.path.sqnorm[k]));
        }
        CHECK(full >= sub);
    }
}

TEST_CASE("bridge pinning holds on a full run") {
    RngStream rng(848, 0);
    IidGaussianConfig cfg;
    cfg.n = 500;
    const std::vector<double> xs = gaussian_simulate(cfg, rng);
    const TestRun run = run_test_with_path(gaussian_mean_spec(1.0), Dataset::column(xs), Vec{0.0},
                                           InfoMode::outer);
    CHECK(run.path.z_at(0)[0] == 0.0);
    const double pin = pinning_tolerance(run.path.n, kSolverTol,
                                         Cholesky(run.report.info_hat).min_pivot());
    CHECK(std::sqrt(run.path.sqnorm[run.path.n]) <= pin);
}

TEST_CASE("sample-size guard refuses n <= dim") {
    CHECK_THROWS_AS(run_test(gaussian_mean_spec(1.0), Dataset::column({7.0}), Vec{0.0}, InfoMode::outer),
                    InvalidInput);
    CHECK_THROWS_AS(run_test(gaussian_meanvar_spec(), Dataset::column({1.0, 2.0}), Vec{1.5, 0.25},
                             InfoMode::outer),
                    InvalidInput);
    // The solver itself is permissive: a single observation has root x.
    const SolveResult r = solve_z_estimator(gaussian_mean_spec(1.0), Dataset::column({7.0}), Vec{0.0});
    CHECK(r.theta[0] == doctest::Approx(7.0));
}

TEST_CASE("report fields are consistent") {
    RngStream rng(959, 0);
    IidGaussianConfig cfg;
    cfg.n = 300;
    const std::vector<double> xs = gaussian_simulate(cfg, rng);
    const TestReport r = run_test(gaussian_mean_spec(1.0), Dataset::column(xs), Vec{0.0},
                                  InfoMode::outer);
    CHECK(r.p_value >= 0.0);
    CHECK(r.p_value <= 1.0);
    CHECK(r.statistic >= 0.0);
    for (double alpha : {0.10, 0.05, 0.01}) CHECK(r.reject_at.at(alpha) == (r.p_value <= alpha));
    CHECK(r.changepoint_u >= 0.0);
    CHECK(r.changepoint_u <= 1.0);
}

TEST_CASE("whiten_partial_sums validates the custom grid") {
    std::vector<Vec> inc = {Vec{1.0}, Vec{-1.0}};
    const SpdMatrix info(Mat::identity(1));
    const std::vector<double> bad_grid = {0.0, 1.0};
    CHECK_THROWS_AS(whiten_partial_sums(inc, info, &bad_grid), DimensionMismatch);
}

}  // TEST_SUITE
