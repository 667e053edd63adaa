#pragma once

// Shipped model adapters: i.i.d. Gaussian scores, Ornstein-Uhlenbeck drift
// from the Euler-discretized likelihood, and the Cox partial-likelihood
// score over event times with its information-fraction clock.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "zproc/rng.hpp"
#include "zproc/zcore.hpp"

namespace zproc {

// ---------- i.i.d. Gaussian ----------

struct IidGaussianConfig {
    int n = 0;
    double mu0 = 0.0;
    double sigma = 1.0;
    double shift = 0.0;
    std::optional<double> change_u;  // mean shifts for indices >= floor(change_u * n)
};

std::vector<double> gaussian_simulate(const IidGaussianConfig& cfg, RngStream& rng);

// psi(x, theta) = (x - theta)/sigma^2, known sigma; the root is the sample mean.
EstimatingFunctionSpec gaussian_mean_spec(double sigma);

// Two-parameter score of N(mu, v); the root is (mean, n-divisor variance).
EstimatingFunctionSpec gaussian_meanvar_spec();

// ---------- Ornstein-Uhlenbeck drift ----------

struct OuConfig {
    double theta = 1.0;   // mean reversion, must be > 0
    double sigma = 1.0;   // diffusion coefficient (0 allowed for the noiseless check)
    double delta = 0.1;   // observation step
    int n = 0;            // number of steps
    double x0 = 0.0;
    std::optional<double> change_u;  // drift switches at step floor(change_u * n)
    double theta_post = 0.0;
};

// Euler-Maruyama path of length n+1.
std::vector<double> ou_simulate(const OuConfig& cfg, RngStream& rng);

// Observations are consecutive pairs (X_{k-1}, X_k):
// psi(theta) = -X_{k-1} (dX + theta X_{k-1} delta)/sigma^2.
EstimatingFunctionSpec ou_drift_spec(double sigma, double delta);

// theta_hat = -sum X_{k-1} dX / (delta sum X_{k-1}^2), the exact root.
double ou_closed_form_theta(const std::vector<double>& path, double delta);

// ---------- Cox regression ----------

struct SurvData {
    std::vector<double> time;      // > 0
    std::vector<int> status;       // 1 = event, 0 = censored
    std::vector<double> covariates;  // n x dim row major
    int dim = 0;

    std::size_t size() const { return time.size(); }
    std::size_t n_events() const;
    std::span<const double> z(std::size_t i) const {
        return {covariates.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
    void validate() const;
};

// Deterministic jitter (1e-9 * rank within the tied group, in subject order)
// so event times are distinct and risk sets unambiguous.
void break_time_ties(SurvData& data);

struct CoxSimConfig {
    Vec theta;
    int n = 0;
    double censor_rate = 0.0;        // target expected censoring fraction
    std::optional<double> change_u;  // subjects entering after this fraction use theta_post
    Vec theta_post;                  // dim 0 means "same as theta"
};

// Exponential event times with rate exp(theta' Z), Z ~ N(0, I_d); independent
// exponential censoring with the rate solving the target censoring fraction.
SurvData cox_simulate(const CoxSimConfig& cfg, RngStream& rng);

// Per-event score increments psi_i = Z_(i) - S1/S0 and information
// increments V_i = S2/S0 - (S1/S0)(S1/S0)^T over risk sets R(t) = {j : time_j >= t},
// in increasing event-time order.
struct CoxScore {
    std::vector<double> event_time;
    std::vector<Vec> psi;
    std::vector<Mat> vinfo;
    Vec psi_sum;
    Mat vinfo_sum;

    std::size_t events() const { return event_time.size(); }
};

CoxScore cox_score_process(const SurvData& data, const Vec& theta);

struct CoxFit {
    Vec theta;
    int iterations = 0;
};

// Partial-likelihood estimator: Newton on sum_i psi_i(theta) = 0 with exact
// Jacobian -sum_i V_i; tolerance applies to the sup-norm of the score sum.
CoxFit cox_fit(const SurvData& data, const Vec& theta0, double tol = 1e-10, int max_iter = 60);

// Information-fraction clock u_i = trace(cumulative V)/trace(total V);
// u_0 = 0, u_last = 1, nondecreasing.
std::vector<double> information_clock(const CoxScore& score);
std::vector<double> cox_zprocess_time(const SurvData& data, const Vec& theta_hat);

enum class CoxClock { events, information };

CoxClock cox_clock_from_string(const std::string& s);
std::string to_string(CoxClock clock);

// Whitened partial score path at theta_hat on the chosen clock.
ZPath cox_z_process(const SurvData& data, const Vec& theta_hat, InfoMode mode, CoxClock clock);

// Full change-point pipeline for Cox data.
TestReport cox_run_test(const SurvData& data, const Vec& theta0, InfoMode mode, CoxClock clock,
                        const CritTable* table = nullptr, double tol = 1e-10);
TestRun cox_run_test_with_path(const SurvData& data, const Vec& theta0, InfoMode mode,
                               CoxClock clock, const CritTable* table = nullptr, double tol = 1e-10);

}  // namespace zproc
