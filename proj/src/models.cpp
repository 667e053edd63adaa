#include "zproc/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "zproc/errors.hpp"

namespace zproc {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::size_t change_index(std::optional<double> change_u, int n) {
    if (!change_u) return static_cast<std::size_t>(n);  // never reached
    if (!(*change_u > 0.0 && *change_u < 1.0)) {
        throw InvalidInput("change_u must be strictly inside (0, 1)");
    }
    return static_cast<std::size_t>(std::floor(*change_u * static_cast<double>(n)));
}

// E[c / (c + exp(s W))], W standard normal; Simpson on [-12, 12].
double marginal_censor_prob(double c, double s) {
    constexpr int kIntervals = 4096;  // even
    constexpr double kLo = -12.0, kHi = 12.0;
    const double h = (kHi - kLo) / kIntervals;
    auto f = [&](double w) {
        const double dens = std::exp(-0.5 * w * w) / std::sqrt(2.0 * 3.14159265358979323846);
        return c / (c + std::exp(s * w)) * dens;
    };
    double acc = f(kLo) + f(kHi);
    for (int i = 1; i < kIntervals; ++i) acc += f(kLo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// Censoring rate c with the target marginal censoring fraction, mixing the
// pre/post regimes by their subject fractions.
double solve_censor_rate(double target, const std::vector<std::pair<double, double>>& regimes) {
    auto prob = [&](double c) {
        double p = 0.0;
        for (const auto& [frac, snorm] : regimes) p += frac * marginal_censor_prob(c, snorm);
        return p;
    };
    double lo = std::log(1e-12), hi = std::log(1e12);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (prob(std::exp(mid)) < target ? lo : hi) = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

}  // namespace

// ---------- i.i.d. Gaussian ----------

std::vector<double> gaussian_simulate(const IidGaussianConfig& cfg, RngStream& rng) {
    if (cfg.n < 1) throw InvalidInput("gaussian_simulate: n must be >= 1");
    if (!(cfg.sigma > 0.0)) throw InvalidInput("gaussian_simulate: sigma must be > 0");
    const std::size_t k_change = cfg.change_u ? change_index(cfg.change_u, cfg.n)
                                              : static_cast<std::size_t>(cfg.n);
    std::vector<double> xs(static_cast<std::size_t>(cfg.n));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double mean = cfg.mu0 + (cfg.change_u && i >= k_change ? cfg.shift : 0.0);
        xs[i] = mean + cfg.sigma * rng.normal();
    }
    return xs;
}

EstimatingFunctionSpec gaussian_mean_spec(double sigma) {
    if (!(sigma > 0.0)) throw InvalidInput("gaussian_mean_spec: sigma must be > 0");
    const double inv_var = 1.0 / (sigma * sigma);
    EstimatingFunctionSpec spec;
    spec.dim = 1;
    spec.label = "gaussian-mean";
    spec.psi = [inv_var](Obs x, const Vec& theta, Vec& out) { out[0] = (x[0] - theta[0]) * inv_var; };
    spec.dpsi = [inv_var](Obs, const Vec&, Mat& out) { out(0, 0) = -inv_var; };
    return spec;
}

EstimatingFunctionSpec gaussian_meanvar_spec() {
    EstimatingFunctionSpec spec;
    spec.dim = 2;
    spec.label = "gaussian-meanvar";
    spec.psi = [](Obs x, const Vec& theta, Vec& out) {
        const double v = theta[1];
        if (!(v > 0.0)) {  // outside the admissible region; force backtracking
            out[0] = kNan;
            out[1] = kNan;
            return;
        }
        const double r = x[0] - theta[0];
        out[0] = r / v;
        out[1] = (r * r - v) / (2.0 * v * v);
    };
    spec.dpsi = [](Obs x, const Vec& theta, Mat& out) {
        const double v = theta[1];
        if (!(v > 0.0)) {
            out(0, 0) = out(0, 1) = out(1, 0) = out(1, 1) = kNan;
            return;
        }
        const double r = x[0] - theta[0];
        out(0, 0) = -1.0 / v;
        out(0, 1) = -r / (v * v);
        out(1, 0) = -r / (v * v);
        out(1, 1) = -r * r / (v * v * v) + 1.0 / (2.0 * v * v);
    };
    return spec;
}

// ---------- Ornstein-Uhlenbeck ----------

std::vector<double> ou_simulate(const OuConfig& cfg, RngStream& rng) {
    if (cfg.n < 1) throw InvalidInput("ou_simulate: n must be >= 1");
    if (!(cfg.theta > 0.0)) throw InvalidInput("ou_simulate: theta must be > 0 (ergodicity)");
    if (cfg.sigma < 0.0) throw InvalidInput("ou_simulate: sigma must be >= 0");
    if (!(cfg.delta > 0.0)) throw InvalidInput("ou_simulate: delta must be > 0");
    if (cfg.delta * cfg.theta >= 0.5) {
        throw InvalidInput("ou_simulate: need delta * theta < 0.5 for a sane discretization");
    }
    if (cfg.change_u && !(cfg.theta_post > 0.0)) {
        throw InvalidInput("ou_simulate: theta_post must be > 0 when change_u is set");
    }

    const std::size_t k_change = cfg.change_u ? change_index(cfg.change_u, cfg.n)
                                              : static_cast<std::size_t>(cfg.n);
    const double noise = cfg.sigma * std::sqrt(cfg.delta);
    std::vector<double> path(static_cast<std::size_t>(cfg.n) + 1);
    path[0] = cfg.x0;
    for (std::size_t k = 0; k < static_cast<std::size_t>(cfg.n); ++k) {
        const double theta_eff = (cfg.change_u && k >= k_change) ? cfg.theta_post : cfg.theta;
        path[k + 1] = path[k] - theta_eff * path[k] * cfg.delta + noise * rng.normal();
    }
    return path;
}

EstimatingFunctionSpec ou_drift_spec(double sigma, double delta) {
    if (!(sigma > 0.0)) throw InvalidInput("ou_drift_spec: sigma must be > 0");
    if (!(delta > 0.0)) throw InvalidInput("ou_drift_spec: delta must be > 0");
    const double inv_var = 1.0 / (sigma * sigma);
    EstimatingFunctionSpec spec;
    spec.dim = 1;
    spec.label = "ou-drift";
    spec.psi = [inv_var, delta](Obs x, const Vec& theta, Vec& out) {
        const double dx = x[1] - x[0];
        out[0] = -x[0] * (dx + theta[0] * x[0] * delta) * inv_var;
    };
    spec.dpsi = [inv_var, delta](Obs x, const Vec&, Mat& out) {
        out(0, 0) = -x[0] * x[0] * delta * inv_var;
    };
    return spec;
}

double ou_closed_form_theta(const std::vector<double>& path, double delta) {
    if (path.size() < 2) throw InvalidInput("ou_closed_form_theta: path needs at least 2 points");
    double num = 0.0, den = 0.0;
    for (std::size_t k = 1; k < path.size(); ++k) {
        const double prev = path[k - 1];
        num += prev * (path[k] - prev);
        den += prev * prev;
    }
    if (den == 0.0) throw NumericsError("ou_closed_form_theta: degenerate path (all zeros)");
    return -num / (delta * den);
}

// ---------- Cox regression ----------

std::size_t SurvData::n_events() const {
    return static_cast<std::size_t>(std::count(status.begin(), status.end(), 1));
}

void SurvData::validate() const {
    if (dim < 1 || dim > kMaxDim) throw InvalidInput("SurvData: covariate dim must be in [1, 16]");
    if (time.size() != status.size() || covariates.size() != time.size() * static_cast<std::size_t>(dim)) {
        throw InvalidInput("SurvData: inconsistent field lengths");
    }
    for (std::size_t i = 0; i < time.size(); ++i) {
        if (!(time[i] > 0.0) || !std::isfinite(time[i])) {
            throw InvalidInput("SurvData: times must be positive and finite (subject " +
                               std::to_string(i) + ")");
        }
        if (status[i] != 0 && status[i] != 1) {
            throw InvalidInput("SurvData: status must be 0 or 1 (subject " + std::to_string(i) + ")");
        }
    }
}

void break_time_ties(SurvData& data) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return data.time[a] < data.time[b]; });
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && data.time[order[j]] == data.time[order[i]]) ++j;
        for (std::size_t k = i + 1; k < j; ++k) {
            data.time[order[k]] += 1e-9 * static_cast<double>(k - i);
        }
        i = j;
    }
}

SurvData cox_simulate(const CoxSimConfig& cfg, RngStream& rng) {
    const int d = cfg.theta.dim();
    if (d < 1) throw InvalidInput("cox_simulate: theta must have dim >= 1");
    if (cfg.n < 20 * d) throw InvalidInput("cox_simulate: need n >= 20 * dim");
    if (!(cfg.censor_rate >= 0.0 && cfg.censor_rate < 1.0)) {
        throw InvalidInput("cox_simulate: censor_rate must be in [0, 1)");
    }
    Vec theta_post = cfg.theta_post.dim() == 0 ? cfg.theta : cfg.theta_post;
    if (theta_post.dim() != d) throw DimensionMismatch("cox_simulate: theta_post dim mismatch");

    const std::size_t k_change = cfg.change_u ? change_index(cfg.change_u, cfg.n)
                                              : static_cast<std::size_t>(cfg.n);

    double censor_c = 0.0;
    if (cfg.censor_rate > 0.0) {
        std::vector<std::pair<double, double>> regimes;
        const double frac_post = cfg.change_u
                                     ? 1.0 - static_cast<double>(k_change) / static_cast<double>(cfg.n)
                                     : 0.0;
        regimes.emplace_back(1.0 - frac_post, cfg.theta.norm());
        if (frac_post > 0.0) regimes.emplace_back(frac_post, theta_post.norm());
        censor_c = solve_censor_rate(cfg.censor_rate, regimes);
    }

    SurvData data;
    data.dim = d;
    data.time.resize(static_cast<std::size_t>(cfg.n));
    data.status.resize(static_cast<std::size_t>(cfg.n));
    data.covariates.resize(static_cast<std::size_t>(cfg.n) * static_cast<std::size_t>(d));

    for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.n); ++i) {
        double eta = 0.0;
        const Vec& th = (cfg.change_u && i >= k_change) ? theta_post : cfg.theta;
        for (int j = 0; j < d; ++j) {
            const double zij = rng.normal();
            data.covariates[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] = zij;
            eta += th[j] * zij;
        }
        const double event_time = rng.exponential(std::exp(eta));
        if (censor_c > 0.0) {
            const double censor_time = rng.exponential(censor_c);
            data.time[i] = std::min(event_time, censor_time);
            data.status[i] = event_time <= censor_time ? 1 : 0;
        } else {
            data.time[i] = event_time;
            data.status[i] = 1;
        }
    }
    break_time_ties(data);
    if (data.n_events() < static_cast<std::size_t>(d) + 1) {
        throw TooFewEvents(data.n_events(), static_cast<std::size_t>(d) + 1);
    }
    return data;
}

CoxScore cox_score_process(const SurvData& data, const Vec& theta) {
    data.validate();
    const int d = data.dim;
    if (theta.dim() != d) throw DimensionMismatch("cox_score_process: theta dim mismatch");
    const std::size_t n = data.size();
    if (n == 0) throw InvalidInput("cox_score_process: empty data");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return data.time[a] < data.time[b]; });

    CoxScore out;
    out.psi_sum = Vec(d);
    out.vinfo_sum = Mat(d);
    const std::size_t m = data.n_events();
    out.event_time.reserve(m);
    out.psi.reserve(m);
    out.vinfo.reserve(m);

    // Accumulate risk-set sums from the largest time downwards; each event's
    // risk set is exactly what has been accumulated when it is reached.
    double s0 = 0.0;
    Vec s1(d);
    Mat s2(d);
    for (std::size_t pos = n; pos-- > 0;) {
        const std::size_t subj = order[pos];
        const auto z = data.z(subj);
        double eta = 0.0;
        for (int j = 0; j < d; ++j) eta += theta[j] * z[static_cast<std::size_t>(j)];
        const double w = std::exp(eta);
        s0 += w;
        for (int r = 0; r < d; ++r) {
            s1[r] += w * z[static_cast<std::size_t>(r)];
            for (int c = 0; c < d; ++c) s2(r, c) += w * z[static_cast<std::size_t>(r)] * z[static_cast<std::size_t>(c)];
        }
        if (data.status[subj] != 1) continue;

        if (!(s0 > 0.0) || !std::isfinite(s0)) throw EmptyRiskSet(data.time[subj]);
        Vec mean(d);
        for (int r = 0; r < d; ++r) mean[r] = s1[r] / s0;
        Vec psi(d);
        for (int r = 0; r < d; ++r) psi[r] = z[static_cast<std::size_t>(r)] - mean[r];
        Mat v(d);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) v(r, c) = s2(r, c) / s0 - mean[r] * mean[c];

        out.event_time.push_back(data.time[subj]);
        out.psi.push_back(psi);
        out.vinfo.push_back(v);
        out.psi_sum += psi;
        out.vinfo_sum += v;
    }
    std::reverse(out.event_time.begin(), out.event_time.end());
    std::reverse(out.psi.begin(), out.psi.end());
    std::reverse(out.vinfo.begin(), out.vinfo.end());
    return out;
}

CoxFit cox_fit(const SurvData& data, const Vec& theta0, double tol, int max_iter) {
    const int d = data.dim;
    if (theta0.dim() != d) throw DimensionMismatch("cox_fit: theta0 dim mismatch");
    if (data.n_events() < static_cast<std::size_t>(d) + 1) {
        throw InvalidInput("cox_fit: need more than dim = " + std::to_string(d) + " events, got " +
                           std::to_string(data.n_events()));
    }

    auto score = [&](const Vec& theta) { return cox_score_process(data, theta).psi_sum; };
    auto neg_info = [&](const Vec& theta) {
        Mat j = cox_score_process(data, theta).vinfo_sum;
        j *= -1.0;
        return j;
    };
    try {
        NewtonResult r = newton_solve(score, neg_info, theta0, tol, max_iter);
        return {r.root, r.iterations};
    } catch (const SingularJacobian& e) {
        throw SingularJacobian(std::string("cox: ") + e.what(), e.diagnostics);
    } catch (const NoConvergence& e) {
        throw NoConvergence(std::string("cox: ") + e.what(), e.diagnostics);
    }
}

std::vector<double> information_clock(const CoxScore& score) {
    const std::size_t m = score.events();
    if (m == 0) throw InvalidInput("information_clock: no events");
    const int d = score.psi_sum.dim();

    Mat total = score.vinfo_sum;
    total.symmetrize();
    Cholesky spd_check{SpdMatrix(total)};  // total information must be SPD
    (void)spd_check;

    double total_trace = 0.0;
    for (int j = 0; j < d; ++j) total_trace += total(j, j);

    std::vector<double> u(m + 1, 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double tr = 0.0;
        for (int j = 0; j < d; ++j) tr += score.vinfo[i](j, j);
        acc += tr;
        u[i + 1] = acc / total_trace;
    }
    u[m] = 1.0;  // pin against rounding drift
    return u;
}

std::vector<double> cox_zprocess_time(const SurvData& data, const Vec& theta_hat) {
    return information_clock(cox_score_process(data, theta_hat));
}

CoxClock cox_clock_from_string(const std::string& s) {
    if (s == "events") return CoxClock::events;
    if (s == "information") return CoxClock::information;
    throw InvalidInput("unknown cox clock '" + s + "' (expected events|information)");
}

std::string to_string(CoxClock clock) {
    return clock == CoxClock::events ? "events" : "information";
}

namespace {

SpdMatrix cox_information(const CoxScore& score, InfoMode mode) {
    const int d = score.psi_sum.dim();
    const double inv_m = 1.0 / static_cast<double>(score.events());
    Mat acc(d);
    if (mode == InfoMode::outer) {
        for (const Vec& p : score.psi) {
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) acc(r, c) += p[r] * p[c];
        }
    } else {
        acc = score.vinfo_sum;
    }
    acc *= inv_m;
    acc.symmetrize();
    SpdMatrix info(acc);
    Cholesky check(info);
    (void)check;
    return info;
}

}  // namespace

ZPath cox_z_process(const SurvData& data, const Vec& theta_hat, InfoMode mode, CoxClock clock) {
    CoxScore score = cox_score_process(data, theta_hat);
    if (score.events() == 0) throw InvalidInput("cox_z_process: no events");
    SpdMatrix info = cox_information(score, mode);
    if (clock == CoxClock::information) {
        const std::vector<double> u = information_clock(score);
        return whiten_partial_sums(score.psi, info, &u);
    }
    return whiten_partial_sums(score.psi, info);
}

TestRun cox_run_test_with_path(const SurvData& data, const Vec& theta0, InfoMode mode,
                               CoxClock clock, const CritTable* table, double tol) {
    const int d = data.dim;
    if (data.n_events() <= static_cast<std::size_t>(d)) {
        throw InvalidInput("cox_run_test: need more than dim = " + std::to_string(d) + " events");
    }

    CoxFit fit = cox_fit(data, theta0, tol);
    CoxScore score = cox_score_process(data, fit.theta);
    const std::size_t m = score.events();
    SpdMatrix info = cox_information(score, mode);

    ZPath path;
    if (clock == CoxClock::information) {
        const std::vector<double> u = information_clock(score);
        path = whiten_partial_sums(score.psi, info, &u);
    } else {
        path = whiten_partial_sums(score.psi, info);
    }

    // The fit controls the score *sum*; the mean-equation tolerance is tol/m.
    const double pin = pinning_tolerance(m, tol / static_cast<double>(m), Cholesky(info).min_pivot());
    if (std::sqrt(path.sqnorm[m]) > pin) {
        throw NumericsError("cox: bridge endpoint exceeds pinning tolerance");
    }
    TestRun run;
    run.report = finish_report(path, fit.theta, info, fit.iterations, table);
    run.path = std::move(path);
    return run;
}

TestReport cox_run_test(const SurvData& data, const Vec& theta0, InfoMode mode, CoxClock clock,
                        const CritTable* table, double tol) {
    return cox_run_test_with_path(data, theta0, mode, clock, table, tol).report;
}

}  // namespace zproc
