#include "zproc/mc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "zproc/errors.hpp"
#include "zproc/limits.hpp"

namespace zproc {

using nlohmann::json;

ModelId model_id_from_string(const std::string& s) {
    if (s == "gaussian-mean") return ModelId::gaussian_mean;
    if (s == "gaussian-meanvar") return ModelId::gaussian_meanvar;
    if (s == "ou") return ModelId::ou;
    if (s == "cox") return ModelId::cox;
    throw InvalidInput("unknown model '" + s + "' (expected gaussian-mean|gaussian-meanvar|ou|cox)");
}

std::string to_string(ModelId id) {
    switch (id) {
        case ModelId::gaussian_mean: return "gaussian-mean";
        case ModelId::gaussian_meanvar: return "gaussian-meanvar";
        case ModelId::ou: return "ou";
        case ModelId::cox: return "cox";
    }
    return "?";
}

int McConfig::dim() const {
    switch (model) {
        case ModelId::gaussian_mean: return 1;
        case ModelId::gaussian_meanvar: return 2;
        case ModelId::ou: return 1;
        case ModelId::cox: return cox.theta.dim();
    }
    return 0;
}

std::optional<double> McConfig::change_u() const {
    switch (model) {
        case ModelId::gaussian_mean:
        case ModelId::gaussian_meanvar: return gauss.change_u;
        case ModelId::ou: return ou.change_u;
        case ModelId::cox: return cox.change_u;
    }
    return std::nullopt;
}

void McConfig::validate() const {
    if (reps < 100) throw InvalidInput("mc config: reps must be >= 100");
    if (n_list.empty()) throw InvalidInput("mc config: n list is empty");
    const int d = dim();
    for (int n : n_list) {
        if (n < 4 * d) throw InvalidInput("mc config: every n must be >= 4 * dim");
    }
    if (alpha_list.empty()) throw InvalidInput("mc config: alpha list is empty");
    for (double a : alpha_list) {
        if (!(a > 0.0 && a < 1.0)) throw InvalidInput("mc config: alpha must be in (0, 1)");
    }
    for (int p : moment_orders) {
        if (p < 1 || p > 8) throw InvalidInput("mc config: moment orders must be in [1, 8]");
    }
}

namespace {

Vec vec_from_json(const json& j) {
    std::vector<double> xs = j.get<std::vector<double>>();
    Vec v(static_cast<int>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<int>(i)] = xs[i];
    return v;
}

std::optional<double> opt_from_json(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace

McConfig mc_config_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidInput(std::string("mc config: ") + e.what());
    }
    try {
        McConfig cfg;
        const json& m = j.at("model");
        cfg.model = model_id_from_string(m.at("id").get<std::string>());
        switch (cfg.model) {
            case ModelId::gaussian_mean:
            case ModelId::gaussian_meanvar:
                cfg.gauss.mu0 = m.value("mu0", 0.0);
                cfg.gauss.sigma = m.value("sigma", 1.0);
                cfg.gauss.shift = m.value("shift", 0.0);
                cfg.gauss.change_u = opt_from_json(m, "change_u");
                break;
            case ModelId::ou:
                cfg.ou.theta = m.value("theta", 1.0);
                cfg.ou.sigma = m.value("sigma", 1.0);
                cfg.ou.delta = m.value("delta", 0.1);
                cfg.ou.x0 = m.value("x0", 0.0);
                cfg.ou.change_u = opt_from_json(m, "change_u");
                cfg.ou.theta_post = m.value("theta_post", 0.0);
                break;
            case ModelId::cox:
                cfg.cox.theta = vec_from_json(m.at("theta"));
                cfg.cox.censor_rate = m.value("censor_rate", 0.0);
                cfg.cox.change_u = opt_from_json(m, "change_u");
                if (m.contains("theta_post") && !m.at("theta_post").is_null()) {
                    cfg.cox.theta_post = vec_from_json(m.at("theta_post"));
                }
                break;
        }
        cfg.reps = j.at("reps").get<int>();
        cfg.n_list = j.at("n").get<std::vector<int>>();
        if (j.contains("alpha")) cfg.alpha_list = j.at("alpha").get<std::vector<double>>();
        cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
        if (j.contains("moment_p")) cfg.moment_orders = j.at("moment_p").get<std::vector<int>>();
        if (j.contains("mode")) cfg.mode = info_mode_from_string(j.at("mode").get<std::string>());
        if (j.contains("clock")) cfg.clock = cox_clock_from_string(j.at("clock").get<std::string>());
        if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
        if (j.contains("table")) {
            const json& t = j.at("table");
            cfg.table.grid_n = t.value("grid_n", cfg.table.grid_n);
            cfg.table.reps = t.value("reps", cfg.table.reps);
            cfg.table.seed = t.value("seed", cfg.table.seed);
        }
        if (j.contains("cache_dir")) cfg.cache_dir = j.at("cache_dir").get<std::string>();
        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("mc config: ") + e.what());
    }
}

McConfig mc_config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("mc config: cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return mc_config_from_json_string(buf.str());
}

double gaussian_abs_moment(int p) {
    // E|N(0,1)|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi)
    return std::pow(2.0, 0.5 * p) * std::tgamma(0.5 * (p + 1)) / std::sqrt(3.14159265358979323846);
}

namespace {

struct RepOutcome {
    bool ok = false;
    double p_value = 1.0;
    double changepoint_u = 0.0;
    Vec theta_hat;
    std::string error;
};

Vec true_theta(const McConfig& cfg) {
    switch (cfg.model) {
        case ModelId::gaussian_mean: return Vec{cfg.gauss.mu0};
        case ModelId::gaussian_meanvar: return Vec{cfg.gauss.mu0, cfg.gauss.sigma * cfg.gauss.sigma};
        case ModelId::ou: return Vec{cfg.ou.theta};
        case ModelId::cox: return cfg.cox.theta;
    }
    throw InvalidInput("mc: bad model");
}

// Per-observation Fisher information diagonal at the true parameter.
Vec true_info_diag(const McConfig& cfg) {
    switch (cfg.model) {
        case ModelId::gaussian_mean:
            return Vec{1.0 / (cfg.gauss.sigma * cfg.gauss.sigma)};
        case ModelId::gaussian_meanvar: {
            const double v = cfg.gauss.sigma * cfg.gauss.sigma;
            return Vec{1.0 / v, 1.0 / (2.0 * v * v)};
        }
        case ModelId::ou:
            return Vec{cfg.ou.delta / (2.0 * cfg.ou.theta)};
        case ModelId::cox:
            throw InvalidInput("mc_moments: no closed-form information for the cox model");
    }
    throw InvalidInput("mc: bad model");
}

// Estimate only (moments path).
Vec solve_one(const McConfig& cfg, int n, RngStream& rng) {
    switch (cfg.model) {
        case ModelId::gaussian_mean: {
            IidGaussianConfig g = cfg.gauss;
            g.n = n;
            const Dataset data = Dataset::column(gaussian_simulate(g, rng));
            return solve_z_estimator(gaussian_mean_spec(g.sigma), data, Vec{g.mu0}).theta;
        }
        case ModelId::gaussian_meanvar: {
            IidGaussianConfig g = cfg.gauss;
            g.n = n;
            const std::vector<double> xs = gaussian_simulate(g, rng);
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= static_cast<double>(xs.size());
            double var = 0.0;
            for (double x : xs) var += (x - mean) * (x - mean);
            var /= static_cast<double>(xs.size());
            const Dataset data = Dataset::column(xs);
            return solve_z_estimator(gaussian_meanvar_spec(), data, Vec{mean, std::max(var, 1e-12)}).theta;
        }
        case ModelId::ou: {
            OuConfig o = cfg.ou;
            o.n = n;
            const std::vector<double> path = ou_simulate(o, rng);
            const Dataset data = Dataset::pairs_from_path(path);
            return solve_z_estimator(ou_drift_spec(o.sigma, o.delta), data, Vec{o.theta}).theta;
        }
        case ModelId::cox:
            throw InvalidInput("mc_moments: cox not supported");
    }
    throw InvalidInput("mc: bad model");
}

TestReport test_one(const McConfig& cfg, int n, RngStream& rng, const CritTable* table) {
    switch (cfg.model) {
        case ModelId::gaussian_mean: {
            IidGaussianConfig g = cfg.gauss;
            g.n = n;
            const Dataset data = Dataset::column(gaussian_simulate(g, rng));
            return run_test(gaussian_mean_spec(g.sigma), data, Vec{g.mu0}, cfg.mode, table);
        }
        case ModelId::gaussian_meanvar: {
            IidGaussianConfig g = cfg.gauss;
            g.n = n;
            const std::vector<double> xs = gaussian_simulate(g, rng);
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= static_cast<double>(xs.size());
            double var = 0.0;
            for (double x : xs) var += (x - mean) * (x - mean);
            var /= static_cast<double>(xs.size());
            const Dataset data = Dataset::column(xs);
            return run_test(gaussian_meanvar_spec(), data, Vec{mean, std::max(var, 1e-12)}, cfg.mode,
                            table);
        }
        case ModelId::ou: {
            OuConfig o = cfg.ou;
            o.n = n;
            const std::vector<double> path = ou_simulate(o, rng);
            const Dataset data = Dataset::pairs_from_path(path);
            return run_test(ou_drift_spec(o.sigma, o.delta), data, Vec{o.theta}, cfg.mode, table);
        }
        case ModelId::cox: {
            CoxSimConfig c = cfg.cox;
            c.n = n;
            const SurvData data = cox_simulate(c, rng);
            return cox_run_test(data, Vec::zeros(c.theta.dim()), cfg.mode, cfg.clock, table);
        }
    }
    throw InvalidInput("mc: bad model");
}

template <typename PerRep>
void parallel_reps(int reps, int threads, PerRep&& per_rep) {
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, reps);
    if (threads <= 1) {
        for (int r = 0; r < reps; ++r) per_rep(r);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    const int chunk = (reps + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int first = t * chunk;
        const int last = std::min(reps, first + chunk);
        if (first < last) {
            pool.emplace_back([&per_rep, first, last] {
                for (int r = first; r < last; ++r) per_rep(r);
            });
        }
    }
    for (auto& th : pool) th.join();
}

void check_failure_budget(const McConfig& cfg, int n, const std::vector<RepOutcome>& outcomes,
                          McReport& report) {
    int count = 0;
    std::string first;
    for (const RepOutcome& o : outcomes) {
        if (o.ok) continue;
        if (count == 0) first = o.error;
        ++count;
    }
    McFailureEntry entry;
    entry.n = n;
    entry.count = count;
    entry.first_message = first;
    report.failures.push_back(entry);
    if (static_cast<double>(count) > 0.01 * static_cast<double>(cfg.reps)) {
        throw NumericsError("mc: " + std::to_string(count) + "/" + std::to_string(cfg.reps) +
                            " replications failed at n = " + std::to_string(n) + " (first: " + first + ")");
    }
}

double sorted_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const auto m = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
    return sorted[std::min(sorted.size() - 1, m == 0 ? 0 : m - 1)];
}

const CritTable* prepare_table(const McConfig& cfg, CritTable& storage) {
    if (cfg.dim() == 1) return nullptr;
    if (!cfg.cache_dir.empty()) {
        storage = crit_table_cached(cfg.cache_dir, cfg.dim(), cfg.table.grid_n, cfg.table.reps,
                                    cfg.table.seed, cfg.threads)
                      .table;
    } else {
        storage = simulate_sup_bridge(cfg.dim(), cfg.table.grid_n, cfg.table.reps, cfg.table.seed,
                                      cfg.threads);
    }
    return &storage;
}

}  // namespace

McReport mc_size_power(const McConfig& cfg) {
    cfg.validate();
    McReport report;
    report.kind = "size_power";
    report.model = to_string(cfg.model);
    report.reps = cfg.reps;
    report.master_seed = cfg.master_seed;
    report.change_u = cfg.change_u();

    CritTable table_storage;
    const CritTable* table = prepare_table(cfg, table_storage);

    for (int n : cfg.n_list) {
        std::vector<RepOutcome> outcomes(static_cast<std::size_t>(cfg.reps));
        parallel_reps(cfg.reps, cfg.threads, [&](int r) {
            RepOutcome& o = outcomes[static_cast<std::size_t>(r)];
            try {
                RngStream rng(cfg.master_seed, static_cast<std::uint64_t>(r));
                const TestReport t = test_one(cfg, n, rng, table);
                o.ok = true;
                o.p_value = t.p_value;
                o.changepoint_u = t.changepoint_u;
            } catch (const std::exception& e) {
                o.ok = false;
                o.error = e.what();
            }
        });
        check_failure_budget(cfg, n, outcomes, report);

        int successes = 0;
        for (const RepOutcome& o : outcomes) successes += o.ok ? 1 : 0;
        for (double alpha : cfg.alpha_list) {
            McSizeEntry e;
            e.n = n;
            e.alpha = alpha;
            e.successes = successes;
            for (const RepOutcome& o : outcomes) e.rejects += (o.ok && o.p_value <= alpha) ? 1 : 0;
            e.rate = successes > 0 ? static_cast<double>(e.rejects) / successes : 0.0;
            e.se = successes > 0 ? std::sqrt(e.rate * (1.0 - e.rate) / successes) : 0.0;
            report.size_power.push_back(e);
        }

        if (report.change_u) {
            // Localization among replications rejecting at 5% (or the
            // smallest configured level when 5% is absent).
            double loc_alpha = cfg.alpha_list.front();
            for (double a : cfg.alpha_list) {
                if (std::fabs(a - 0.05) < 1e-12) loc_alpha = 0.05;
            }
            std::vector<double> abs_err;
            for (const RepOutcome& o : outcomes) {
                if (o.ok && o.p_value <= loc_alpha) abs_err.push_back(std::fabs(o.changepoint_u - *report.change_u));
            }
            std::sort(abs_err.begin(), abs_err.end());
            McLocalizationEntry loc;
            loc.n = n;
            loc.rejecting = static_cast<int>(abs_err.size());
            if (!abs_err.empty()) {
                const auto within = static_cast<double>(std::upper_bound(abs_err.begin(), abs_err.end(), 0.1) -
                                                        abs_err.begin());
                loc.frac_within_010 = within / static_cast<double>(abs_err.size());
                loc.abs_err_q50 = sorted_quantile(abs_err, 0.5);
                loc.abs_err_q90 = sorted_quantile(abs_err, 0.9);
            }
            report.localization.push_back(loc);
        }
    }
    return report;
}

McReport mc_moments(const McConfig& cfg) {
    cfg.validate();
    if (cfg.change_u()) throw InvalidInput("mc_moments: no-change configurations only");

    McReport report;
    report.kind = "moments";
    report.model = to_string(cfg.model);
    report.reps = cfg.reps;
    report.master_seed = cfg.master_seed;

    const Vec theta0 = true_theta(cfg);
    const Vec info_diag = true_info_diag(cfg);
    const int d = cfg.dim();

    for (int n : cfg.n_list) {
        std::vector<RepOutcome> outcomes(static_cast<std::size_t>(cfg.reps));
        parallel_reps(cfg.reps, cfg.threads, [&](int r) {
            RepOutcome& o = outcomes[static_cast<std::size_t>(r)];
            try {
                RngStream rng(cfg.master_seed, static_cast<std::uint64_t>(r));
                o.theta_hat = solve_one(cfg, n, rng);
                o.ok = true;
            } catch (const std::exception& e) {
                o.ok = false;
                o.error = e.what();
            }
        });
        check_failure_budget(cfg, n, outcomes, report);

        // |sqrt(n I_jj) (theta_hat_j - theta0_j)| per successful replication.
        std::vector<std::vector<double>> scaled(static_cast<std::size_t>(d));
        for (const RepOutcome& o : outcomes) {
            if (!o.ok) continue;
            for (int j = 0; j < d; ++j) {
                const double scale = std::sqrt(static_cast<double>(n) * info_diag[j]);
                scaled[static_cast<std::size_t>(j)].push_back(std::fabs(scale * (o.theta_hat[j] - theta0[j])));
            }
        }
        for (int p : cfg.moment_orders) {
            for (int j = 0; j < d; ++j) {
                const auto& ys = scaled[static_cast<std::size_t>(j)];
                double mean = 0.0;
                for (double y : ys) mean += std::pow(y, p);
                mean /= static_cast<double>(ys.size());
                double var = 0.0;
                for (double y : ys) {
                    const double delta = std::pow(y, p) - mean;
                    var += delta * delta;
                }
                var /= static_cast<double>(ys.size() - 1);
                McMomentEntry e;
                e.n = n;
                e.p = p;
                e.component = j;
                e.estimate = mean;
                e.se = std::sqrt(var / static_cast<double>(ys.size()));
                e.target = gaussian_abs_moment(p);
                report.moments.push_back(e);
            }
        }
    }
    return report;
}

std::string McReport::to_json_string(int indent) const {
    json j;
    j["kind"] = kind;
    j["model"] = model;
    j["reps"] = reps;
    j["master_seed"] = master_seed;
    if (change_u) j["change_u"] = *change_u;
    j["size_power"] = json::array();
    for (const auto& e : size_power) {
        j["size_power"].push_back({{"n", e.n},
                                   {"alpha", e.alpha},
                                   {"rejects", e.rejects},
                                   {"successes", e.successes},
                                   {"rate", e.rate},
                                   {"se", e.se}});
    }
    j["localization"] = json::array();
    for (const auto& e : localization) {
        j["localization"].push_back({{"n", e.n},
                                     {"rejecting", e.rejecting},
                                     {"frac_within_010", e.frac_within_010},
                                     {"abs_err_q50", e.abs_err_q50},
                                     {"abs_err_q90", e.abs_err_q90}});
    }
    j["moments"] = json::array();
    for (const auto& e : moments) {
        j["moments"].push_back({{"n", e.n},
                                {"p", e.p},
                                {"component", e.component},
                                {"estimate", e.estimate},
                                {"se", e.se},
                                {"target", e.target}});
    }
    j["failures"] = json::array();
    for (const auto& e : failures) {
        j["failures"].push_back({{"n", e.n}, {"count", e.count}, {"first_message", e.first_message}});
    }
    return j.dump(indent);
}

std::string McReport::to_text() const {
    std::ostringstream out;
    out << "model: " << model << "  kind: " << kind << "  reps: " << reps
        << "  master_seed: " << master_seed << '\n';
    if (change_u) out << "change_u: " << *change_u << '\n';
    if (!size_power.empty()) {
        out << std::left << std::setw(8) << "n" << std::setw(8) << "alpha" << std::setw(10) << "rate"
            << std::setw(10) << "se" << std::setw(10) << "rejects" << std::setw(10) << "successes" << '\n';
        for (const auto& e : size_power) {
            out << std::left << std::setw(8) << e.n << std::setw(8) << e.alpha << std::setw(10)
                << std::setprecision(4) << e.rate << std::setw(10) << std::setprecision(4) << e.se
                << std::setw(10) << e.rejects << std::setw(10) << e.successes << '\n';
        }
    }
    if (!localization.empty()) {
        out << std::left << std::setw(8) << "n" << std::setw(11) << "rejecting" << std::setw(13)
            << "frac<=0.10" << std::setw(10) << "q50" << std::setw(10) << "q90" << '\n';
        for (const auto& e : localization) {
            out << std::left << std::setw(8) << e.n << std::setw(11) << e.rejecting << std::setw(13)
                << std::setprecision(4) << e.frac_within_010 << std::setw(10) << e.abs_err_q50
                << std::setw(10) << e.abs_err_q90 << '\n';
        }
    }
    if (!moments.empty()) {
        out << std::left << std::setw(8) << "n" << std::setw(4) << "p" << std::setw(6) << "comp"
            << std::setw(12) << "estimate" << std::setw(12) << "se" << std::setw(12) << "target" << '\n';
        for (const auto& e : moments) {
            out << std::left << std::setw(8) << e.n << std::setw(4) << e.p << std::setw(6) << e.component
                << std::setw(12) << std::setprecision(5) << e.estimate << std::setw(12) << e.se
                << std::setw(12) << e.target << '\n';
        }
    }
    for (const auto& e : failures) {
        if (e.count > 0) {
            out << "failures at n=" << e.n << ": " << e.count << " (first: " << e.first_message << ")\n";
        }
    }
    return out.str();
}

}  // namespace zproc
