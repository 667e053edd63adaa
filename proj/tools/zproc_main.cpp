// zproc: simulate data, run Z-process change-point tests on CSV files,
// build critical-value tables, run Monte Carlo suites, dump Z-paths.
//
// Exit codes: 0 completed, 2 usage/input error, 3 numerical failure.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "zproc/csv.hpp"
#include "zproc/errors.hpp"
#include "zproc/limits.hpp"
#include "zproc/mc.hpp"
#include "zproc/models.hpp"
#include "zproc/rng.hpp"
#include "zproc/zcore.hpp"

namespace {

using nlohmann::json;
using namespace zproc;

std::string resolve_cache_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("ZPROC_CACHE_DIR"); env != nullptr && *env != '\0') return env;
    return ".zproc-cache";
}

Vec parse_theta_list(const std::string& text) {
    std::vector<double> xs;
    std::stringstream in(text);
    std::string field;
    while (std::getline(in, field, ',')) {
        try {
            std::size_t pos = 0;
            xs.push_back(std::stod(field, &pos));
            if (pos != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw InvalidInput("cannot parse theta component '" + field + "'");
        }
    }
    if (xs.empty() || xs.size() > static_cast<std::size_t>(kMaxDim)) {
        throw InvalidInput("theta must have between 1 and 16 comma-separated components");
    }
    Vec v(static_cast<int>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<int>(i)] = xs[i];
    return v;
}

void write_output(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw InvalidInput("cannot open output file '" + out_path + "'");
    out << content;
    if (!out) throw InvalidInput("short write to '" + out_path + "'");
}

// ---------- simulate ----------

struct SimulateFlags {
    std::string model;
    int n = 0;
    std::uint64_t seed = 0;
    std::string out;
    double mu0 = 0.0;
    double sigma = 1.0;
    double shift = 0.0;
    double theta = 1.0;
    double delta = 0.1;
    double x0 = 0.0;
    double censor_rate = 0.0;
    std::string theta_list = "0.5";
    std::string theta_post_list;
    double theta_post = 0.0;
    double change_u = 0.0;
    bool has_change = false;
};

int cmd_simulate(const SimulateFlags& f) {
    RngStream rng(f.seed, 0);
    std::optional<double> change_u;
    if (f.has_change) change_u = f.change_u;
    std::ostringstream body;

    const ModelId id = model_id_from_string(f.model);
    switch (id) {
        case ModelId::gaussian_mean:
        case ModelId::gaussian_meanvar: {
            IidGaussianConfig cfg{f.n, f.mu0, f.sigma, f.shift, change_u};
            write_scalar_series(gaussian_simulate(cfg, rng), body);
            break;
        }
        case ModelId::ou: {
            OuConfig cfg;
            cfg.theta = f.theta;
            cfg.sigma = f.sigma;
            cfg.delta = f.delta;
            cfg.n = f.n;
            cfg.x0 = f.x0;
            cfg.change_u = change_u;
            cfg.theta_post = change_u ? (f.theta_post != 0.0 ? f.theta_post : f.theta) : 0.0;
            write_ou_path(ou_simulate(cfg, rng), cfg.delta, body);
            break;
        }
        case ModelId::cox: {
            CoxSimConfig cfg;
            cfg.theta = parse_theta_list(f.theta_list);
            cfg.n = f.n;
            cfg.censor_rate = f.censor_rate;
            cfg.change_u = change_u;
            if (!f.theta_post_list.empty()) cfg.theta_post = parse_theta_list(f.theta_post_list);
            write_surv_csv(cox_simulate(cfg, rng), body);
            break;
        }
    }
    write_output(f.out, body.str());
    return 0;
}

// ---------- test / zpath ----------

struct TestFlags {
    std::string model;
    std::string input;
    std::string out;  // zpath only
    double sigma = 1.0;
    double delta = 0.1;
    std::string mode = "outer";
    std::string clock = "events";
    double alpha = 0.05;
    int table_grid_n = 1 << 14;
    int table_reps = 100000;
    std::uint64_t table_seed = 20120607;
    std::string cache_dir;
};

TestRun run_pipeline(const TestFlags& f, std::string& model_label, std::size_t& n_obs,
                     bool& used_clock) {
    const ModelId id = model_id_from_string(f.model);
    const InfoMode mode = info_mode_from_string(f.mode);
    model_label = to_string(id);
    used_clock = id == ModelId::cox;

    // d > 1 models calibrate against a cached simulated table.
    CritTable table_storage;
    const CritTable* table = nullptr;
    auto ensure_table = [&](int dim) {
        if (dim == 1) return;
        table_storage = crit_table_cached(resolve_cache_dir(f.cache_dir), dim, f.table_grid_n,
                                          f.table_reps, f.table_seed)
                            .table;
        table = &table_storage;
    };

    switch (id) {
        case ModelId::gaussian_mean: {
            const Dataset data = Dataset::column(read_scalar_series(f.input));
            n_obs = data.size();
            return run_test_with_path(gaussian_mean_spec(f.sigma), data, Vec{0.0}, mode, table);
        }
        case ModelId::gaussian_meanvar: {
            const std::vector<double> xs = read_scalar_series(f.input);
            n_obs = xs.size();
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= static_cast<double>(xs.size());
            double var = 0.0;
            for (double x : xs) var += (x - mean) * (x - mean);
            var /= static_cast<double>(xs.size());
            ensure_table(2);
            return run_test_with_path(gaussian_meanvar_spec(), Dataset::column(xs),
                                      Vec{mean, std::max(var, 1e-12)}, mode, table);
        }
        case ModelId::ou: {
            const std::vector<double> path = read_ou_path(f.input);
            const Dataset data = Dataset::pairs_from_path(path);
            n_obs = data.size();
            const double start = ou_closed_form_theta(path, f.delta);
            return run_test_with_path(ou_drift_spec(f.sigma, f.delta), data, Vec{start}, mode, table);
        }
        case ModelId::cox: {
            const SurvData data = read_surv_csv(f.input);
            n_obs = data.n_events();
            ensure_table(data.dim);
            return cox_run_test_with_path(data, Vec::zeros(data.dim), mode,
                                          cox_clock_from_string(f.clock), table);
        }
    }
    throw InvalidInput("unreachable model");
}

json report_to_json(const TestReport& r, const std::string& model, std::size_t n,
                    const std::string& mode, const std::string* clock, double alpha) {
    json j;
    j["model"] = model;
    j["n"] = n;
    j["mode"] = mode;
    if (clock != nullptr) j["clock"] = *clock;
    j["statistic"] = r.statistic;
    j["p_value"] = r.p_value;
    j["alpha"] = alpha;
    j["reject"] = r.p_value <= alpha;
    json reject_at = json::object();
    for (const auto& [level, flag] : r.reject_at) {
        char key[16];
        std::snprintf(key, sizeof(key), "%.2f", level);
        reject_at[key] = flag;
    }
    j["reject_at"] = reject_at;
    j["changepoint_u"] = r.changepoint_u;
    json theta = json::array();
    for (int i = 0; i < r.theta_hat.dim(); ++i) theta.push_back(r.theta_hat[i]);
    j["theta_hat"] = theta;
    json info = json::array();
    for (int i = 0; i < r.info_hat.dim(); ++i) {
        json row = json::array();
        for (int c = 0; c < r.info_hat.dim(); ++c) row.push_back(r.info_hat(i, c));
        info.push_back(row);
    }
    j["info_hat"] = info;
    j["solver_iters"] = r.solver_iters;
    return j;
}

int cmd_test(const TestFlags& f) {
    std::string model_label;
    std::size_t n_obs = 0;
    bool used_clock = false;
    const TestRun run = run_pipeline(f, model_label, n_obs, used_clock);
    const json j = report_to_json(run.report, model_label, n_obs, f.mode,
                                  used_clock ? &f.clock : nullptr, f.alpha);
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_zpath(const TestFlags& f) {
    std::string model_label;
    std::size_t n_obs = 0;
    bool used_clock = false;
    const TestRun run = run_pipeline(f, model_label, n_obs, used_clock);
    std::ostringstream body;
    write_zpath_csv(run.path, body);
    write_output(f.out, body.str());
    return 0;
}

// ---------- critval ----------

struct CritvalFlags {
    int dim = 1;
    int grid_n = 1 << 14;
    int reps = 100000;
    std::uint64_t seed = 0;
    std::string cache_dir;
};

int cmd_critval(const CritvalFlags& f) {
    const std::string dir = resolve_cache_dir(f.cache_dir);
    const CachedCritTable cached = crit_table_cached(dir, f.dim, f.grid_n, f.reps, f.seed);
    if (!cached.from_cache && !cached.cache_written) {
        std::cerr << "warning: cache directory '" << dir << "' not writable; table not cached\n";
    }
    json j;
    j["dim"] = cached.table.dim;
    j["grid_n"] = cached.table.grid_n;
    j["reps"] = cached.table.reps;
    j["seed"] = cached.table.seed;
    json quantiles = json::object();
    for (const auto& [level, value] : cached.table.quantiles) {
        char key[16];
        std::snprintf(key, sizeof(key), "%.2f", level);
        quantiles[key] = value;
    }
    j["quantiles"] = quantiles;
    j["cached"] = cached.from_cache;
    j["cache_file"] = crit_cache_file(dir, f.dim, f.grid_n, f.reps, f.seed).string();
    std::cout << j.dump(2) << '\n';
    return 0;
}

// ---------- mc ----------

int cmd_mc(const std::string& config_path, const std::string& out_path,
           const std::string& cache_dir_flag, bool moments) {
    McConfig cfg = mc_config_from_file(config_path);
    if (cfg.cache_dir.empty() && cfg.dim() > 1) cfg.cache_dir = resolve_cache_dir(cache_dir_flag);
    const McReport report = moments ? mc_moments(cfg) : mc_size_power(cfg);
    const std::string body = report.to_json_string(2) + "\n";
    if (out_path.empty()) {
        std::cout << body;
    } else {
        write_output(out_path, body);
        std::cout << report.to_text();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Z-estimator and Z-process change-point testing"};
    app.require_subcommand(1);

    SimulateFlags sim;
    CLI::App* simulate = app.add_subcommand("simulate", "Simulate data from a shipped model");
    simulate->add_option("--model", sim.model, "gaussian-mean|gaussian-meanvar|ou|cox")->required();
    simulate->add_option("--n", sim.n, "sample size / number of steps")->required()->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim.seed, "RNG seed (required: runs are reproducible)")->required();
    simulate->add_option("--out", sim.out, "output CSV (default: stdout)");
    simulate->add_option("--mu0", sim.mu0, "gaussian: base mean");
    simulate->add_option("--sigma", sim.sigma, "gaussian/ou: noise scale");
    simulate->add_option("--shift", sim.shift, "gaussian: post-change mean shift");
    simulate->add_option("--theta", sim.theta, "ou: mean-reversion rate");
    simulate->add_option("--delta", sim.delta, "ou: observation step");
    simulate->add_option("--x0", sim.x0, "ou: initial state");
    simulate->add_option("--censor-rate", sim.censor_rate, "cox: target censoring fraction");
    simulate->add_option("--cox-theta", sim.theta_list, "cox: true theta, comma separated");
    simulate->add_option("--cox-theta-post", sim.theta_post_list, "cox: post-change theta");
    simulate->add_option("--theta-post", sim.theta_post, "ou: post-change rate");
    CLI::Option* chg = simulate->add_option("--change-u", sim.change_u, "change fraction in (0,1)");

    TestFlags tf;
    CLI::App* test = app.add_subcommand("test", "Run the change-point test on a CSV file");
    CLI::App* zpath = app.add_subcommand("zpath", "Dump the whitened Z-path as CSV");
    for (CLI::App* sub : {test, zpath}) {
        sub->add_option("--model", tf.model, "gaussian-mean|gaussian-meanvar|ou|cox")->required();
        sub->add_option("input", tf.input, "input CSV file")->required();
        sub->add_option("--sigma", tf.sigma, "gaussian-mean/ou: known noise scale");
        sub->add_option("--delta", tf.delta, "ou: observation step");
        sub->add_option("--mode", tf.mode, "information estimator: outer|jacobian")
            ->check(CLI::IsMember({"outer", "jacobian"}));
        sub->add_option("--clock", tf.clock, "cox: events|information")
            ->check(CLI::IsMember({"events", "information"}));
        sub->add_option("--alpha", tf.alpha, "headline level")->check(CLI::Range(1e-6, 0.999999));
        sub->add_option("--table-grid-n", tf.table_grid_n, "bridge grid for d>1 tables");
        sub->add_option("--table-reps", tf.table_reps, "replications for d>1 tables");
        sub->add_option("--table-seed", tf.table_seed, "seed for d>1 tables");
        sub->add_option("--cache-dir", tf.cache_dir, "critical-table cache directory");
    }
    zpath->add_option("--out", tf.out, "output CSV (default: stdout)");

    CritvalFlags cf;
    CLI::App* critval = app.add_subcommand("critval", "Build/inspect a critical-value table");
    critval->add_option("--dim", cf.dim, "bridge dimension")->required()->check(CLI::Range(1, 16));
    critval->add_option("--grid-n", cf.grid_n, "bridge discretization (>= 1024)");
    critval->add_option("--reps", cf.reps, "simulated replications (>= 1000)");
    critval->add_option("--seed", cf.seed, "RNG seed")->required();
    critval->add_option("--cache-dir", cf.cache_dir, "cache directory");

    std::string mc_config, mc_out, mc_cache;
    CLI::App* mc_size = app.add_subcommand("mc-size", "Monte Carlo size/power study");
    CLI::App* mc_moments_cmd = app.add_subcommand("mc-moments", "Monte Carlo moment-convergence study");
    for (CLI::App* sub : {mc_size, mc_moments_cmd}) {
        sub->add_option("--config", mc_config, "JSON config file")->required();
        sub->add_option("--out", mc_out, "write report JSON here (default: stdout)");
        sub->add_option("--cache-dir", mc_cache, "critical-table cache directory");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        sim.has_change = chg->count() > 0;
        if (simulate->parsed()) return cmd_simulate(sim);
        if (test->parsed()) return cmd_test(tf);
        if (zpath->parsed()) return cmd_zpath(tf);
        if (critval->parsed()) return cmd_critval(cf);
        if (mc_size->parsed()) return cmd_mc(mc_config, mc_out, mc_cache, false);
        if (mc_moments_cmd->parsed()) return cmd_mc(mc_config, mc_out, mc_cache, true);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericsError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
