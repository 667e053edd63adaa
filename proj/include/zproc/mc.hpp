#pragma once

// Monte Carlo harness: size/power of the change-point test and moment
// convergence of the Z-estimators, replication r always drawing from
// stream (master_seed, r) so reports reproduce bit-exactly.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zproc/models.hpp"

namespace zproc {

enum class ModelId { gaussian_mean, gaussian_meanvar, ou, cox };

ModelId model_id_from_string(const std::string& s);
std::string to_string(ModelId id);

struct TableParams {
    int grid_n = 1 << 14;
    int reps = 100000;
    std::uint64_t seed = 20120607;
};

struct McConfig {
    ModelId model = ModelId::gaussian_mean;
    IidGaussianConfig gauss;
    OuConfig ou;
    CoxSimConfig cox;

    int reps = 0;
    std::vector<int> n_list;
    std::vector<double> alpha_list = {0.10, 0.05, 0.01};
    std::uint64_t master_seed = 0;
    std::vector<int> moment_orders = {1, 2, 3, 4};
    InfoMode mode = InfoMode::outer;
    CoxClock clock = CoxClock::events;
    int threads = 0;
    TableParams table;        // used when the model dim is > 1
    std::string cache_dir;    // empty: no table cache

    int dim() const;
    std::optional<double> change_u() const;
    void validate() const;
};

McConfig mc_config_from_json_string(const std::string& text);
McConfig mc_config_from_file(const std::string& path);

struct McSizeEntry {
    int n = 0;
    double alpha = 0.0;
    int rejects = 0;
    int successes = 0;
    double rate = 0.0;
    double se = 0.0;
};

struct McMomentEntry {
    int n = 0;
    int p = 0;
    int component = 0;
    double estimate = 0.0;
    double se = 0.0;      // jackknife standard error of the mean
    double target = 0.0;  // Gaussian absolute moment
};

struct McLocalizationEntry {
    int n = 0;
    int rejecting = 0;
    double frac_within_010 = 0.0;  // |u_hat - u0| <= 0.1
    double abs_err_q50 = 0.0;
    double abs_err_q90 = 0.0;
};

struct McFailureEntry {
    int n = 0;
    int count = 0;
    std::string first_message;
};

struct McReport {
    std::string kind;   // "size_power" or "moments"
    std::string model;
    int reps = 0;
    std::uint64_t master_seed = 0;
    std::optional<double> change_u;
    std::vector<McSizeEntry> size_power;
    std::vector<McLocalizationEntry> localization;
    std::vector<McMomentEntry> moments;
    std::vector<McFailureEntry> failures;

    std::string to_json_string(int indent = 2) const;
    std::string to_text() const;
};

// E|N(0,1)|^p.
double gaussian_abs_moment(int p);

McReport mc_size_power(const McConfig& cfg);
McReport mc_moments(const McConfig& cfg);

}  // namespace zproc
