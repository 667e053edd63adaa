#pragma once

// Null-distribution calibration for the sup-norm statistic: the law of
// sup_u |B°_d(u)| for a d-dimensional standard Brownian bridge. d = 1 has
// the closed-form Kolmogorov series; general d is tabulated by simulation.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace zproc {

// P(sup_u |B°(u)| <= x), the Kolmogorov distribution:
// 1 - 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2), truncated when a term
// drops below 1e-16. Returns 0 for x <= 0.
double kolmogorov_cdf(double x);

// Upper quantile of the Kolmogorov law by bisection on the series.
double kolmogorov_quantile(double level);

struct CritTable {
    int dim = 0;
    int grid_n = 0;
    int reps = 0;
    std::uint64_t seed = 0;
    std::vector<double> ecdf;               // sorted simulated suprema
    std::map<double, double> quantiles;     // level -> statistic, at {0.90, 0.95, 0.99}

    double quantile(double level) const;    // order statistic from ecdf
};

// Simulated supremum of the d-dimensional bridge norm on a grid of
// grid_n steps: per coordinate W_k is a partial sum of N(0, 1/grid_n),
// B°(k/grid_n) = W_k - (k/grid_n) W_{grid_n}. Each supremum carries the
// expected discrete-maximum gap correction -zeta(1/2)/sqrt(2*pi*grid_n)
// so the table targets the continuum law. Replication r draws from
// stream (seed, r); deterministic and thread-count independent.
CritTable simulate_sup_bridge(int dim, int grid_n, int reps, std::uint64_t seed,
                              int threads = 0);

// Right-tail p-value with add-one smoothing: (#{sup > s} + 1)/(reps + 1).
double p_value(const CritTable& table, double s, int dim);

// d = 1 closed form: 1 - kolmogorov_cdf(s).
double p_value_series(double s);

// Dispatch: series for d = 1, table otherwise (DimensionMismatch when the
// table is missing or built for another dim).
double p_value(double s, int dim, const CritTable* table);

// Cache format: header line "dim,grid_n,reps,seed", then one sorted
// supremum per line with 17 significant digits.
std::filesystem::path crit_cache_file(const std::filesystem::path& dir, int dim, int grid_n,
                                      int reps, std::uint64_t seed);
void save_crit_table(const CritTable& table, const std::filesystem::path& file);
CritTable load_crit_table(const std::filesystem::path& file);

struct CachedCritTable {
    CritTable table;
    bool from_cache = false;
    bool cache_written = false;
};

// Loads from dir when present, otherwise simulates and tries to write the
// cache (an unwritable directory is a warning, not an error).
CachedCritTable crit_table_cached(const std::filesystem::path& dir, int dim, int grid_n,
                                  int reps, std::uint64_t seed, int threads = 0);

}  // namespace zproc
