#include "zproc/limits.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "zproc/errors.hpp"
#include "zproc/rng.hpp"

namespace zproc {

namespace {

// Expected gap between the continuum supremum and its discrete maximum over
// an N-point grid: -zeta(1/2)/sqrt(2*pi) * N^{-1/2} (Asmussen-Glynn).
double discrete_sup_gap(int grid_n) {
    static const double beta = 1.4603545088095868 / std::sqrt(2.0 * 3.14159265358979323846);
    return beta / std::sqrt(static_cast<double>(grid_n));
}

constexpr double kQuantileLevels[] = {0.90, 0.95, 0.99};

void validate_table_args(int dim, int grid_n, int reps) {
    if (dim < 1 || dim > 16) throw InvalidInput("simulate_sup_bridge: dim must be in [1, 16]");
    if (grid_n < 1024) throw InvalidInput("simulate_sup_bridge: grid_n must be >= 1024");
    if (reps < 1000) throw InvalidInput("simulate_sup_bridge: reps must be >= 1000");
}

double sup_bridge_one(RngStream& rng, int dim, int grid_n, std::vector<double>& walk) {
    const std::size_t d = static_cast<std::size_t>(dim);
    const double step_sd = 1.0 / std::sqrt(static_cast<double>(grid_n));

    double acc[16] = {0.0};
    for (std::size_t k = 0; k < static_cast<std::size_t>(grid_n); ++k) {
        for (std::size_t j = 0; j < d; ++j) {
            acc[j] += step_sd * rng.normal();
            walk[k * d + j] = acc[j];
        }
    }
    const double* wn = &walk[(static_cast<std::size_t>(grid_n) - 1) * d];
    double best = 0.0;
    for (std::size_t k = 0; k + 1 < static_cast<std::size_t>(grid_n); ++k) {
        const double frac = static_cast<double>(k + 1) / static_cast<double>(grid_n);
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double b = walk[k * d + j] - frac * wn[j];
            sq += b * b;
        }
        if (sq > best) best = sq;
    }
    return std::sqrt(best);
}

}  // namespace

double kolmogorov_cdf(double x) {
    if (x <= 0.0) return 0.0;
    double s = 0.0;
    double sign = 1.0;
    for (int k = 1; k < 100000; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        s += sign * term;
        if (term < 1e-16) break;
        sign = -sign;
    }
    const double cdf = 1.0 - 2.0 * s;
    return std::clamp(cdf, 0.0, 1.0);
}

double kolmogorov_quantile(double level) {
    if (!(level > 0.0 && level < 1.0)) throw InvalidInput("kolmogorov_quantile: level must be in (0,1)");
    double lo = 1e-8, hi = 8.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (kolmogorov_cdf(mid) < level ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double CritTable::quantile(double level) const {
    if (!(level > 0.0 && level < 1.0)) throw InvalidInput("CritTable::quantile: level must be in (0,1)");
    if (ecdf.empty()) throw InvalidInput("CritTable::quantile: empty table");
    const auto m = static_cast<std::size_t>(std::ceil(level * static_cast<double>(ecdf.size())));
    const std::size_t idx = std::min(ecdf.size() - 1, m == 0 ? 0 : m - 1);
    return ecdf[idx];
}

CritTable simulate_sup_bridge(int dim, int grid_n, int reps, std::uint64_t seed, int threads) {
    validate_table_args(dim, grid_n, reps);

    CritTable table;
    table.dim = dim;
    table.grid_n = grid_n;
    table.reps = reps;
    table.seed = seed;
    table.ecdf.resize(static_cast<std::size_t>(reps));

    const double gap = discrete_sup_gap(grid_n);
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, reps);

    auto worker = [&](int first, int last) {
        std::vector<double> walk(static_cast<std::size_t>(grid_n) * static_cast<std::size_t>(dim));
        for (int r = first; r < last; ++r) {
            RngStream rng(seed, static_cast<std::uint64_t>(r));
            table.ecdf[static_cast<std::size_t>(r)] = sup_bridge_one(rng, dim, grid_n, walk) + gap;
        }
    };

    if (threads == 1) {
        worker(0, reps);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        const int chunk = (reps + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int first = t * chunk;
            const int last = std::min(reps, first + chunk);
            if (first < last) pool.emplace_back(worker, first, last);
        }
        for (auto& th : pool) th.join();
    }

    std::sort(table.ecdf.begin(), table.ecdf.end());
    for (double level : kQuantileLevels) table.quantiles[level] = table.quantile(level);
    return table;
}

double p_value(const CritTable& table, double s, int dim) {
    if (table.dim != dim) {
        throw DimensionMismatch("p_value: table built for dim " + std::to_string(table.dim) +
                                ", statistic has dim " + std::to_string(dim));
    }
    const auto it = std::upper_bound(table.ecdf.begin(), table.ecdf.end(), s);
    const auto count = static_cast<double>(table.ecdf.end() - it);
    return (count + 1.0) / (static_cast<double>(table.ecdf.size()) + 1.0);
}

double p_value_series(double s) { return 1.0 - kolmogorov_cdf(s); }

double p_value(double s, int dim, const CritTable* table) {
    if (dim == 1) return p_value_series(s);
    if (table == nullptr) {
        throw DimensionMismatch("p_value: dim " + std::to_string(dim) +
                                " needs a simulated critical-value table");
    }
    return p_value(*table, s, dim);
}

std::filesystem::path crit_cache_file(const std::filesystem::path& dir, int dim, int grid_n,
                                      int reps, std::uint64_t seed) {
    std::ostringstream name;
    name << "crittable_d" << dim << "_g" << grid_n << "_r" << reps << "_s" << seed << ".txt";
    return dir / name.str();
}

void save_crit_table(const CritTable& table, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::ios_base::failure("cannot write " + file.string());
    out << table.dim << ',' << table.grid_n << ',' << table.reps << ',' << table.seed << '\n';
    char buf[64];
    for (double v : table.ecdf) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf << '\n';
    }
    if (!out) throw std::ios_base::failure("short write to " + file.string());
}

CritTable load_crit_table(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::ios_base::failure("cannot read " + file.string());
    std::string header;
    if (!std::getline(in, header)) throw InvalidInput("crit table " + file.string() + ": empty file");

    CritTable table;
    char comma;
    std::istringstream hs(header);
    if (!(hs >> table.dim >> comma >> table.grid_n >> comma >> table.reps >> comma >> table.seed)) {
        throw InvalidInput("crit table " + file.string() + ": malformed header '" + header + "'");
    }
    table.ecdf.reserve(static_cast<std::size_t>(table.reps));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        table.ecdf.push_back(std::stod(line));
    }
    if (static_cast<int>(table.ecdf.size()) != table.reps) {
        throw InvalidInput("crit table " + file.string() + ": expected " + std::to_string(table.reps) +
                           " values, found " + std::to_string(table.ecdf.size()));
    }
    if (!std::is_sorted(table.ecdf.begin(), table.ecdf.end())) {
        throw InvalidInput("crit table " + file.string() + ": values not sorted");
    }
    for (double level : kQuantileLevels) table.quantiles[level] = table.quantile(level);
    return table;
}

CachedCritTable crit_table_cached(const std::filesystem::path& dir, int dim, int grid_n,
                                  int reps, std::uint64_t seed, int threads) {
    validate_table_args(dim, grid_n, reps);
    const auto file = crit_cache_file(dir, dim, grid_n, reps, seed);

    std::error_code ec;
    if (std::filesystem::exists(file, ec)) {
        try {
            CritTable t = load_crit_table(file);
            if (t.dim == dim && t.grid_n == grid_n && t.reps == reps && t.seed == seed) {
                return {std::move(t), true, false};
            }
        } catch (const std::exception&) {
            // fall through to rebuild; stale or corrupt cache entry
        }
    }

    CachedCritTable result{simulate_sup_bridge(dim, grid_n, reps, seed, threads), false, false};
    std::filesystem::create_directories(dir, ec);
    try {
        save_crit_table(result.table, file);
        result.cache_written = true;
    } catch (const std::exception&) {
        result.cache_written = false;
    }
    return result;
}

}  // namespace zproc
