#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "support.hpp"
#include "zproc/errors.hpp"
#include "zproc/limits.hpp"

using namespace zproc;

TEST_SUITE("limits") {

TEST_CASE("kolmogorov cdf boundary and reference values") {
    CHECK(kolmogorov_cdf(0.0) == 0.0);
    CHECK(kolmogorov_cdf(-1.0) == 0.0);
    CHECK(std::fabs(kolmogorov_cdf(0.5) - 0.0361) <= 5e-4);
    CHECK(std::fabs(kolmogorov_cdf(1.3581) - 0.9500) <= 5e-4);
    CHECK(kolmogorov_cdf(3.0) > 1.0 - 1e-6);
}

TEST_CASE("kolmogorov cdf is nondecreasing on a fine grid") {
    double prev = 0.0;
    for (int i = 0; i <= 10000; ++i) {
        const double x = 3.0 * i / 10000.0;
        const double v = kolmogorov_cdf(x);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("kolmogorov quantile inverts the series") {
    const double q95 = kolmogorov_quantile(0.95);
    CHECK(std::fabs(q95 - 1.3581) <= 5e-4);
    CHECK(kolmogorov_cdf(q95) == doctest::Approx(0.95).epsilon(1e-9));
}

TEST_CASE("series p-value conventions") {
    CHECK(p_value_series(0.0) == 1.0);
    CHECK(std::fabs(p_value_series(1.3581) - 0.05) <= 5e-4);
    CHECK(p_value(0.7, 1, nullptr) == doctest::Approx(1.0 - kolmogorov_cdf(0.7)));
}

TEST_CASE("simulated table matches the series anchor at desk scale") {
    const CritTable t = simulate_sup_bridge(1, 1024, 5000, 321);
    CHECK(std::fabs(t.quantile(0.95) - 1.3581) <= 0.05);
    for (double s : t.ecdf) CHECK(s > 0.0);
}

TEST_CASE("higher dimension dominates stochastically on the same seed") {
    const CritTable d1 = simulate_sup_bridge(1, 1024, 2000, 99);
    const CritTable d3 = simulate_sup_bridge(3, 1024, 2000, 99);
    for (int i = 1; i < 100; ++i) {
        const double level = i / 100.0;
        CHECK(d3.quantile(level) > d1.quantile(level));
    }
}

TEST_CASE("table p-values: tail convention, monotonicity, round trip") {
    const CritTable t = simulate_sup_bridge(2, 1024, 2000, 7);
    CHECK(p_value(t, 0.0, 2) == 1.0);
    CHECK(p_value(t, t.ecdf.back() + 1.0, 2) == doctest::Approx(1.0 / (t.ecdf.size() + 1.0)));

    double prev = 1.0;
    for (int i = 0; i <= 50; ++i) {
        const double s = 3.0 * i / 50.0;
        const double p = p_value(t, s, 2);
        CHECK(p <= prev);
        CHECK(p > 0.0);
        CHECK(p <= 1.0);
        prev = p;
    }

    const double band = 2.0 / std::sqrt(static_cast<double>(t.reps));
    for (double level : {0.90, 0.95, 0.99}) {
        CHECK(std::fabs(p_value(t, t.quantile(level), 2) - (1.0 - level)) <= band);
    }
}

TEST_CASE("dimension mismatches are rejected") {
    const CritTable t = simulate_sup_bridge(2, 1024, 1000, 1);
    CHECK_THROWS_AS(p_value(t, 1.0, 3), DimensionMismatch);
    CHECK_THROWS_AS(p_value(1.0, 2, nullptr), DimensionMismatch);
}

TEST_CASE("argument bounds") {
    CHECK_THROWS_AS(simulate_sup_bridge(0, 1024, 1000, 1), InvalidInput);
    CHECK_THROWS_AS(simulate_sup_bridge(1, 512, 1000, 1), InvalidInput);
    CHECK_THROWS_AS(simulate_sup_bridge(1, 1024, 99, 1), InvalidInput);
}

TEST_CASE("thread count does not change the table") {
    const CritTable serial = simulate_sup_bridge(1, 1024, 1200, 5, 1);
    const CritTable parallel = simulate_sup_bridge(1, 1024, 1200, 5, 4);
    CHECK(serial.ecdf == parallel.ecdf);
}

TEST_CASE("cache round trip is bit exact and reused") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "zproc-test-cache";
    fs::remove_all(dir);

    const CachedCritTable first = crit_table_cached(dir, 1, 1024, 1000, 11);
    CHECK_FALSE(first.from_cache);
    CHECK(first.cache_written);

    const CachedCritTable second = crit_table_cached(dir, 1, 1024, 1000, 11);
    CHECK(second.from_cache);
    CHECK(second.table.ecdf == first.table.ecdf);
    CHECK(second.table.quantiles == first.table.quantiles);

    // Corrupt entries are rebuilt rather than trusted.
    std::ofstream(crit_cache_file(dir, 1, 1024, 1000, 11)) << "garbage\n";
    const CachedCritTable third = crit_table_cached(dir, 1, 1024, 1000, 11);
    CHECK_FALSE(third.from_cache);
    CHECK(third.table.ecdf == first.table.ecdf);
    fs::remove_all(dir);
}

TEST_CASE("unwritable cache directory degrades gracefully") {
    const CachedCritTable t = crit_table_cached("/proc/definitely-not-writable", 1, 1024, 1000, 3);
    CHECK_FALSE(t.from_cache);
    CHECK_FALSE(t.cache_written);
    CHECK(t.table.ecdf.size() == 1000);
}

}  // TEST_SUITE
