#include <cmath>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "zproc/numerics.hpp"
#include "zproc/rng.hpp"

using namespace zproc;

TEST_SUITE("numerics") {

TEST_CASE("cholesky of identity is identity") {
    Cholesky chol{SpdMatrix(Mat::identity(2))};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(chol.lower()(i, j) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("cholesky of a diagonal matrix takes square roots") {
    Mat m(2);
    m(0, 0) = 4.0;
    m(1, 1) = 9.0;
    Cholesky chol{SpdMatrix(m)};
    CHECK(chol.lower()(0, 0) == doctest::Approx(2.0));
    CHECK(chol.lower()(1, 1) == doctest::Approx(3.0));
    CHECK(chol.lower()(1, 0) == 0.0);
}

TEST_CASE("cholesky reconstructs the input") {
    Mat m(2);
    m(0, 0) = 2.0;
    m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    m(1, 1) = 2.0;
    Cholesky chol{SpdMatrix(m)};
    const Mat back = chol.lower().times(chol.lower().transposed());
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(std::fabs(back(i, j) - m(i, j)) <= 1e-10 * m.frobenius_norm());
}

TEST_CASE("cholesky reconstruction across random SPD matrices") {
    for (int d = 1; d <= kMaxDim; ++d) {
        RngStream rng(1001, static_cast<std::uint64_t>(d));
        const SpdMatrix m = ztest::random_spd(d, rng);
        Cholesky chol(m);
        const Mat back = chol.lower().times(chol.lower().transposed());
        double err = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) err += (back(i, j) - m(i, j)) * (back(i, j) - m(i, j));
        CHECK(std::sqrt(err) <= 1e-10 * m.mat().frobenius_norm());
    }
}

TEST_CASE("indefinite matrix reports the failing pivot") {
    Mat m(2);
    m(0, 0) = 1.0;
    m(0, 1) = 2.0;
    m(1, 0) = 2.0;
    m(1, 1) = 1.0;
    CHECK_THROWS_AS(Cholesky{SpdMatrix(m)}, NotPositiveDefinite);
    try {
        Cholesky chol{SpdMatrix(m)};
    } catch (const NotPositiveDefinite& e) {
        CHECK(e.pivot_index == 1);
        CHECK(e.pivot_value <= 0.0);
    }
}

TEST_CASE("asymmetric input is rejected, near-symmetric is absorbed") {
    Mat bad(2);
    bad(0, 1) = 1.0;
    bad(1, 0) = 2.0;
    bad(0, 0) = bad(1, 1) = 3.0;
    CHECK_THROWS_AS(SpdMatrix{bad}, InvalidInput);

    Mat near_sym = Mat::identity(2);
    near_sym(0, 1) = 1e-14;
    const SpdMatrix ok(near_sym);
    CHECK(ok(0, 1) == ok(1, 0));
}

TEST_CASE("quad_form basics") {
    CHECK(quad_form(Vec{0.0, 0.0}, SpdMatrix(Mat::identity(2))) == 0.0);
    CHECK(quad_form(Vec{3.0, 4.0}, SpdMatrix(Mat::identity(2))) == doctest::Approx(25.0));

    Mat m(2);
    m(0, 0) = 2.0;
    m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    m(1, 1) = 2.0;
    // inverse is [[2,-1],[-1,2]]/3, so (1,1)' m^{-1} (1,1) = 2/3
    CHECK(quad_form(Vec{1.0, 1.0}, SpdMatrix(m)) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("quad_form is invariant under orthogonal conjugation") {
    for (int d : {2, 3, 7}) {
        RngStream rng(77, static_cast<std::uint64_t>(d));
        for (int trial = 0; trial < 20; ++trial) {
            const SpdMatrix m = ztest::random_spd(d, rng);
            Vec v(d);
            for (int i = 0; i < d; ++i) v[i] = rng.normal();
            const Mat q = ztest::random_rotation(d, rng);

            Mat rotated = q.times(m.mat()).times(q.transposed());
            rotated.symmetrize();
            const double base = quad_form(v, m);
            const double conj = quad_form(q.apply(v), SpdMatrix(rotated));
            CHECK(std::fabs(base - conj) <= 1e-8 * std::max(1.0, base));
        }
    }
}

TEST_CASE("newton solves affine problems in exactly one undamped step") {
    auto f = [](const Vec& x) { return Vec{x[0] - 5.0}; };
    auto j = [](const Vec&) { return Mat::identity(1); };
    const NewtonResult r = newton_solve(f, j, Vec{0.0}, 1e-12, 50);
    CHECK(r.root[0] == doctest::Approx(5.0));
    CHECK(r.iterations == 1);

    RngStream rng(31, 0);
    for (int d : {2, 5}) {
        Mat a(d);
        for (int i = 0; i < d; ++i)
            for (int jj = 0; jj < d; ++jj) a(i, jj) = rng.normal() + (i == jj ? 3.0 : 0.0);
        Vec b(d);
        for (int i = 0; i < d; ++i) b[i] = rng.normal();
        auto fa = [&](const Vec& x) {
            Vec out = a.apply(x);
            out -= b;
            return out;
        };
        auto ja = [&](const Vec&) { return a; };
        const NewtonResult ra = newton_solve(fa, ja, Vec::zeros(d), 1e-10, 50);
        CHECK(ra.iterations == 1);
        CHECK(fa(ra.root).inf_norm() <= 1e-10);
    }
}

TEST_CASE("newton finds the cube root with damping available") {
    auto f = [](const Vec& x) { return Vec{x[0] * x[0] * x[0] - 8.0}; };
    auto j = [](const Vec& x) {
        Mat m(1);
        m(0, 0) = 3.0 * x[0] * x[0];
        return m;
    };
    const NewtonResult r = newton_solve(f, j, Vec{3.0}, 1e-12, 100);
    CHECK(r.root[0] == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("newton solves the sample-mean estimating equation") {
    const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};  // mean 2.5
    auto f = [&](const Vec& t) {
        double s = 0.0;
        for (double x : xs) s -= (x - t[0]);
        return Vec{s};
    };
    auto j = [&](const Vec&) {
        Mat m(1);
        m(0, 0) = static_cast<double>(xs.size());
        return m;
    };
    const NewtonResult r = newton_solve(f, j, Vec{0.0}, 1e-12, 50);
    CHECK(r.root[0] == doctest::Approx(2.5));
}

TEST_CASE("singular jacobian carries the last iterate") {
    auto f = [](const Vec& x) { return Vec{x[0] * x[0]}; };
    auto j = [](const Vec& x) {
        Mat m(1);
        m(0, 0) = 2.0 * x[0];
        return m;
    };
    CHECK_THROWS_AS(newton_solve(f, j, Vec{0.0}, 1e-14, 50), SingularJacobian);
    try {
        newton_solve(f, j, Vec{0.0}, 1e-14, 50);
    } catch (const SingularJacobian& e) {
        CHECK(e.diagnostics.dim == 1);
        CHECK(e.diagnostics.last_iterate[0] == 0.0);
    }
}

TEST_CASE("max_iter exhaustion raises NoConvergence with diagnostics") {
    auto f = [](const Vec& x) { return Vec{std::atan(x[0])}; };
    auto j = [](const Vec& x) {
        Mat m(1);
        m(0, 0) = 1.0 / (1.0 + x[0] * x[0]);
        return m;
    };
    CHECK_THROWS_AS(newton_solve(f, j, Vec{50.0}, 1e-14, 2), NoConvergence);
    try {
        newton_solve(f, j, Vec{50.0}, 1e-14, 2);
    } catch (const NoConvergence& e) {
        CHECK(e.diagnostics.last_residual > 0.0);
    }
}

TEST_CASE("linear solve handles permuted systems") {
    Mat m(2);
    m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    const Vec x = solve_linear(m, Vec{3.0, 7.0});
    CHECK(x[0] == doctest::Approx(7.0));
    CHECK(x[1] == doctest::Approx(3.0));
}

TEST_CASE("dimension bounds are enforced") {
    CHECK_THROWS_AS(Vec(0), InvalidInput);
    CHECK_THROWS_AS(Vec(17), InvalidInput);
    CHECK_THROWS_AS(Mat(17), InvalidInput);
}

}  // TEST_SUITE
