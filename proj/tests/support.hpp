#pragma once

// Shared helpers for the unit and acceptance suites.

#include <cmath>
#include <vector>

#include "zproc/numerics.hpp"
#include "zproc/rng.hpp"
#include "zproc/zcore.hpp"

namespace ztest {

// Central finite differences of psi against the analytic dpsi; returns the
// worst entry-wise error relative to max(1, |entry|).
inline double max_fd_dpsi_error(const zproc::EstimatingFunctionSpec& spec, zproc::Obs obs,
                                const zproc::Vec& theta, double h = 1e-6) {
    using zproc::Mat;
    using zproc::Vec;
    Mat analytic(spec.dim);
    spec.dpsi(obs, theta, analytic);

    double worst = 0.0;
    Vec up(spec.dim), down(spec.dim);
    for (int j = 0; j < spec.dim; ++j) {
        Vec tp = theta, tm = theta;
        tp[j] += h;
        tm[j] -= h;
        spec.psi(obs, tp, up);
        spec.psi(obs, tm, down);
        for (int i = 0; i < spec.dim; ++i) {
            const double fd = (up[i] - down[i]) / (2.0 * h);
            const double err = std::fabs(fd - analytic(i, j)) / std::max(1.0, std::fabs(analytic(i, j)));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

// Random orthogonal matrix by Gram-Schmidt on a Gaussian matrix.
inline zproc::Mat random_rotation(int dim, zproc::RngStream& rng) {
    using zproc::Mat;
    Mat q(dim);
    for (int col = 0; col < dim; ++col) {
        std::vector<double> v(static_cast<std::size_t>(dim));
        for (double& x : v) x = rng.normal();
        for (int prev = 0; prev < col; ++prev) {
            double proj = 0.0;
            for (int i = 0; i < dim; ++i) proj += v[static_cast<std::size_t>(i)] * q(i, prev);
            for (int i = 0; i < dim; ++i) v[static_cast<std::size_t>(i)] -= proj * q(i, prev);
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (int i = 0; i < dim; ++i) q(i, col) = v[static_cast<std::size_t>(i)] / norm;
    }
    return q;
}

// Random well-conditioned SPD matrix A A^T + eps I.
inline zproc::SpdMatrix random_spd(int dim, zproc::RngStream& rng, double eps = 0.1) {
    using zproc::Mat;
    Mat a(dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = rng.normal();
    Mat m = a.times(a.transposed());
    for (int i = 0; i < dim; ++i) m(i, i) += eps;
    m.symmetrize();
    return zproc::SpdMatrix(m);
}

inline double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double variance_of(const std::vector<double>& xs) {
    const double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size());
}

}  // namespace ztest
