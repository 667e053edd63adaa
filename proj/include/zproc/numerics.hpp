#pragma once

// Dense linear algebra for small (d <= 16) parametric models plus a
// safeguarded Newton root finder. Everything lives on the stack; no
// allocations in the per-observation hot paths.

#include <array>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>

#include "zproc/errors.hpp"

namespace zproc {

inline constexpr int kMaxDim = 16;

class Vec {
public:
    Vec() = default;
    explicit Vec(int dim);
    Vec(std::initializer_list<double> xs);

    static Vec zeros(int dim) { return Vec(dim); }

    int dim() const { return dim_; }
    double& operator[](int i) { return a_[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return a_[static_cast<std::size_t>(i)]; }
    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }
    std::span<const double> span() const { return {a_.data(), static_cast<std::size_t>(dim_)}; }

    Vec& operator+=(const Vec& o);
    Vec& operator-=(const Vec& o);
    Vec& operator*=(double s);

    double norm() const;
    double sqnorm() const;
    double inf_norm() const;
    bool all_finite() const;

private:
    std::array<double, kMaxDim> a_{};
    int dim_ = 0;
};

Vec operator+(Vec a, const Vec& b);
Vec operator-(Vec a, const Vec& b);
Vec operator*(double s, Vec a);
double dot(const Vec& a, const Vec& b);

// Square d x d matrix, row major.
class Mat {
public:
    Mat() = default;
    explicit Mat(int dim);

    static Mat identity(int dim);

    int dim() const { return dim_; }
    double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * dim_ + j)]; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * dim_ + j)]; }

    Mat& operator+=(const Mat& o);
    Mat& operator*=(double s);

    void symmetrize();  // m <- (m + m^T)/2
    double relative_asymmetry() const;
    bool all_finite() const;
    double frobenius_norm() const;

    Vec apply(const Vec& v) const;  // m * v
    Mat times(const Mat& o) const;
    Mat transposed() const;

private:
    std::array<double, kMaxDim * kMaxDim> a_{};
    int dim_ = 0;
};

// Symmetric positive (semi)definite matrix. Construction symmetrizes the
// input to absorb accumulation error; inputs further than 1e-12 relative
// from symmetric are rejected. Positive definiteness is only checked when
// a Cholesky factor is requested.
class SpdMatrix {
public:
    SpdMatrix() = default;
    explicit SpdMatrix(const Mat& m, double sym_rel_tol = 1e-12);

    int dim() const { return m_.dim(); }
    const Mat& mat() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

private:
    Mat m_;
};

// Lower-triangular Cholesky factor L with L L^T = m.
// Throws NotPositiveDefinite when a pivot is <= 0.
class Cholesky {
public:
    explicit Cholesky(const SpdMatrix& m);

    int dim() const { return l_.dim(); }
    const Mat& lower() const { return l_; }
    double min_pivot() const { return min_pivot_; }

    Vec solve_lower(const Vec& v) const;  // L y = v
    Vec solve(const Vec& v) const;        // L L^T x = v

private:
    Mat l_;
    double min_pivot_ = 0.0;
};

Cholesky cholesky(const SpdMatrix& m);

// v^T m^{-1} v, computed as |L^{-1} v|^2. Nonnegative by construction.
double quad_form(const Vec& v, const SpdMatrix& m);
double quad_form(const Vec& v, const Cholesky& chol);

// General square solve (Gaussian elimination, partial pivoting) for the
// Newton step; the Jacobian need not be symmetric.
Vec solve_linear(Mat m, Vec b);

struct NewtonResult {
    Vec root;
    int iterations = 0;
};

// Damped Newton: full step, halved up to 30 times while the step fails to
// reduce |f|_inf; NoConvergence after max_iter iterations or when damping
// is exhausted. Both error paths carry the last iterate.
NewtonResult newton_solve(const std::function<Vec(const Vec&)>& f,
                          const std::function<Mat(const Vec&)>& jac,
                          Vec x0, double tol, int max_iter);

}  // namespace zproc
