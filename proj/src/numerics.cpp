#include "zproc/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace zproc {

namespace {

void check_dim(int dim) {
    if (dim < 1 || dim > kMaxDim) {
        throw InvalidInput("dimension must be in [1, " + std::to_string(kMaxDim) +
                           "], got " + std::to_string(dim));
    }
}

IterateDiagnostics make_diag(const Vec& x, double residual, int iterations) {
    IterateDiagnostics d;
    d.dim = x.dim();
    for (int i = 0; i < x.dim(); ++i) d.last_iterate[static_cast<std::size_t>(i)] = x[i];
    d.last_residual = residual;
    d.iterations = iterations;
    return d;
}

}  // namespace

Vec::Vec(int dim) : dim_(dim) { check_dim(dim); }

Vec::Vec(std::initializer_list<double> xs) : dim_(static_cast<int>(xs.size())) {
    check_dim(dim_);
    int i = 0;
    for (double x : xs) a_[static_cast<std::size_t>(i++)] = x;
}

Vec& Vec::operator+=(const Vec& o) {
    for (int i = 0; i < dim_; ++i) a_[static_cast<std::size_t>(i)] += o[i];
    return *this;
}

Vec& Vec::operator-=(const Vec& o) {
    for (int i = 0; i < dim_; ++i) a_[static_cast<std::size_t>(i)] -= o[i];
    return *this;
}

Vec& Vec::operator*=(double s) {
    for (int i = 0; i < dim_; ++i) a_[static_cast<std::size_t>(i)] *= s;
    return *this;
}

double Vec::norm() const { return std::sqrt(sqnorm()); }

double Vec::sqnorm() const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += a_[static_cast<std::size_t>(i)] * a_[static_cast<std::size_t>(i)];
    return s;
}

double Vec::inf_norm() const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s = std::max(s, std::fabs(a_[static_cast<std::size_t>(i)]));
    return s;
}

bool Vec::all_finite() const {
    for (int i = 0; i < dim_; ++i) {
        if (!std::isfinite(a_[static_cast<std::size_t>(i)])) return false;
    }
    return true;
}

Vec operator+(Vec a, const Vec& b) { return a += b; }
Vec operator-(Vec a, const Vec& b) { return a -= b; }
Vec operator*(double s, Vec a) { return a *= s; }

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i) s += a[i] * b[i];
    return s;
}

Mat::Mat(int dim) : dim_(dim) { check_dim(dim); }

Mat Mat::identity(int dim) {
    Mat m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
}

Mat& Mat::operator+=(const Mat& o) {
    for (int i = 0; i < dim_ * dim_; ++i) a_[static_cast<std::size_t>(i)] += o.a_[static_cast<std::size_t>(i)];
    return *this;
}

Mat& Mat::operator*=(double s) {
    for (int i = 0; i < dim_ * dim_; ++i) a_[static_cast<std::size_t>(i)] *= s;
    return *this;
}

void Mat::symmetrize() {
    for (int i = 0; i < dim_; ++i) {
        for (int j = i + 1; j < dim_; ++j) {
            const double v = 0.5 * ((*this)(i, j) + (*this)(j, i));
            (*this)(i, j) = v;
            (*this)(j, i) = v;
        }
    }
}

double Mat::relative_asymmetry() const {
    double asym = 0.0;
    double scale = 0.0;
    for (int i = 0; i < dim_; ++i) {
        for (int j = 0; j < dim_; ++j) {
            asym = std::max(asym, std::fabs((*this)(i, j) - (*this)(j, i)));
            scale = std::max(scale, std::fabs((*this)(i, j)));
        }
    }
    return scale > 0.0 ? asym / scale : 0.0;
}

bool Mat::all_finite() const {
    for (int i = 0; i < dim_ * dim_; ++i) {
        if (!std::isfinite(a_[static_cast<std::size_t>(i)])) return false;
    }
    return true;
}

double Mat::frobenius_norm() const {
    double s = 0.0;
    for (int i = 0; i < dim_ * dim_; ++i) s += a_[static_cast<std::size_t>(i)] * a_[static_cast<std::size_t>(i)];
    return std::sqrt(s);
}

Vec Mat::apply(const Vec& v) const {
    Vec out(dim_);
    for (int i = 0; i < dim_; ++i) {
        double s = 0.0;
        for (int j = 0; j < dim_; ++j) s += (*this)(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

Mat Mat::times(const Mat& o) const {
    Mat out(dim_);
    for (int i = 0; i < dim_; ++i) {
        for (int k = 0; k < dim_; ++k) {
            const double v = (*this)(i, k);
            if (v == 0.0) continue;
            for (int j = 0; j < dim_; ++j) out(i, j) += v * o(k, j);
        }
    }
    return out;
}

Mat Mat::transposed() const {
    Mat out(dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) out(j, i) = (*this)(i, j);
    return out;
}

SpdMatrix::SpdMatrix(const Mat& m, double sym_rel_tol) : m_(m) {
    if (!m.all_finite()) throw InvalidInput("SpdMatrix: non-finite entries");
    if (m.relative_asymmetry() > sym_rel_tol) {
        throw InvalidInput("SpdMatrix: input is not symmetric (relative asymmetry " +
                           std::to_string(m.relative_asymmetry()) + ")");
    }
    m_.symmetrize();
}

Cholesky::Cholesky(const SpdMatrix& m) : l_(m.dim()) {
    const int d = m.dim();
    min_pivot_ = 0.0;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = m(i, j);
            for (int k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
            if (i == j) {
                if (s <= 0.0) throw NotPositiveDefinite(i, s);
                l_(i, i) = std::sqrt(s);
            } else {
                l_(i, j) = s / l_(j, j);
            }
        }
        min_pivot_ = (i == 0) ? l_(0, 0) : std::min(min_pivot_, l_(i, i));
    }
}

Vec Cholesky::solve_lower(const Vec& v) const {
    const int d = l_.dim();
    Vec y(d);
    for (int i = 0; i < d; ++i) {
        double s = v[i];
        for (int k = 0; k < i; ++k) s -= l_(i, k) * y[k];
        y[i] = s / l_(i, i);
    }
    return y;
}

Vec Cholesky::solve(const Vec& v) const {
    const int d = l_.dim();
    Vec y = solve_lower(v);
    Vec x(d);
    for (int i = d - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < d; ++k) s -= l_(k, i) * x[k];
        x[i] = s / l_(i, i);
    }
    return x;
}

Cholesky cholesky(const SpdMatrix& m) { return Cholesky(m); }

double quad_form(const Vec& v, const Cholesky& chol) {
    if (v.dim() != chol.dim()) throw DimensionMismatch("quad_form: vector/matrix dims differ");
    return chol.solve_lower(v).sqnorm();
}

double quad_form(const Vec& v, const SpdMatrix& m) { return quad_form(v, Cholesky(m)); }

Vec solve_linear(Mat m, Vec b) {
    const int d = m.dim();
    std::array<int, kMaxDim> perm{};
    for (int i = 0; i < d; ++i) perm[static_cast<std::size_t>(i)] = i;

    for (int col = 0; col < d; ++col) {
        int piv = col;
        double best = std::fabs(m(col, col));
        for (int r = col + 1; r < d; ++r) {
            if (std::fabs(m(r, col)) > best) {
                best = std::fabs(m(r, col));
                piv = r;
            }
        }
        if (!(best > 0.0) || !std::isfinite(best)) {
            throw SingularJacobian("singular matrix in linear solve (column " + std::to_string(col) + ")",
                                   make_diag(b, 0.0, 0));
        }
        if (piv != col) {
            for (int j = 0; j < d; ++j) std::swap(m(col, j), m(piv, j));
            std::swap(b[col], b[piv]);
        }
        for (int r = col + 1; r < d; ++r) {
            const double f = m(r, col) / m(col, col);
            if (f == 0.0) continue;
            for (int j = col; j < d; ++j) m(r, j) -= f * m(col, j);
            b[r] -= f * b[col];
        }
    }
    Vec x(d);
    for (int i = d - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < d; ++j) s -= m(i, j) * x[j];
        x[i] = s / m(i, i);
    }
    return x;
}

NewtonResult newton_solve(const std::function<Vec(const Vec&)>& f,
                          const std::function<Mat(const Vec&)>& jac,
                          Vec x0, double tol, int max_iter) {
    if (!(tol > 0.0)) throw InvalidInput("newton_solve: tol must be positive");
    constexpr int kMaxHalvings = 30;

    Vec x = x0;
    Vec fx = f(x);
    double res = fx.inf_norm();

    for (int iter = 0; iter < max_iter; ++iter) {
        if (res <= tol) return {x, iter};
        if (!fx.all_finite()) {
            throw NoConvergence("newton_solve: non-finite residual", make_diag(x, res, iter));
        }

        Vec step;
        try {
            Vec rhs = fx;
            rhs *= -1.0;
            step = solve_linear(jac(x), rhs);
        } catch (const SingularJacobian&) {
            throw SingularJacobian("newton_solve: singular Jacobian at iterate", make_diag(x, res, iter));
        }

        double damping = 1.0;
        bool accepted = false;
        for (int h = 0; h <= kMaxHalvings; ++h) {
            Vec trial = x;
            for (int i = 0; i < x.dim(); ++i) trial[i] += damping * step[i];
            Vec ftrial = f(trial);
            const double rtrial = ftrial.inf_norm();
            if (std::isfinite(rtrial) && (rtrial < res || rtrial <= tol)) {
                x = trial;
                fx = ftrial;
                res = rtrial;
                accepted = true;
                break;
            }
            damping *= 0.5;
        }
        if (!accepted) {
            throw NoConvergence("newton_solve: step halving exhausted", make_diag(x, res, iter));
        }
    }
    if (res <= tol) return {x, max_iter};
    throw NoConvergence("newton_solve: max iterations reached", make_diag(x, res, max_iter));
}

}  // namespace zproc
