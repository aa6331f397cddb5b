#include "maass/linalg.hpp"

#include "maass/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace maass {

namespace {

// Pivots below 2^-(prec - kPivotSlack) relative to the scaled matrix count as zero.
constexpr long kPivotSlack = 16;

void require_square(const BallMatrix& a, std::size_t rhs) {
    if (a.rows() != a.cols()) {
        throw DomainError("linear solve needs a square matrix");
    }
    if (rhs != a.rows()) {
        throw DomainError("right-hand side has " + std::to_string(rhs) + " entries, expected " + std::to_string(a.rows()));
    }
}

// Exponent s_j with max_i |mid A_ij| in [2^(s_j - 1), 2^s_j); 0 for zero columns.
std::vector<long> column_exponents(const BallMatrix& a) {
    std::vector<long> out(a.cols(), 0);
    for (std::size_t j = 0; j < a.cols(); ++j) {
        bool any = false;
        long best = 0;
        for (std::size_t i = 0; i < a.rows(); ++i) {
            const Real& m = a(i, j).mid();
            if (m.is_zero() || !m.is_finite()) {
                continue;
            }
            const long e = static_cast<long>(mpfr_get_exp(m.get()));
            if (!any || e > best) {
                best = e;
                any = true;
            }
        }
        out[j] = best;
    }
    return out;
}

BallMatrix scale_columns(const BallMatrix& a, const std::vector<long>& s) {
    BallMatrix out(a.rows(), a.cols(), a.precision());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out(i, j) = ldexp(a(i, j), -s[j]);
        }
    }
    return out;
}

// LU factorization with partial pivoting of the midpoint matrix.
class MidpointLu {
public:
    explicit MidpointLu(const BallMatrix& a) : n_(a.rows()), prec_(a.precision()), perm_(a.rows()) {
        lu_.reserve(n_ * n_);
        for (std::size_t i = 0; i < n_; ++i) {
            perm_[i] = i;
            for (std::size_t j = 0; j < n_; ++j) {
                lu_.push_back(a(i, j).mid());
            }
        }
        double scale = 0.0;
        for (const Real& v : lu_) {
            scale = std::max(scale, v.abs_upper());
        }
        const double tiny = scale * std::ldexp(1.0, -static_cast<int>(prec_ - kPivotSlack));
        Real factor(prec_), tmp(prec_);
        for (std::size_t k = 0; k < n_; ++k) {
            std::size_t piv = k;
            for (std::size_t i = k + 1; i < n_; ++i) {
                if (mpfr_cmpabs(at(i, k).get(), at(piv, k).get()) > 0) {
                    piv = i;
                }
            }
            if (!(at(piv, k).abs_upper() > tiny)) {
                throw SingularSystemError("matrix is singular to working precision");
            }
            if (piv != k) {
                for (std::size_t j = 0; j < n_; ++j) {
                    at(k, j).swap(at(piv, j));
                }
                std::swap(perm_[k], perm_[piv]);
            }
            for (std::size_t i = k + 1; i < n_; ++i) {
                mpfr_div(factor.get(), at(i, k).get(), at(k, k).get(), MPFR_RNDN);
                mpfr_set(at(i, k).get(), factor.get(), MPFR_RNDN);
                for (std::size_t j = k + 1; j < n_; ++j) {
                    mpfr_mul(tmp.get(), factor.get(), at(k, j).get(), MPFR_RNDN);
                    mpfr_sub(at(i, j).get(), at(i, j).get(), tmp.get(), MPFR_RNDN);
                }
            }
        }
    }

    RealVector solve(const RealVector& b) const {
        RealVector x;
        x.reserve(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            Real v(prec_);
            mpfr_set(v.get(), b[perm_[i]].get(), MPFR_RNDN);
            x.push_back(std::move(v));
        }
        Real tmp(prec_);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                mpfr_mul(tmp.get(), at(i, j).get(), x[j].get(), MPFR_RNDN);
                mpfr_sub(x[i].get(), x[i].get(), tmp.get(), MPFR_RNDN);
            }
        }
        for (std::size_t i = n_; i-- > 0;) {
            for (std::size_t j = i + 1; j < n_; ++j) {
                mpfr_mul(tmp.get(), at(i, j).get(), x[j].get(), MPFR_RNDN);
                mpfr_sub(x[i].get(), x[i].get(), tmp.get(), MPFR_RNDN);
            }
            mpfr_div(x[i].get(), x[i].get(), at(i, i).get(), MPFR_RNDN);
        }
        return x;
    }

private:
    Real& at(std::size_t i, std::size_t j) { return lu_[i * n_ + j]; }
    const Real& at(std::size_t i, std::size_t j) const { return lu_[i * n_ + j]; }

    std::size_t n_;
    mpfr_prec_t prec_;
    std::vector<Real> lu_;
    std::vector<std::size_t> perm_;
};

BallMatrix inverse_of_scaled(const MidpointLu& lu, std::size_t n, mpfr_prec_t prec) {
    BallMatrix r(n, n, prec);
    for (std::size_t j = 0; j < n; ++j) {
        RealVector e;
        e.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            e.emplace_back(i == j ? 1L : 0L, prec);
        }
        RealVector col = lu.solve(e);
        for (std::size_t i = 0; i < n; ++i) {
            r(i, j) = Ball(std::move(col[i]), 0.0);
        }
    }
    return r;
}

double next_down(double x) { return std::nextafter(x, -std::numeric_limits<double>::infinity()); }

} // namespace

BallMatrix::BallMatrix(std::size_t rows, std::size_t cols, mpfr_prec_t prec)
    : rows_(rows), cols_(cols), prec_(prec), data_(rows * cols, Ball(prec)) {}

BallMatrix BallMatrix::identity(std::size_t n, mpfr_prec_t prec) {
    BallMatrix out(n, n, prec);
    for (std::size_t i = 0; i < n; ++i) {
        out(i, i) = Ball::exact(1L, prec);
    }
    return out;
}

BallMatrix operator*(const BallMatrix& a, const BallMatrix& b) {
    if (a.cols() != b.rows()) {
        throw DomainError("matrix dimensions do not match");
    }
    BallMatrix out(a.rows(), b.cols(), std::max(a.precision(), b.precision()));
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const Ball& aik = a(i, k);
            if (aik.is_exact() && aik.mid().is_zero()) {
                continue;
            }
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

BallVector operator*(const BallMatrix& a, const BallVector& x) {
    if (a.cols() != x.size()) {
        throw DomainError("matrix and vector dimensions do not match");
    }
    BallVector out(a.rows(), Ball(a.precision()));
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out[i] += a(i, j) * x[j];
        }
    }
    return out;
}

RealVector midpoint_solve(const BallMatrix& a, const BallVector& b) {
    require_square(a, b.size());
    const std::vector<long> s = column_exponents(a);
    const MidpointLu lu(scale_columns(a, s));
    RealVector rhs;
    rhs.reserve(b.size());
    for (const Ball& v : b) {
        rhs.push_back(v.mid());
    }
    RealVector y = lu.solve(rhs);
    for (std::size_t j = 0; j < y.size(); ++j) {
        mpfr_mul_2si(y[j].get(), y[j].get(), -s[j], MPFR_RNDN);
    }
    return y;
}

BallMatrix approximate_inverse(const BallMatrix& a) {
    require_square(a, a.rows());
    const std::vector<long> s = column_exponents(a);
    const MidpointLu lu(scale_columns(a, s));
    BallMatrix r = inverse_of_scaled(lu, a.rows(), a.precision());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            r(i, j) = ldexp(r(i, j), -s[i]);
        }
    }
    return r;
}

Enclosure enclose_linear(const BallMatrix& a, const BallVector& b, const RealVector& approx) {
    require_square(a, b.size());
    if (approx.size() != a.cols()) {
        throw DomainError("approximate solution has the wrong length");
    }
    const std::size_t n = a.rows();
    const mpfr_prec_t p = a.precision();
    Enclosure out;
    out.contraction = std::numeric_limits<double>::infinity();

    // Solve A' y = b with A' = A D and x = D y, D = diag(2^-s_j).
    const std::vector<long> s = column_exponents(a);
    const BallMatrix scaled = scale_columns(a, s);
    BallVector y0;
    y0.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        y0.push_back(ldexp(Ball(approx[j], 0.0), s[j]));
    }

    BallMatrix r;
    try {
        r = inverse_of_scaled(MidpointLu(scaled), n, p);
    } catch (const SingularSystemError&) {
        return out;
    }

    BallVector residual = scaled * y0;
    for (std::size_t i = 0; i < n; ++i) {
        residual[i] = b[i] - residual[i];
    }
    const BallMatrix ra = r * scaled;

    std::vector<double> row_norm(n, 0.0);
    double beta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const Ball c = (i == j ? Ball::exact(1L, p) : Ball(p)) - ra(i, j);
            row_norm[i] = rad::add_up(row_norm[i], c.abs_upper());
        }
        beta = std::max(beta, row_norm[i]);
    }
    out.contraction = beta;
    if (!(beta < 1.0)) {
        return out;
    }

    const BallVector z = r * residual;
    double z_norm = 0.0;
    for (const Ball& v : z) {
        z_norm = std::max(z_norm, v.abs_upper());
    }
    // delta >= ||z|| / (1 - beta)
    const double gap = next_down(1.0 - beta);
    if (!(gap > 0.0)) {
        return out;
    }
    const double delta = rad::next_up(z_norm / gap);
    if (!std::isfinite(delta)) {
        return out;
    }

    out.x.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Ball yi = (y0[i] + z[i]).widened(rad::mul_up(row_norm[i], delta));
        out.x.push_back(ldexp(yi, -s[i]));
    }
    out.verified = true;
    return out;
}

} // namespace maass
