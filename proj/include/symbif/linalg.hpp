// Small dense vectors and matrices over an arbitrary ring, plus the
// preconditioned interval linear solve used by every Newton-type operator.

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "symbif/interval.hpp"

namespace symbif {

template <class T>
class vec {
public:
    vec() = default;
    explicit vec(std::size_t n) : e_(n, T{}) {}
    vec(std::size_t n, const T& fill) : e_(n, fill) {}
    vec(std::initializer_list<T> init) : e_(init) {}

    std::size_t size() const { return e_.size(); }
    T& operator[](std::size_t i) { return e_[i]; }
    const T& operator[](std::size_t i) const { return e_[i]; }

    auto begin() { return e_.begin(); }
    auto end() { return e_.end(); }
    auto begin() const { return e_.begin(); }
    auto end() const { return e_.end(); }

    friend vec operator+(const vec& a, const vec& b) {
        vec r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
        return r;
    }
    friend vec operator-(const vec& a, const vec& b) {
        vec r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
        return r;
    }
    friend vec operator-(const vec& a) {
        vec r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
        return r;
    }
    friend vec operator*(const T& s, const vec& a) {
        vec r(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
        return r;
    }

private:
    std::vector<T> e_;
};

template <class T>
class mat {
public:
    mat() : rows_(0), cols_(0) {}
    mat(std::size_t r, std::size_t c) : rows_(r), cols_(c), e_(r * c, T{}) {}
    mat(std::size_t r, std::size_t c, const T& fill) : rows_(r), cols_(c), e_(r * c, fill) {}

    static mat identity(std::size_t n) {
        mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1.0);
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    T& operator()(std::size_t i, std::size_t j) { return e_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return e_[i * cols_ + j]; }

    friend mat operator+(const mat& a, const mat& b) {
        mat r(a.rows_, a.cols_);
        for (std::size_t i = 0; i < a.e_.size(); ++i) r.e_[i] = a.e_[i] + b.e_[i];
        return r;
    }
    friend mat operator-(const mat& a, const mat& b) {
        mat r(a.rows_, a.cols_);
        for (std::size_t i = 0; i < a.e_.size(); ++i) r.e_[i] = a.e_[i] - b.e_[i];
        return r;
    }
    friend mat operator*(const mat& a, const mat& b) {
        mat r(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k)
                for (std::size_t j = 0; j < b.cols_; ++j) r(i, j) += a(i, k) * b(k, j);
        return r;
    }
    friend vec<T> operator*(const mat& a, const vec<T>& x) {
        vec<T> r(a.rows_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t j = 0; j < a.cols_; ++j) r[i] += a(i, j) * x[j];
        return r;
    }
    friend mat operator*(const T& s, const mat& a) {
        mat r(a.rows_, a.cols_);
        for (std::size_t i = 0; i < a.e_.size(); ++i) r.e_[i] = s * a.e_[i];
        return r;
    }

    mat transposed() const {
        mat r(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
        return r;
    }

private:
    std::size_t rows_, cols_;
    std::vector<T> e_;
};

template <class P>
using ivec = vec<interval<P>>;
template <class P>
using imat = mat<interval<P>>;

template <class P>
vec<typename P::real> mid(const ivec<P>& x) {
    vec<typename P::real> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i].mid();
    return r;
}

template <class P>
mat<typename P::real> mid(const imat<P>& a) {
    mat<typename P::real> r(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(i, j).mid();
    return r;
}

template <class P>
ivec<P> to_ivec(const vec<typename P::real>& x) {
    ivec<P> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = interval<P>(x[i], x[i]);
    return r;
}

template <class P>
imat<P> to_imat(const mat<typename P::real>& a) {
    imat<P> r(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = interval<P>(a(i, j), a(i, j));
    return r;
}

template <class P>
ivec<P> hull(const ivec<P>& a, const ivec<P>& b) {
    ivec<P> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = hull(a[i], b[i]);
    return r;
}

template <class P>
std::optional<ivec<P>> meet(const ivec<P>& a, const ivec<P>& b) {
    ivec<P> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto m = meet(a[i], b[i]);
        if (!m) return std::nullopt;
        r[i] = *m;
    }
    return r;
}

template <class P>
bool subset_of(const ivec<P>& a, const ivec<P>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!a[i].subset_of(b[i])) return false;
    return true;
}

template <class P>
bool strict_subset_of(const ivec<P>& a, const ivec<P>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!a[i].strict_subset_of(b[i])) return false;
    return true;
}

template <class P>
double max_width(const ivec<P>& a) {
    double w = 0;
    for (std::size_t i = 0; i < a.size(); ++i) w = std::max(w, a[i].width_d());
    return w;
}

// Gaussian elimination with partial pivoting over a point field.
template <class R>
std::optional<vec<R>> solve_point(mat<R> a, vec<R> b) {
    const std::size_t n = a.rows();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t i = col + 1; i < n; ++i) {
            using std::abs;
            if (abs(a(i, col)) > abs(a(piv, col))) piv = i;
        }
        if (a(piv, col) == R(0.0)) return std::nullopt;
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
            std::swap(b[col], b[piv]);
        }
        for (std::size_t i = col + 1; i < n; ++i) {
            R f = a(i, col) / a(col, col);
            for (std::size_t j = col; j < n; ++j) a(i, j) -= f * a(col, j);
            b[i] -= f * b[col];
        }
    }
    vec<R> x(n);
    for (std::size_t i = n; i-- > 0;) {
        R s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
        x[i] = s / a(i, i);
    }
    return x;
}

template <class R>
std::optional<mat<R>> invert_point(const mat<R>& a) {
    const std::size_t n = a.rows();
    mat<R> inv(n, n);
    for (std::size_t col = 0; col < n; ++col) {
        vec<R> e(n);
        e[col] = R(1.0);
        auto x = solve_point(a, e);
        if (!x) return std::nullopt;
        for (std::size_t i = 0; i < n; ++i) inv(i, col) = (*x)[i];
    }
    return inv;
}

// Householder QR; returns Q only (the orthonormal frame used by the
// Lohner wrapping control). Point arithmetic, orthogonality approximate.
template <class R>
mat<R> qr_frame(const mat<R>& a) {
    using std::abs;
    using std::sqrt;
    const std::size_t n = a.rows();
    mat<R> q = mat<R>::identity(n);
    mat<R> r = a;
    for (std::size_t col = 0; col < n; ++col) {
        R norm2(0.0);
        for (std::size_t i = col; i < n; ++i) norm2 += r(i, col) * r(i, col);
        R norm = sqrt(norm2);
        if (!(norm > R(0.0))) continue;
        vec<R> v(n);
        for (std::size_t i = col; i < n; ++i) v[i] = r(i, col);
        v[col] += (r(col, col) >= R(0.0) ? norm : -norm);
        R vtv(0.0);
        for (std::size_t i = col; i < n; ++i) vtv += v[i] * v[i];
        if (!(vtv > R(0.0))) continue;
        auto reflect = [&](mat<R>& m) {
            for (std::size_t j = 0; j < n; ++j) {
                R dot(0.0);
                for (std::size_t i = col; i < n; ++i) dot += v[i] * m(i, j);
                R f = R(2.0) * dot / vtv;
                for (std::size_t i = col; i < n; ++i) m(i, j) -= f * v[i];
            }
        };
        reflect(r);
        reflect(q); // accumulates H_k ... H_1
    }
    return q.transposed();
}

// Preconditioned interval linear solve: encloses {x : Ax=b, A in [A], b in [b]}
// by the Krawczyk fixed-point iteration on C*A with C an approximate
// midpoint inverse. Returns nullopt when the preconditioned system is not
// contracting (caller subdivides).
template <class P>
std::optional<ivec<P>> ilinear_solve(const imat<P>& a, const ivec<P>& b) {
    using I = interval<P>;
    const std::size_t n = a.rows();
    auto c = invert_point(mid<P>(a));
    if (!c) return std::nullopt;
    imat<P> ci = to_imat<P>(*c);
    imat<P> m = ci * a;           // ~ I
    ivec<P> r = ci * b;
    // contraction factor: inf-norm of M - Id
    double kappa = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0;
        for (std::size_t j = 0; j < n; ++j) {
            I d = m(i, j) - (i == j ? I(1.0) : I(0.0));
            row += P::to_double(d.mag());
        }
        kappa = std::max(kappa, row);
    }
    if (!(kappa < 1.0)) return std::nullopt;
    double rn = 0;
    for (std::size_t i = 0; i < n; ++i) rn = std::max(rn, P::to_double(r[i].mag()));
    double rho = rn / (1.0 - kappa) * (1.0 + 1e-12) + 1e-300;
    ivec<P> x(n, I(-rho, rho));
    imat<P> mi = m;
    for (std::size_t i = 0; i < n; ++i) mi(i, i) -= I(1.0);
    for (int it = 0; it < 6; ++it) {
        ivec<P> nx = r - mi * x;
        auto mtx = meet<P>(nx, x);
        if (!mtx) return std::nullopt; // cannot happen for true solutions; bail out
        x = *mtx;
    }
    // Gauss-Seidel sweeps: exact hull for n = 1, tightens the corners in
    // general (M_ii stays away from zero because kappa < 1)
    for (int it = 0; it < 2; ++it)
        for (std::size_t i = 0; i < n; ++i) {
            I s = r[i];
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) s = s - m(i, j) * x[j];
            auto mtx = meet(s / m(i, i), x[i]);
            if (!mtx) return std::nullopt;
            x[i] = *mtx;
        }
    return x;
}

// rigorous enclosure of the inverse of a point matrix
template <class P>
std::optional<imat<P>> iinverse(const mat<typename P::real>& q) {
    const std::size_t n = q.rows();
    imat<P> qi = to_imat<P>(q);
    imat<P> r(n, n);
    for (std::size_t col = 0; col < n; ++col) {
        ivec<P> e(n);
        e[col] = interval<P>(1.0);
        auto x = ilinear_solve<P>(qi, e);
        if (!x) return std::nullopt;
        for (std::size_t i = 0; i < n; ++i) r(i, col) = (*x)[i];
    }
    return r;
}

} // namespace symbif
