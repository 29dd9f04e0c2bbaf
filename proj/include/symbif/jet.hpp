// Dense truncated multivariate Taylor jets of low degree (<= 3 in practice).
// Coefficients are stored against graded-lex monomials; the coefficient of
// x^alpha is the Taylor coefficient f^(alpha)(x0)/alpha!.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace symbif {

struct singular_jet : std::runtime_error {
    singular_jet() : std::runtime_error("jet division/sqrt with order-0 coefficient touching zero") {}
};

struct order_exceeded : std::runtime_error {
    order_exceeded() : std::runtime_error("multi-index order exceeds jet degree") {}
};

namespace detail {

template <class T>
constexpr bool ring_straddles_zero(const T& x) {
    if constexpr (requires { x.contains_zero(); })
        return x.contains_zero();
    else
        return x == T(0.0);
}

template <class T>
constexpr bool ring_nonpositive(const T& x) {
    if constexpr (requires { x.strictly_positive(); })
        return !x.strictly_positive();
    else
        return !(x > T(0.0));
}

} // namespace detail

namespace detail {

constexpr int jet_max_vars = 8;
using mono = std::array<std::uint8_t, jet_max_vars>;

struct jet_tables {
    int n = 0, d = 0;
    std::vector<mono> exps;          // graded-lex order, exps[0] is the constant
    std::vector<int> prod;           // prod[i*m+j] = index of exps[i]+exps[j], -1 past degree
    std::vector<double> factorial;   // alpha! per index

    static const jet_tables& get(int n, int d) {
        static std::map<std::pair<int, int>, jet_tables> cache;
        static std::mutex mx;
        std::lock_guard<std::mutex> lock(mx);
        auto key = std::make_pair(n, d);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        jet_tables t;
        t.n = n;
        t.d = d;
        // enumerate monomials by total degree, lex within a degree
        mono e{};
        for (int deg = 0; deg <= d; ++deg) {
            // lex enumeration of compositions of deg into n parts
            std::vector<int> c(n, 0);
            c[0] = deg;
            while (true) {
                mono m{};
                for (int i = 0; i < n; ++i) m[i] = std::uint8_t(c[i]);
                t.exps.push_back(m);
                // next composition in reverse-lex on (c_0,...,c_{n-1})
                int k = n - 2;
                while (k >= 0 && c[k] == 0) --k;
                if (k < 0) break;
                --c[k];
                int rest = deg;
                for (int i = 0; i <= k; ++i) rest -= c[i];
                for (int i = k + 1; i < n; ++i) c[i] = 0;
                c[k + 1] = rest;
            }
        }
        const std::size_t m = t.exps.size();
        std::map<mono, int> index;
        for (std::size_t i = 0; i < m; ++i) index[t.exps[i]] = int(i);
        t.prod.assign(m * m, -1);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                int deg = 0;
                mono s{};
                for (int v = 0; v < n; ++v) {
                    s[v] = std::uint8_t(t.exps[i][v] + t.exps[j][v]);
                    deg += s[v];
                }
                if (deg <= d) t.prod[i * m + j] = index[s];
            }
        t.factorial.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            double f = 1;
            for (int v = 0; v < n; ++v)
                for (int k = 2; k <= t.exps[i][v]; ++k) f *= k;
            t.factorial[i] = f;
        }
        return cache.emplace(key, std::move(t)).first->second;
    }
};

} // namespace detail

template <class T>
class jet {
public:
    jet() : tab_(nullptr) {}
    jet(int nvars, int degree) : tab_(&detail::jet_tables::get(nvars, degree)), c_(tab_->exps.size(), T(0.0)) {}
    jet(int nvars, int degree, const T& value) : jet(nvars, degree) { c_[0] = value; }

    static jet variable(int nvars, int degree, int which, const T& value) {
        jet j(nvars, degree, value);
        if (degree > 0) j.c_[1 + which] = T(1.0);
        return j;
    }

    int nvars() const { return tab_->n; }
    int degree() const { return tab_->d; }
    std::size_t size() const { return c_.size(); }

    T& operator[](std::size_t i) { return c_[i]; }
    const T& operator[](std::size_t i) const { return c_[i]; }
    const T& value() const { return c_[0]; }

    // Taylor coefficient of the monomial with given exponents
    const T& coeff(std::initializer_list<int> alpha) const { return c_[index(alpha)]; }
    // partial derivative: coefficient times alpha!
    T partial(std::initializer_list<int> alpha) const {
        std::size_t i = index(alpha);
        return c_[i] * T(tab_->factorial[i]);
    }

    friend jet operator+(const jet& a, const jet& b) {
        jet r = a;
        for (std::size_t i = 0; i < r.c_.size(); ++i) r.c_[i] += b.c_[i];
        return r;
    }
    friend jet operator-(const jet& a, const jet& b) {
        jet r = a;
        for (std::size_t i = 0; i < r.c_.size(); ++i) r.c_[i] -= b.c_[i];
        return r;
    }
    friend jet operator-(const jet& a) {
        jet r = a;
        for (std::size_t i = 0; i < r.c_.size(); ++i) r.c_[i] = -r.c_[i];
        return r;
    }
    friend jet operator*(const jet& a, const jet& b) {
        jet r(*a.tab_);
        const std::size_t m = a.c_.size();
        const int* p = a.tab_->prod.data();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                int k = p[i * m + j];
                if (k >= 0) r.c_[std::size_t(k)] += a.c_[i] * b.c_[j];
            }
        return r;
    }
    friend jet operator*(const T& s, const jet& a) {
        jet r = a;
        for (auto& c : r.c_) c = s * c;
        return r;
    }
    friend jet operator/(const jet& a, const T& s) {
        jet r = a;
        for (auto& c : r.c_) c = c / s;
        return r;
    }

    friend jet operator/(const jet& a, const jet& b) {
        const T& u = b.c_[0];
        if (detail::ring_straddles_zero(u)) throw singular_jet();
        T iu = T(1.0) / u;
        T iu2 = iu * iu;
        // Taylor coefficients of x -> 1/x at u
        std::array<T, 4> f{iu, -iu2, iu2 * iu, -iu2 * iu2};
        return a * compose1(f, b);
    }

    friend jet sqrt(const jet& a) {
        using std::sqrt;
        const T& u = a.c_[0];
        if (detail::ring_nonpositive(u)) throw singular_jet();
        T r0 = sqrt(u);
        // Taylor coefficients of x -> sqrt(x) at u: r0, 1/(2 r0), -1/(8 r0^3), 1/(16 r0^5)
        T c1 = T(1.0) / (T(2.0) * r0);
        T c2 = -c1 / (T(4.0) * u);
        T c3 = -c2 / (T(2.0) * u);
        std::array<T, 4> f{r0, c1, c2, c3};
        return compose1(f, a);
    }

    friend jet sqr(const jet& a) { return a * a; }

    jet& operator+=(const jet& o) { return *this = *this + o; }
    jet& operator-=(const jet& o) { return *this = *this - o; }
    jet& operator*=(const jet& o) { return *this = *this * o; }

    // substitute: f0..f3 are Taylor coefficients of a univariate map at a.value();
    // evaluates their series on the nilpotent part of a
    static jet compose1(const std::array<T, 4>& f, const jet& a) {
        jet s = a;
        s.c_[0] = T(0.0);
        int top = a.degree() < 3 ? a.degree() : 3;
        jet h(*a.tab_);
        h.c_[0] = f[std::size_t(top)];
        for (int k = top - 1; k >= 0; --k) {
            h = h * s;
            h.c_[0] += f[std::size_t(k)];
        }
        return h;
    }

private:
    explicit jet(const detail::jet_tables& t) : tab_(&t), c_(t.exps.size(), T(0.0)) {}

    std::size_t index(std::initializer_list<int> alpha) const {
        detail::mono m{};
        int v = 0, deg = 0;
        for (int a : alpha) {
            m[v++] = std::uint8_t(a);
            deg += a;
        }
        if (deg > tab_->d) throw order_exceeded();
        for (std::size_t i = 0; i < tab_->exps.size(); ++i)
            if (tab_->exps[i] == m) return i;
        throw std::out_of_range("jet: no such monomial");
    }

    const detail::jet_tables* tab_;
    std::vector<T> c_;

    template <class U>
    friend jet<U> jet_compose(const jet<U>&, const std::vector<jet<U>>&);
};

template <class T>
jet<T> pown(const jet<T>& a, int n) {
    if (n == 0) {
        jet<T> one(a.nvars(), a.degree(), T(1.0));
        return one;
    }
    if (n < 0) {
        jet<T> one(a.nvars(), a.degree(), T(1.0));
        return one / pown(a, -n);
    }
    jet<T> r = a;
    for (int k = 1; k < n; ++k) r = r * a;
    return r;
}

// f is a jet in m variables; g has m entries, jets in a common variable set.
// Result: jet of f(g_1,...,g_m), assuming f is expanded at (g_1.value(),...).
template <class T>
jet<T> jet_compose(const jet<T>& f, const std::vector<jet<T>>& g) {
    const auto& ft = *f.tab_;
    const auto& gt = *g.at(0).tab_;
    jet<T> r(gt.n, gt.d);
    // powers of the nilpotent parts
    std::vector<std::array<jet<T>, 4>> pw(std::size_t(ft.n));
    for (int v = 0; v < ft.n; ++v) {
        jet<T> s = g[std::size_t(v)];
        s[0] = T(0.0);
        pw[std::size_t(v)][0] = jet<T>(gt.n, gt.d, T(1.0));
        for (int k = 1; k <= gt.d && k <= 3; ++k) pw[std::size_t(v)][std::size_t(k)] = pw[std::size_t(v)][std::size_t(k - 1)] * s;
    }
    for (std::size_t i = 0; i < f.size(); ++i) {
        jet<T> m(gt.n, gt.d, T(1.0));
        bool first = true;
        for (int v = 0; v < ft.n; ++v) {
            int e = ft.exps[i][std::size_t(v)];
            if (e == 0) continue;
            if (first) {
                m = pw[std::size_t(v)][std::size_t(e)];
                first = false;
            } else {
                m = m * pw[std::size_t(v)][std::size_t(e)];
            }
        }
        r += f[i] * m;
    }
    return r;
}

} // namespace symbif
