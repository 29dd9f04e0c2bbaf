// Interval arithmetic with outward rounding over a pluggable scalar backend.
// Backends: binary64 (error-free-transformation rounding) and MPFR extended
// precision. Both pass the same containment suite.

#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "symbif/mpreal.hpp"
#include "symbif/rounding.hpp"

namespace symbif {

struct division_by_zero_interval : std::runtime_error {
    division_by_zero_interval() : std::runtime_error("interval division by interval containing zero") {}
};

struct validation_failed : std::runtime_error {
    explicit validation_failed(const std::string& what) : std::runtime_error(what) {}
};

struct invalid_interval : std::runtime_error {
    explicit invalid_interval(const std::string& what) : std::runtime_error(what) {}
};

// binary64 backend
struct b64 {
    using real = double;

    static real add_down(real a, real b) { return rop::add_down(a, b); }
    static real add_up(real a, real b) { return rop::add_up(a, b); }
    static real sub_down(real a, real b) { return rop::sub_down(a, b); }
    static real sub_up(real a, real b) { return rop::sub_up(a, b); }
    static real mul_down(real a, real b) { return rop::mul_down(a, b); }
    static real mul_up(real a, real b) { return rop::mul_up(a, b); }
    static real div_down(real a, real b) { return rop::div_down(a, b); }
    static real div_up(real a, real b) { return rop::div_up(a, b); }
    static real sqrt_down(real a) { return rop::sqrt_down(a); }
    static real sqrt_up(real a) { return rop::sqrt_up(a); }

    static real from_double(double d) { return d; }
    static double to_double(real a) { return a; }
    static bool is_nan(real a) { return std::isnan(a); }

    static real parse_down(const std::string& s) { return rop::parse_down(s); }
    static real parse_up(const std::string& s) { return rop::parse_up(s); }

    static std::string print(real a) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", a);
        return buf;
    }
    // %.17g round-trips within binary64, but its decimal value can land on
    // the wrong side of a; step one ulp out so the printed decimal brackets
    // the value for any reader precision
    static std::string print_down(real a) {
        std::string s = print(a);
        if (parse_up(s) > a)
            s = print(std::nextafter(a, -std::numeric_limits<double>::infinity()));
        return s;
    }
    static std::string print_up(real a) {
        std::string s = print(a);
        if (parse_down(s) < a)
            s = print(std::nextafter(a, std::numeric_limits<double>::infinity()));
        return s;
    }

    // tightest binary64 bracket of pi
    static real pi_down() { return 3.141592653589793115997963468544185161590576171875; }
    static real pi_up() { return 3.141592653589793560087173318606801331043243408203125; }

    static constexpr const char* name() { return "binary64"; }
};

// MPFR backend
struct extp {
    using real = xreal;

    static real add_down(const real& a, const real& b) { return xreal::add(a, b, MPFR_RNDD); }
    static real add_up(const real& a, const real& b) { return xreal::add(a, b, MPFR_RNDU); }
    static real sub_down(const real& a, const real& b) { return xreal::sub(a, b, MPFR_RNDD); }
    static real sub_up(const real& a, const real& b) { return xreal::sub(a, b, MPFR_RNDU); }
    static real mul_down(const real& a, const real& b) { return xreal::mul(a, b, MPFR_RNDD); }
    static real mul_up(const real& a, const real& b) { return xreal::mul(a, b, MPFR_RNDU); }
    static real div_down(const real& a, const real& b) { return xreal::div(a, b, MPFR_RNDD); }
    static real div_up(const real& a, const real& b) { return xreal::div(a, b, MPFR_RNDU); }
    static real sqrt_down(const real& a) { return xreal::sqrt(a, MPFR_RNDD); }
    static real sqrt_up(const real& a) { return xreal::sqrt(a, MPFR_RNDU); }

    static real from_double(double d) { return xreal(d); }
    static double to_double(const real& a) { return a.to_double(); }
    static bool is_nan(const real& a) { return a.is_nan(); }

    static real parse_down(const std::string& s) { return xreal::parse(s, MPFR_RNDD); }
    static real parse_up(const std::string& s) { return xreal::parse(s, MPFR_RNDU); }

    static std::string print_down(const real& a) { return a.str(MPFR_RNDD); }
    static std::string print_up(const real& a) { return a.str(MPFR_RNDU); }

    static real pi_down() {
        real r;
        mpfr_const_pi(r.raw(), MPFR_RNDD);
        return r;
    }
    static real pi_up() {
        real r;
        mpfr_const_pi(r.raw(), MPFR_RNDU);
        return r;
    }

    static constexpr const char* name() { return "mpfr192"; }
};

template <class P>
class interval {
public:
    using policy = P;
    using real = typename P::real;

    interval() : lo_(P::from_double(0)), hi_(P::from_double(0)) {}
    interval(double point) : lo_(P::from_double(point)), hi_(P::from_double(point)) {}
    template <class R = real, class = std::enable_if_t<!std::is_same_v<R, double>>>
    interval(const real& point) : interval(point, point) {}
    interval(real lo, real hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
        if (P::is_nan(lo_) || P::is_nan(hi_) || hi_ < lo_) {
            throw invalid_interval("endpoints must satisfy lo <= hi and be non-NaN");
        }
    }
    template <class R = real, class = std::enable_if_t<!std::is_same_v<R, double>>>
    interval(double lo, double hi) : interval(P::from_double(lo), P::from_double(hi)) {}

    // outward decimal parsing; accepts "x" or "[lo, hi]"
    static interval parse(const std::string& s) {
        auto open = s.find('[');
        if (open == std::string::npos) {
            return interval(P::parse_down(s), P::parse_up(s));
        }
        auto comma = s.find(',', open);
        auto close = s.find(']', open);
        if (comma == std::string::npos || close == std::string::npos) {
            throw invalid_interval("malformed interval literal: " + s);
        }
        return interval(P::parse_down(s.substr(open + 1, comma - open - 1)),
                        P::parse_up(s.substr(comma + 1, close - comma - 1)));
    }

    std::string str() const {
        return "[" + P::print_down(lo_) + "," + P::print_up(hi_) + "]";
    }

    const real& lo() const { return lo_; }
    const real& hi() const { return hi_; }

    real mid() const {
        real two = P::from_double(2);
        real m = P::div_down(P::add_down(lo_, hi_), two);
        if (m < lo_) return lo_;
        if (m > hi_) return hi_;
        return m;
    }
    // radius rounded up, as a point interval-safe bound
    real rad() const {
        real m = mid();
        real r1 = P::sub_up(hi_, m);
        real r2 = P::sub_up(m, lo_);
        return r1 > r2 ? r1 : r2;
    }
    real width() const { return P::sub_up(hi_, lo_); }
    double width_d() const { return P::to_double(width()); }

    bool contains(const real& x) const { return lo_ <= x && x <= hi_; }
    template <class R = real, class = std::enable_if_t<!std::is_same_v<R, double>>>
    bool contains(double x) const { return contains(P::from_double(x)); }
    bool contains_zero() const { return contains(P::from_double(0)); }
    bool subset_of(const interval& o) const { return o.lo_ <= lo_ && hi_ <= o.hi_; }
    bool strict_subset_of(const interval& o) const { return o.lo_ < lo_ && hi_ < o.hi_; }
    bool intersects(const interval& o) const { return lo_ <= o.hi_ && o.lo_ <= hi_; }
    bool is_point() const { return lo_ == hi_; }
    bool strictly_positive() const { return lo_ > P::from_double(0); }
    bool strictly_negative() const { return hi_ < P::from_double(0); }

    friend interval operator+(const interval& a, const interval& b) {
        return interval(P::add_down(a.lo_, b.lo_), P::add_up(a.hi_, b.hi_));
    }
    friend interval operator-(const interval& a, const interval& b) {
        return interval(P::sub_down(a.lo_, b.hi_), P::sub_up(a.hi_, b.lo_));
    }
    friend interval operator-(const interval& a) { return interval(-a.hi_, -a.lo_); }

    friend interval operator*(const interval& a, const interval& b) {
        real lo = P::mul_down(a.lo_, b.lo_);
        real hi = P::mul_up(a.lo_, b.lo_);
        acc(lo, hi, a.lo_, b.hi_);
        acc(lo, hi, a.hi_, b.lo_);
        acc(lo, hi, a.hi_, b.hi_);
        return interval(lo, hi);
    }

    friend interval operator/(const interval& a, const interval& b) {
        if (b.contains_zero()) throw division_by_zero_interval();
        real lo = P::div_down(a.lo_, b.lo_);
        real hi = P::div_up(a.lo_, b.lo_);
        accd(lo, hi, a.lo_, b.hi_);
        accd(lo, hi, a.hi_, b.lo_);
        accd(lo, hi, a.hi_, b.hi_);
        return interval(lo, hi);
    }

    interval& operator+=(const interval& o) { return *this = *this + o; }
    interval& operator-=(const interval& o) { return *this = *this - o; }
    interval& operator*=(const interval& o) { return *this = *this * o; }
    interval& operator/=(const interval& o) { return *this = *this / o; }

    friend interval hull(const interval& a, const interval& b) {
        return interval(a.lo_ < b.lo_ ? a.lo_ : b.lo_, a.hi_ > b.hi_ ? a.hi_ : b.hi_);
    }
    friend std::optional<interval> meet(const interval& a, const interval& b) {
        real lo = a.lo_ > b.lo_ ? a.lo_ : b.lo_;
        real hi = a.hi_ < b.hi_ ? a.hi_ : b.hi_;
        if (hi < lo) return std::nullopt;
        return interval(lo, hi);
    }

    friend interval sqr(const interval& a) {
        if (a.lo_ >= P::from_double(0)) {
            return interval(P::mul_down(a.lo_, a.lo_), P::mul_up(a.hi_, a.hi_));
        }
        if (a.hi_ <= P::from_double(0)) {
            return interval(P::mul_down(a.hi_, a.hi_), P::mul_up(a.lo_, a.lo_));
        }
        real m1 = P::mul_up(a.lo_, a.lo_);
        real m2 = P::mul_up(a.hi_, a.hi_);
        return interval(P::from_double(0), m1 > m2 ? m1 : m2);
    }

    friend interval sqrt(const interval& a) {
        if (a.lo_ < P::from_double(0)) {
            throw invalid_interval("sqrt of interval with negative part");
        }
        return interval(P::sqrt_down(a.lo_), P::sqrt_up(a.hi_));
    }

    friend interval abs(const interval& a) {
        if (a.lo_ >= P::from_double(0)) return a;
        if (a.hi_ <= P::from_double(0)) return -a;
        return interval(P::from_double(0), -a.lo_ > a.hi_ ? -a.lo_ : a.hi_);
    }

    // upper bound for |a|
    real mag() const {
        real n = -lo_;
        return n > hi_ ? n : hi_;
    }

    interval inflated(double eps) const {
        interval e(-eps, eps);
        return *this + e;
    }

    friend bool operator==(const interval& a, const interval& b) {
        return a.lo_ == b.lo_ && a.hi_ == b.hi_;
    }

private:
    static void acc(real& lo, real& hi, const real& x, const real& y) {
        real d = P::mul_down(x, y);
        real u = P::mul_up(x, y);
        if (d < lo) lo = d;
        if (u > hi) hi = u;
    }
    static void accd(real& lo, real& hi, const real& x, const real& y) {
        real d = P::div_down(x, y);
        real u = P::div_up(x, y);
        if (d < lo) lo = d;
        if (u > hi) hi = u;
    }

    real lo_, hi_;
};

template <class P>
interval<P> pown(const interval<P>& a, int n) {
    if (n == 0) return interval<P>(1.0);
    if (n < 0) return interval<P>(1.0) / pown(a, -n);
    interval<P> r = (n & 1) ? a : sqr(a);
    interval<P> base = sqr(a);
    for (int k = (n - (n & 1)) / 2 - ((n & 1) ? 0 : 1); k > 0; --k) r *= base;
    return r;
}

template <class P>
interval<P> pi() {
    return interval<P>(P::pi_down(), P::pi_up());
}

namespace detail {

// exp on a point value by scaling-and-squaring plus Taylor series with a
// geometric tail bound; x is a point interval
template <class P>
interval<P> exp_point(const interval<P>& x) {
    using I = interval<P>;
    I y = x;
    int k = 0;
    while (P::to_double(y.mag()) > 0.5 && k < 64) {
        y = y / I(2.0);
        ++k;
    }
    const int terms = 26;
    I sum(1.0), term(1.0);
    for (int i = 1; i <= terms; ++i) {
        term = term * y / I(double(i));
        sum += term;
    }
    // |tail| <= |term| * q/(1-q), q = |y|/(terms+1) <= 1/50
    I tail = abs(term) * I(1.0 / 49.0);
    sum += I(-tail.hi(), tail.hi());
    for (int i = 0; i < k; ++i) sum = sqr(sum);
    return sum;
}

// sin on a point value; |x| reduced mod 2*pi first
template <class P>
interval<P> sin_point(const interval<P>& x) {
    using I = interval<P>;
    I twopi = I(2.0) * pi<P>();
    double n = std::floor(P::to_double(x.mid()) / P::to_double(twopi.mid()) + 0.5);
    I y = x - I(n) * twopi; // |y| <= pi + slack
    const int terms = 23;   // odd: alternating series up to y^23
    I sum = y, pw = y, y2 = sqr(y);
    double sign = -1;
    for (int i = 3; i <= terms; i += 2, sign = -sign) {
        pw = pw * y2 / I(double(i - 1) * double(i));
        sum += I(sign) * pw;
    }
    I tail = abs(pw * y2 / I(double(terms + 1) * double(terms + 2)));
    sum += I(-tail.hi(), tail.hi());
    return *meet(sum, I(-1.0, 1.0));
}

} // namespace detail

template <class P>
interval<P> exp(const interval<P>& x) {
    using I = interval<P>;
    I lo = detail::exp_point(I(x.lo(), x.lo()));
    I hi = detail::exp_point(I(x.hi(), x.hi()));
    return I(lo.lo(), hi.hi());
}

template <class P>
interval<P> sin(const interval<P>& x) {
    using I = interval<P>;
    I twopi = I(2.0) * pi<P>();
    if (x.width() >= twopi.hi()) return I(-1.0, 1.0);
    I a = detail::sin_point(I(x.lo(), x.lo()));
    I b = detail::sin_point(I(x.hi(), x.hi()));
    I r = hull(a, b);
    // widen to +-1 when a critical point pi/2 + m*pi may lie inside
    I halfpi = pi<P>() / I(2.0);
    double m0 = std::floor((P::to_double(x.lo()) - P::to_double(halfpi.mid())) / P::to_double(pi<P>().mid())) - 1;
    for (int j = 0; j < 5; ++j) {
        I crit = halfpi + I(m0 + j) * pi<P>();
        if (crit.intersects(x)) {
            bool maximum = std::fmod(std::fabs(m0 + j), 2.0) < 0.5;
            if (maximum)
                r = hull(r, I(1.0));
            else
                r = hull(r, I(-1.0));
        }
    }
    return *meet(r, I(-1.0, 1.0));
}

template <class P>
interval<P> cos(const interval<P>& x) {
    return sin(x + pi<P>() / interval<P>(2.0));
}

using di = interval<b64>;
using xi = interval<extp>;

} // namespace symbif
