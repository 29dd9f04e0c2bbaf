// Directed-rounding scalar kernels for binary64.
//
// Endpoint operations are computed in round-to-nearest and then corrected
// by one ulp when an error-free transformation (two-sum / fma residual)
// shows the rounded result is on the wrong side of the exact value.
// This keeps exact operations exact (2*[1,1] stays [2,2]) and avoids
// touching the FP environment, which interacts badly with optimizers.

#pragma once

#include <cfenv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

namespace symbif::rop {

inline double up(double r) {
    return std::nextafter(r, std::numeric_limits<double>::infinity());
}

inline double down(double r) {
    return std::nextafter(r, -std::numeric_limits<double>::infinity());
}

// Knuth two-sum residual: exact = r + e with r = fl(a+b).
inline double sum_err(double a, double b, double r) {
    const double bv = r - a;
    const double av = r - bv;
    return (a - av) + (b - bv);
}

inline double add_down(double a, double b) {
    const double r = a + b;
    if (!std::isfinite(r)) {
        return r > 0 ? std::numeric_limits<double>::max() : r;
    }
    return sum_err(a, b, r) < 0 ? down(r) : r;
}

inline double add_up(double a, double b) {
    const double r = a + b;
    if (!std::isfinite(r)) {
        return r < 0 ? -std::numeric_limits<double>::max() : r;
    }
    return sum_err(a, b, r) > 0 ? up(r) : r;
}

inline double sub_down(double a, double b) { return add_down(a, -b); }
inline double sub_up(double a, double b) { return add_up(a, -b); }

inline double mul_down(double a, double b) {
    const double r = a * b;
    if (!std::isfinite(r)) {
        return r > 0 ? std::numeric_limits<double>::max() : r;
    }
    return std::fma(a, b, -r) < 0 ? down(r) : r;
}

inline double mul_up(double a, double b) {
    const double r = a * b;
    if (!std::isfinite(r)) {
        return r < 0 ? -std::numeric_limits<double>::max() : r;
    }
    return std::fma(a, b, -r) > 0 ? up(r) : r;
}

// exact - r = (a - r*b)/b = -fma(r,b,-a)/b; only the sign is needed.
inline double div_down(double a, double b) {
    const double r = a / b;
    if (!std::isfinite(r)) {
        return r > 0 ? std::numeric_limits<double>::max() : r;
    }
    const double res = std::fma(r, b, -a);
    const bool exact_above = (res < 0) == (b > 0); // exact > r
    if (res == 0) return r;
    return exact_above ? r : down(r);
}

inline double div_up(double a, double b) {
    const double r = a / b;
    if (!std::isfinite(r)) {
        return r < 0 ? -std::numeric_limits<double>::max() : r;
    }
    const double res = std::fma(r, b, -a);
    if (res == 0) return r;
    const bool exact_above = (res < 0) == (b > 0);
    return exact_above ? up(r) : r;
}

inline double sqrt_down(double a) {
    const double r = std::sqrt(a);
    const double res = std::fma(r, r, -a); // r^2 - a
    return res > 0 ? down(r) : r;
}

inline double sqrt_up(double a) {
    const double r = std::sqrt(a);
    const double res = std::fma(r, r, -a);
    return res < 0 ? up(r) : r;
}

// strtod honours the current rounding mode (correctly rounded per C17),
// which gives outward decimal parsing without any exactness analysis.
inline double parse_down(const std::string& s) {
    const int saved = std::fegetround();
    std::fesetround(FE_DOWNWARD);
    const double r = std::strtod(s.c_str(), nullptr);
    std::fesetround(saved);
    return r;
}

inline double parse_up(const std::string& s) {
    const int saved = std::fegetround();
    std::fesetround(FE_UPWARD);
    const double r = std::strtod(s.c_str(), nullptr);
    std::fesetround(saved);
    return r;
}

} // namespace symbif::rop
