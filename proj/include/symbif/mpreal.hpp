// Minimal value-semantic wrapper over MPFR at a fixed working precision.
// Used as the extended-precision scalar behind the same interval interface
// as binary64; round-to-nearest operators serve the nonrigorous solvers.

#pragma once

#include <mpfr.h>

#include <cstdio>
#include <string>
#include <utility>

namespace symbif {

inline constexpr mpfr_prec_t xreal_precision = 192;

class xreal {
public:
    xreal() { mpfr_init2(v_, xreal_precision); mpfr_set_zero(v_, 1); }
    xreal(double d) { mpfr_init2(v_, xreal_precision); mpfr_set_d(v_, d, MPFR_RNDN); }
    xreal(const xreal& o) { mpfr_init2(v_, xreal_precision); mpfr_set(v_, o.v_, MPFR_RNDN); }
    xreal(xreal&& o) noexcept { mpfr_init2(v_, xreal_precision); mpfr_swap(v_, o.v_); }
    ~xreal() { mpfr_clear(v_); }

    xreal& operator=(const xreal& o) {
        if (this != &o) mpfr_set(v_, o.v_, MPFR_RNDN);
        return *this;
    }
    xreal& operator=(xreal&& o) noexcept {
        mpfr_swap(v_, o.v_);
        return *this;
    }

    static xreal parse(const std::string& s, mpfr_rnd_t rnd) {
        xreal r;
        mpfr_set_str(r.v_, s.c_str(), 10, rnd);
        return r;
    }

    mpfr_ptr raw() { return v_; }
    mpfr_srcptr raw() const { return v_; }

    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    bool is_finite() const { return mpfr_number_p(v_) != 0; }
    bool is_nan() const { return mpfr_nan_p(v_) != 0; }

    std::string str(mpfr_rnd_t rnd, int digits = 62) const {
        char buf[160];
        const char mode = rnd == MPFR_RNDD ? 'D' : rnd == MPFR_RNDU ? 'U' : 'N';
        char fmt[16];
        std::snprintf(fmt, sizeof fmt, "%%.%dR%ce", digits, mode);
        mpfr_snprintf(buf, sizeof buf, fmt, v_);
        return buf;
    }

    friend xreal operator-(const xreal& a) {
        xreal r;
        mpfr_neg(r.v_, a.v_, MPFR_RNDN);
        return r;
    }

#define SYMBIF_XREAL_BINOP(op, fn)                          \
    friend xreal operator op(const xreal& a, const xreal& b) { \
        xreal r;                                            \
        fn(r.v_, a.v_, b.v_, MPFR_RNDN);                    \
        return r;                                           \
    }                                                       \
    xreal& operator op##=(const xreal& b) {                 \
        fn(v_, v_, b.v_, MPFR_RNDN);                        \
        return *this;                                       \
    }
    SYMBIF_XREAL_BINOP(+, mpfr_add)
    SYMBIF_XREAL_BINOP(-, mpfr_sub)
    SYMBIF_XREAL_BINOP(*, mpfr_mul)
    SYMBIF_XREAL_BINOP(/, mpfr_div)
#undef SYMBIF_XREAL_BINOP

    friend bool operator<(const xreal& a, const xreal& b) { return mpfr_less_p(a.v_, b.v_) != 0; }
    friend bool operator>(const xreal& a, const xreal& b) { return mpfr_greater_p(a.v_, b.v_) != 0; }
    friend bool operator<=(const xreal& a, const xreal& b) { return mpfr_lessequal_p(a.v_, b.v_) != 0; }
    friend bool operator>=(const xreal& a, const xreal& b) { return mpfr_greaterequal_p(a.v_, b.v_) != 0; }
    friend bool operator==(const xreal& a, const xreal& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
    friend bool operator!=(const xreal& a, const xreal& b) { return !(a == b); }

    static xreal add(const xreal& a, const xreal& b, mpfr_rnd_t rnd) { return bin(mpfr_add, a, b, rnd); }
    static xreal sub(const xreal& a, const xreal& b, mpfr_rnd_t rnd) { return bin(mpfr_sub, a, b, rnd); }
    static xreal mul(const xreal& a, const xreal& b, mpfr_rnd_t rnd) { return bin(mpfr_mul, a, b, rnd); }
    static xreal div(const xreal& a, const xreal& b, mpfr_rnd_t rnd) { return bin(mpfr_div, a, b, rnd); }
    static xreal sqrt(const xreal& a, mpfr_rnd_t rnd) {
        xreal r;
        mpfr_sqrt(r.v_, a.v_, rnd);
        return r;
    }

private:
    using mpfr_bin = int (*)(mpfr_ptr, mpfr_srcptr, mpfr_srcptr, mpfr_rnd_t);
    static xreal bin(mpfr_bin fn, const xreal& a, const xreal& b, mpfr_rnd_t rnd) {
        xreal r;
        fn(r.v_, a.v_, b.v_, rnd);
        return r;
    }

    mpfr_t v_;
};

inline xreal abs(const xreal& a) {
    xreal r;
    mpfr_abs(r.raw(), a.raw(), MPFR_RNDN);
    return r;
}

inline xreal sqrt(const xreal& a) { return xreal::sqrt(a, MPFR_RNDN); }

inline xreal min(const xreal& a, const xreal& b) { return a < b ? a : b; }
inline xreal max(const xreal& a, const xreal& b) { return a > b ? a : b; }

} // namespace symbif
