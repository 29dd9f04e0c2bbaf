// The two concrete systems: the Falkner-Skan travelling-wave field and the
// spatial circular restricted three-body problem, with their symmetries,
// first integral, and libration points.

#pragma once

#include <array>
#include <stdexcept>

#include "symbif/interval.hpp"
#include "symbif/jet.hpp"
#include "symbif/linalg.hpp"
#include "symbif/tape.hpp"

namespace symbif {

struct inconclusive_root : std::runtime_error {
    explicit inconclusive_root(const std::string& what) : std::runtime_error(what) {}
};

// state (x, y, z), parameter beta:
//   x' = y, y' = z, z' = beta (y^2 - 1) - x z
inline vector_field fs_field() {
    prog_builder b(3, 1);
    auto x = b.state(0), y = b.state(1), z = b.state(2);
    auto beta = b.param(0);
    b.output(y);
    b.output(z);
    b.output(beta * (sqr(y) - b.c(1.0)) - x * z);
    vector_field f;
    f.n = 3;
    f.m = 1;
    f.rhs = b.take();
    signed_perm R;
    R.perm = {0, 1, 2};
    R.sign = {-1, 1, -1};
    R.time_reversing = true;
    f.symmetries.emplace_back("R", R);
    f.default_section_coord = 2; // z = 0
    return f;
}

// state (x, y, z, xd, yd, zd), parameter mu
inline vector_field cr3bp_field() {
    prog_builder b(6, 1);
    auto x = b.state(0), y = b.state(1), z = b.state(2);
    auto xd = b.state(3), yd = b.state(4), zd = b.state(5);
    auto mu = b.param(0);
    auto one = b.c(1.0), two = b.c(2.0);
    auto mu1 = one - mu; // 1 - mu
    auto dx1 = x + mu, dx2 = x - one + mu;
    auto y2z2 = sqr(y) + sqr(z);
    auto r1sq = sqr(dx1) + y2z2;
    auto r2sq = sqr(dx2) + y2z2;
    auto r1cube = r1sq * sqrt(r1sq);
    auto r2cube = r2sq * sqrt(r2sq);
    auto a1 = mu1 / r1cube; // (1-mu)/r1^3
    auto a2 = mu / r2cube;  // mu/r2^3
    auto ox = x - a1 * dx1 - a2 * dx2;
    auto oy = y - a1 * y - a2 * y;
    auto oz = b.c(0.0) - a1 * z - a2 * z;
    b.output(xd);
    b.output(yd);
    b.output(zd);
    b.output(two * yd + ox);
    b.output(b.c(0.0) - two * xd + oy);
    b.output(oz);
    vector_field f;
    f.n = 6;
    f.m = 1;
    f.rhs = b.take();

    // Jacobi constant C = 2 Omega - (xd^2 + yd^2 + zd^2)
    prog_builder j(6, 1);
    auto jx = j.state(0), jy = j.state(1), jz = j.state(2);
    auto jxd = j.state(3), jyd = j.state(4), jzd = j.state(5);
    auto jmu = j.param(0);
    auto jone = j.c(1.0);
    auto jmu1 = jone - jmu;
    auto jdx1 = jx + jmu, jdx2 = jx - jone + jmu;
    auto jy2z2 = sqr(jy) + sqr(jz);
    auto jr1 = sqrt(sqr(jdx1) + jy2z2);
    auto jr2 = sqrt(sqr(jdx2) + jy2z2);
    auto omega = j.c(0.5) * (sqr(jx) + sqr(jy)) + jmu1 / jr1 + jmu / jr2;
    j.output(j.c(2.0) * omega - (sqr(jxd) + sqr(jyd) + sqr(jzd)));
    f.first_integral = j.take();

    signed_perm S;
    S.perm = {0, 1, 2, 3, 4, 5};
    S.sign = {1, 1, -1, 1, 1, -1};
    signed_perm R;
    R.perm = {0, 1, 2, 3, 4, 5};
    R.sign = {1, -1, 1, -1, 1, -1};
    R.time_reversing = true;
    f.symmetries.emplace_back("S", S);
    f.symmetries.emplace_back("R", R);
    f.default_section_coord = 1; // y = 0
    return f;
}

template <class P>
interval<P> jacobi(const interval<P>& mu, const ivec<P>& state) {
    static const vector_field f = cr3bp_field();
    std::vector<interval<P>> s(state.begin(), state.end());
    return eval_program(*f.first_integral, s, {mu})[0];
}

namespace detail {

// collinear-axis equilibrium equation with region-resolved signs;
// s1 = sign(x + mu), s2 = sign(x - 1 + mu)
template <class T>
T collinear_eq(const T& x, const T& mu, int s1, int s2) {
    T one = ring_const(x, 1.0);
    T d1 = x + mu;
    T d2 = x - one + mu;
    T t1 = (one - mu) / sqr(d1);
    T t2 = mu / sqr(d2);
    return x + ring_const(x, double(-s1)) * t1 + ring_const(x, double(-s2)) * t2;
}

} // namespace detail

// certified enclosures of the collinear libration points L1, L2, L3
// (L1 between the primaries, L2 beyond the smaller, L3 beyond the larger)
template <class P>
std::array<interval<P>, 3> libration_points(const interval<P>& mu) {
    using I = interval<P>;
    double mu_d = P::to_double(mu.mid());
    struct region {
        double lo, hi;
        int s1, s2;
    };
    std::array<region, 3> regions{{
        {-mu_d + 1e-9, 1 - mu_d - 1e-9, 1, -1},  // L1
        {1 - mu_d + 1e-9, 3.0, 1, 1},            // L2
        {-3.0, -mu_d - 1e-9, -1, -1},            // L3
    }};
    std::array<I, 3> out;
    for (int li = 0; li < 3; ++li) {
        auto [lo, hi, s1, s2] = regions[std::size_t(li)];
        auto fd = [&](double x) {
            return detail::collinear_eq<double>(x, mu_d, s1, s2);
        };
        // bisection: f decreases through the root? establish the sign change first
        double flo = fd(lo), fhi = fd(hi);
        if (flo * fhi > 0) throw inconclusive_root("no sign change in libration bracket");
        for (int it = 0; it < 200; ++it) {
            double m = 0.5 * (lo + hi);
            double fm = fd(m);
            if (flo * fm <= 0) {
                hi = m;
                fhi = fm;
            } else {
                lo = m;
                flo = fm;
            }
        }
        double x0 = 0.5 * (lo + hi);
        // certify with interval Newton around the numeric root
        double r = 1e-10;
        bool done = false;
        for (int attempt = 0; attempt < 30 && !done; ++attempt, r *= 4) {
            I X(x0 - r, x0 + r);
            jet<I> jx = jet<I>::variable(1, 1, 0, X);
            jet<I> jmu(1, 1, mu);
            jet<I> fx = detail::collinear_eq(jx, jmu, s1, s2);
            I df = fx.partial({1});
            if (df.contains_zero()) continue;
            I fm = detail::collinear_eq(I(x0), mu, s1, s2);
            I N = I(x0) - fm / df;
            if (N.strict_subset_of(X)) {
                // sharpen by iterating on the contracted box
                for (int it = 0; it < 8; ++it) {
                    auto m = meet(N, X);
                    if (!m) break;
                    X = *m;
                    jx = jet<I>::variable(1, 1, 0, X);
                    fx = detail::collinear_eq(jx, jmu, s1, s2);
                    df = fx.partial({1});
                    I c(X.mid());
                    N = c - detail::collinear_eq(c, mu, s1, s2) / df;
                }
                auto m = meet(N, X);
                out[std::size_t(li)] = m ? *m : X;
                done = true;
            }
        }
        if (!done) throw inconclusive_root("libration point certification failed");
    }
    return out;
}

} // namespace symbif
