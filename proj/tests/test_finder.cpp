#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "symbif/finder.hpp"
#include "symbif/systems.hpp"

using namespace symbif;

namespace {

template <class P>
poincare_family<P> fs_family(double tol) {
    poincare_family<P> fam;
    fam.field = fs_field();
    fam.sec = section::coordinate(3, 2);
    fam.split.p1 = 1;
    fam.split.q1 = 0;
    fam.params = ivec<P>{interval<P>(0.0)};
    fam.nu_param = 0;
    fam.opt.tol = tol;
    return fam;
}

} // namespace

TEST_CASE("falkner-skan 1:2 point refines to the tabulated bifurcation point") {
    auto f64 = fs_family<b64>(1e-12);
    auto fx = fs_family<extp>(1e-26);

    // double-precision stage from a coarse seed, then extended re-polish:
    // the binary64 enclosure midpoints carry a bias of order 1e-6 through
    // the Poincare map, so high accuracy needs the extended backend
    finder_options coarse;
    coarse.tol = 1e-3;
    auto s1 = refine_bifurcation_point<b64>(f64, 2, 0, 0, di(340.2), ivec<b64>{di(0.9398)}, coarse);
    auto s2 = refine_bifurcation_point<extp>(fx, 2, 0, 0, interval<extp>(s1.nu.mid()),
                                             ivec<extp>{interval<extp>(s1.p[0].mid())});

    auto bh = interval<extp>::parse("340.18753498914353231");
    auto yh = interval<extp>::parse("0.939792756949623004649");
    REQUIRE(std::abs(extp::to_double((s2.nu - bh).mid())) < 1e-12);
    REQUIRE(std::abs(extp::to_double((s2.p[0] - yh).mid())) < 1e-12);
    REQUIRE(s1.trace.size() + s2.trace.size() <= 8);
    REQUIRE(s2.residual_g < 1e-12);
    REQUIRE(s2.residual_q < 1e-12);

    // quadratic-convergence sanity: ratio <= 0.5 once below 1e-4
    for (std::size_t i = 0; i + 1 < s2.trace.size(); ++i)
        if (s2.trace[i] < 1e-4) REQUIRE(s2.trace[i + 1] <= 0.5 * s2.trace[i]);

    // determinism for fixed precision and seed
    auto s2b = refine_bifurcation_point<extp>(fx, 2, 0, 0, interval<extp>(s1.nu.mid()),
                                              ivec<extp>{interval<extp>(s1.p[0].mid())});
    REQUIRE(extp::to_double((s2.nu - s2b.nu).mid()) == 0.0);
}

TEST_CASE("seed far from any resonance fails with max_iterations") {
    auto f64 = fs_family<b64>(1e-12);
    REQUIRE_THROWS_AS(refine_bifurcation_point<b64>(f64, 2, 0, 0, di(100.0), ivec<b64>{di(0.94)}),
                      max_iterations);
}

TEST_CASE("resonance scan brackets exactly the 1:2, 1:3, 1:4 crossings") {
    auto f64 = fs_family<b64>(1e-12);
    auto seeds = resonance_scan<b64>(f64, 300.0, 700.0, 40, {2, 3, 4, 5}, ivec<b64>{di(0.9397)});
    REQUIRE(seeds.size() == 3);
    double expect[] = {340.18753498914353231, 453.442586821384637563, 679.95415507296894192};
    for (std::size_t i = 0; i < 3; ++i) {
        REQUIRE(seeds[i].k == int(i) + 2);
        REQUIRE(std::abs(seeds[i].nu.mid() - expect[i]) < 1e-2);
    }

    auto none = resonance_scan<b64>(f64, 300.0, 301.0, 4, {2, 3, 4}, ivec<b64>{di(0.9397)});
    REQUIRE(none.empty());
}

TEST_CASE("cr3bp symmetry-breaking points match the tabulated Jacobi constants") {
    auto f = cr3bp_field();
    auto sec = section::coordinate(6, 1); // half-return map y = 0

    struct {
        double mu, x, yd, C_lo, C_hi;
    } cases[] = {
        {1.2150584460350998e-2, 0.8235, 0.126, 3.1743503, 3.1743536}, // Earth-Moon L1
        {9.5388114032796904e-4, 0.9255, 0.0578, 3.0358811, 3.0358851}, // Sun-Jupiter L1
    };
    for (const auto& c : cases) {
        auto s = find_symmetry_breaking<b64>(f, sec, ivec<b64>{di(c.mu)}, di(c.x), di(c.yd), {},
                                             {}, {}, 4.0);
        REQUIRE(s.residual_q < 1e-12);
        REQUIRE(s.residual_g < 1e-12);
        double C = jacobi<b64>(di(c.mu),
                               ivec<b64>{s.nu, di(0.0), di(0.0), di(0.0), s.p[0], di(0.0)})
                       .mid();
        REQUIRE(C > c.C_lo - 5e-4);
        REQUIRE(C < c.C_hi + 5e-4);
        // the tighter tabulated enclosure holds as well
        REQUIRE(C > c.C_lo);
        REQUIRE(C < c.C_hi);
    }

    // a planar system exposes no out-of-plane direction
    REQUIRE_THROWS_AS(find_symmetry_breaking<b64>(fs_field(), section::coordinate(3, 2),
                                                  ivec<b64>{di(340.0)}, di(0.0), di(0.9)),
                      std::invalid_argument);
}
