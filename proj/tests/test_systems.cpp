#include <catch2/catch_amalgamated.hpp>

#include <boost/multiprecision/cpp_int.hpp>
#include <random>

#include "symbif/systems.hpp"

using namespace symbif;
using rational = boost::multiprecision::cpp_rational;

namespace {
std::mt19937_64 rng(90210);

const double mu_em = 1.2150584460350998e-2;
const double mu_sj = 9.5388114032796904e-4;

std::vector<di> ipoint(std::initializer_list<double> v) {
    std::vector<di> r;
    for (double x : v) r.emplace_back(x);
    return r;
}
} // namespace

TEST_CASE("falkner-skan field values and divergence") {
    vector_field f = fs_field();
    auto v = eval_program<di>(f.rhs, ipoint({0.0, 1.0, 0.0}), {di(340.0)});
    CHECK(v[0] == di(1.0));
    CHECK(v[1] == di(0.0));
    CHECK(v[2] == di(0.0));

    // divergence encloses -x
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int t = 0; t < 20; ++t) {
        double x = u(rng), y = u(rng), z = u(rng);
        std::vector<jet<di>> s{jet<di>::variable(3, 1, 0, di(x)), jet<di>::variable(3, 1, 1, di(y)),
                               jet<di>::variable(3, 1, 2, di(z))};
        auto jv = eval_program(f.rhs, s, {jet<di>(3, 1, di(340.0))});
        di divg = jv[0].coeff({1, 0, 0}) + jv[1].coeff({0, 1, 0}) + jv[2].coeff({0, 0, 1});
        CHECK(divg.contains(-x));
    }
}

TEST_CASE("falkner-skan reversor equivariance, exactly") {
    vector_field f = fs_field();
    const signed_perm* R = f.symmetry("R");
    REQUIRE(R);
    REQUIRE(R->time_reversing);
    CHECK(R->compose(*R).is_identity());

    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int t = 0; t < 100; ++t) {
        std::vector<di> s{di(u(rng)), di(u(rng)), di(u(rng))};
        std::vector<di> rs = R->apply(s);
        auto lhs = eval_program(f.rhs, rs, {di(340.5)});
        auto rhs_v = R->apply(eval_program(f.rhs, s, {di(340.5)}));
        for (int i = 0; i < 3; ++i) CHECK(lhs[std::size_t(i)] == -rhs_v[std::size_t(i)]);
    }
}

TEST_CASE("cr3bp symmetry descriptors commute and square to the identity") {
    vector_field f = cr3bp_field();
    const signed_perm* S = f.symmetry("S");
    const signed_perm* R = f.symmetry("R");
    REQUIRE(S);
    REQUIRE(R);
    CHECK(S->compose(*S).is_identity());
    CHECK(R->compose(*R).is_identity());
    CHECK(S->compose(*R) == R->compose(*S));
}

TEST_CASE("cr3bp reversor and planar invariance") {
    vector_field f = cr3bp_field();
    const signed_perm* R = f.symmetry("R");
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    di mu(mu_em);
    for (int t = 0; t < 100; ++t) {
        std::vector<di> s{di(0.5 + u(rng)), di(u(rng)), di(u(rng)), di(u(rng)), di(u(rng)), di(u(rng))};
        auto lhs = eval_program(f.rhs, R->apply(s), {mu});
        auto rhs_v = R->apply(eval_program(f.rhs, s, {mu}));
        for (int i = 0; i < 6; ++i) CHECK(lhs[std::size_t(i)] == -rhs_v[std::size_t(i)]);
    }
    // z = zd = 0 plane is exactly invariant
    for (int t = 0; t < 20; ++t) {
        std::vector<di> s{di(0.5 + u(rng)), di(u(rng)), di(0.0), di(u(rng)), di(u(rng)), di(0.0)};
        auto v = eval_program(f.rhs, s, {mu});
        CHECK(v[2] == di(0.0));
        CHECK(v[5] == di(0.0));
    }
}

TEST_CASE("equal masses: conjugation by the primary swap") {
    vector_field f = cr3bp_field();
    signed_perm T;
    T.perm = {0, 1, 2, 3, 4, 5};
    T.sign = {-1, -1, 1, -1, -1, 1};
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    for (int t = 0; t < 50; ++t) {
        std::vector<di> s{di(1.0 + u(rng)), di(u(rng)), di(u(rng)), di(u(rng)), di(u(rng)), di(u(rng))};
        auto lhs = eval_program(f.rhs, T.apply(s), {di(0.5)});
        auto rhs_v = T.apply(eval_program(f.rhs, s, {di(0.5)}));
        // the swap reorders the two potential terms, so agreement is only up
        // to the accumulated rounding of that reordering
        for (int i = 0; i < 6; ++i) {
            CHECK(lhs[std::size_t(i)].subset_of(rhs_v[std::size_t(i)].inflated(1e-13)));
            CHECK(rhs_v[std::size_t(i)].subset_of(lhs[std::size_t(i)].inflated(1e-13)));
        }
    }
}

TEST_CASE("jacobi constant exact rational value") {
    ivec<b64> s(6);
    s[0] = di(1.0);
    di c = jacobi(di(0.5), s);
    rational want(11, 3);
    CHECK(rational(c.lo()) <= want);
    CHECK(want <= rational(c.hi()));
    CHECK(c.width_d() < 1e-14);
}

TEST_CASE("jacobi enclosure is monotone under box nesting") {
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (int t = 0; t < 50; ++t) {
        ivec<b64> s(6);
        s[0] = di(0.5 + u(rng));
        for (int i = 1; i < 6; ++i) s[std::size_t(i)] = di(u(rng));
        ivec<b64> w(6);
        for (int i = 0; i < 6; ++i) w[std::size_t(i)] = s[std::size_t(i)].inflated(1e-6);
        CHECK(jacobi(di(mu_sj), s).subset_of(jacobi(di(mu_sj), w)));
    }
}

TEST_CASE("libration points are certified equilibria") {
    vector_field f = cr3bp_field();
    for (double mu_d : {mu_em, mu_sj, 0.3}) {
        di mu(mu_d);
        auto L = libration_points(mu);
        for (int li = 0; li < 3; ++li) {
            CHECK(L[std::size_t(li)].width_d() < 1e-9);
            std::vector<di> s{L[std::size_t(li)], di(0.0), di(0.0), di(0.0), di(0.0), di(0.0)};
            auto v = eval_program(f.rhs, s, {mu});
            for (int i = 0; i < 6; ++i) CHECK(v[std::size_t(i)].contains_zero());
        }
        // ordering convention
        CHECK(L[0].hi() < 1.0 - mu_d);
        CHECK(L[0].lo() > -mu_d);
        CHECK(L[1].lo() > 1.0 - mu_d);
        CHECK(L[2].hi() < -mu_d);
    }
    auto Leq = libration_points(di(0.5));
    CHECK(Leq[0].contains(0.0));
}

TEST_CASE("earth-moon L1 against an extended-precision newton oracle") {
    di mu(mu_em);
    auto L = libration_points(mu);
    // independent scalar Newton in 192-bit arithmetic
    xreal x(0.8), m(mu_em);
    for (int it = 0; it < 80; ++it) {
        xreal one(1.0), d1 = x + m, d2 = x - one + m;
        xreal fx = x - (one - m) / (d1 * d1) + m / (d2 * d2);
        xreal dfx = one + xreal(2.0) * (one - m) / (d1 * d1 * d1) - xreal(2.0) * m / (d2 * d2 * d2);
        x = x - fx / dfx;
    }
    double oracle = x.to_double();
    CHECK(oracle == Catch::Approx(0.836915).margin(1e-4));
    CHECK(std::fabs(L[0].mid() - oracle) < 1e-12);

    // extended backend produces a compatible, tighter enclosure
    auto Lx = libration_points(xi(mu_em));
    CHECK(extp::to_double(Lx[0].lo()) >= L[0].lo());
    CHECK(extp::to_double(Lx[0].hi()) <= L[0].hi());
}
