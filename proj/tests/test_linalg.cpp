#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "symbif/linalg.hpp"

using namespace symbif;

namespace {
std::mt19937_64 rng(7131);
}

TEST_CASE("point solve and inverse") {
    mat<double> a(2, 2);
    a(0, 0) = 2;
    a(1, 1) = 4;
    a(0, 1) = 1;
    vec<double> b{1.0, 2.0};
    auto x = solve_point(a, b);
    REQUIRE(x);
    CHECK((*x)[1] == Catch::Approx(0.5));
    CHECK((*x)[0] == Catch::Approx(0.25));
    auto inv = invert_point(a);
    REQUIRE(inv);
    CHECK((*inv)(0, 0) == Catch::Approx(0.5));
}

TEST_CASE("ilinear_solve exact diagonal case") {
    imat<b64> a(2, 2);
    a(0, 0) = di(2.0);
    a(1, 1) = di(2.0);
    ivec<b64> b{di(1.0), di(1.0)};
    auto x = ilinear_solve(a, b);
    REQUIRE(x);
    CHECK((*x)[0].contains(0.5));
    CHECK((*x)[1].contains(0.5));
    CHECK(max_width(*x) <= 4 * std::ldexp(1.0, -53));
}

TEST_CASE("ilinear_solve interval diagonal encloses endpoint enumeration") {
    imat<b64> a(2, 2);
    a(0, 0) = di(1.9, 2.1);
    a(1, 1) = di(1.9, 2.1);
    ivec<b64> b{di(1.0), di(1.0)};
    auto x = ilinear_solve(a, b);
    REQUIRE(x);
    // endpoint enumeration oracle: solution set per component is [1/2.1, 1/1.9]
    for (int i = 0; i < 2; ++i) {
        CHECK((*x)[i].lo() <= 1.0 / 2.1);
        CHECK((*x)[i].hi() >= 1.0 / 1.9);
    }
}

TEST_CASE("ilinear_solve rejects singular matrices") {
    imat<b64> a(2, 2);
    a(0, 0) = di(1.0);
    a(0, 1) = di(1.0);
    // second row all zeros
    ivec<b64> b{di(1.0), di(1.0)};
    CHECK(!ilinear_solve(a, b));
}

TEST_CASE("ilinear_solve contains 100 random point-system solutions") {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    imat<b64> a(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double c = (i == j) ? 5.0 + u(rng) : u(rng);
            a(i, j) = di(c - 0.01, c + 0.01);
        }
    ivec<b64> b(3);
    for (int i = 0; i < 3; ++i) {
        double c = u(rng);
        b[i] = di(c - 0.01, c + 0.01);
    }
    auto x = ilinear_solve(a, b);
    REQUIRE(x);
    std::uniform_real_distribution<double> t(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        mat<double> ap(3, 3);
        vec<double> bp(3);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j)
                ap(i, j) = a(i, j).lo() + t(rng) * (a(i, j).hi() - a(i, j).lo());
            bp[i] = b[i].lo() + t(rng) * (b[i].hi() - b[i].lo());
        }
        auto xs = solve_point(ap, bp);
        REQUIRE(xs);
        for (int i = 0; i < 3; ++i) {
            // allow the point solver's own rounding slack
            CHECK((*x)[i].inflated(1e-12).contains((*xs)[i]));
        }
    }
}

TEST_CASE("qr_frame returns an orthonormal frame") {
    mat<double> a(3, 3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) = u(rng);
    mat<double> q = qr_frame(a);
    mat<double> qtq = q.transposed() * q;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(std::fabs(qtq(i, j) - (i == j ? 1.0 : 0.0)) < 1e-12);
    // first column of Q spans the first column of A
    double dot = 0, na = 0, nq = 0;
    for (int i = 0; i < 3; ++i) {
        dot += q(i, 0) * a(i, 0);
        na += a(i, 0) * a(i, 0);
        nq += q(i, 0) * q(i, 0);
    }
    CHECK(std::fabs(std::fabs(dot) - std::sqrt(na * nq)) < 1e-10);
}

TEST_CASE("interval matrix products are containment monotone") {
    imat<b64> a(2, 2), b(2, 2);
    a(0, 0) = di(1.0, 1.1);
    a(0, 1) = di(-0.5);
    a(1, 0) = di(0.25);
    a(1, 1) = di(2.0, 2.01);
    b = a;
    imat<b64> p = a * b;
    // widen inputs, product must widen too
    imat<b64> aw = a, bw = b;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            aw(i, j) = a(i, j).inflated(1e-6);
            bw(i, j) = b(i, j).inflated(1e-6);
        }
    imat<b64> pw = aw * bw;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(p(i, j).subset_of(pw(i, j)));
}
