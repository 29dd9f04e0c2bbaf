#include <catch2/catch_amalgamated.hpp>

#include <boost/multiprecision/cpp_int.hpp>
#include <random>

#include "symbif/odeint.hpp"
#include "symbif/systems.hpp"

using namespace symbif;
using rational = boost::multiprecision::cpp_rational;

namespace {

program exp_field() {
    prog_builder b(1, 0);
    b.output(b.state(0));
    return b.take();
}

program zero_field() {
    prog_builder b(1, 0);
    b.output(b.c(0.0));
    return b.take();
}

program decay_field() { // x' = -50 x
    prog_builder b(1, 0);
    b.output(b.c(-50.0) * b.state(0));
    return b.take();
}

bool encloses(const di& x, const rational& r) {
    return rational(x.lo()) <= r && r <= rational(x.hi());
}

} // namespace

TEST_CASE("taylor coefficients of the exponential") {
    auto c = taylor_coeffs<di>(exp_field(), {di(1.0)}, {}, 4);
    rational f = 1;
    for (int k = 0; k <= 4; ++k) {
        if (k > 0) f *= k;
        CHECK(encloses(c[std::size_t(k)][0], rational(1) / f));
    }
}

TEST_CASE("taylor coefficients of the constant field vanish") {
    auto c = taylor_coeffs<di>(zero_field(), {di(1.0, 2.0)}, {}, 6);
    for (int k = 1; k <= 6; ++k) {
        CHECK(c[std::size_t(k)][0] == di(0.0));
    }
}

TEST_CASE("falkner-skan coefficients against the exact rational recurrence") {
    const double x0 = 0.0, y0 = 0.9398, z0 = 0.0, beta_d = 340.0;
    vector_field f = fs_field();
    auto c = taylor_coeffs<di>(f.rhs, {di(x0), di(y0), di(z0)}, {di(beta_d)}, 5);

    // independent recurrence: x' = y, y' = z, z' = beta(y^2 - 1) - x z
    std::vector<std::array<rational, 3>> r(7);
    r[0] = {rational(x0), rational(y0), rational(z0)};
    rational beta(beta_d);
    for (int k = 0; k <= 5; ++k) {
        rational conv_yy = 0, conv_xz = 0;
        for (int j = 0; j <= k; ++j) {
            conv_yy += r[std::size_t(j)][1] * r[std::size_t(k - j)][1];
            conv_xz += r[std::size_t(j)][0] * r[std::size_t(k - j)][2];
        }
        rational zdot = beta * (conv_yy - (k == 0 ? 1 : 0)) - conv_xz;
        r[std::size_t(k) + 1] = {r[std::size_t(k)][1] / (k + 1), r[std::size_t(k)][2] / (k + 1),
                                 zdot / (k + 1)};
    }
    for (int k = 0; k <= 5; ++k)
        for (int i = 0; i < 3; ++i)
            CHECK(encloses(c[std::size_t(k)][std::size_t(i)], r[std::size_t(k)][std::size_t(i)]));
}

TEST_CASE("taylor coefficients over the jet ring differentiate the recursion") {
    // x' = x with jet initial condition: coefficient k is x0/k! with d/dx0 = 1/k!
    jet<di> x0 = jet<di>::variable(1, 1, 0, di(2.0));
    auto c = taylor_coeffs<jet<di>>(exp_field(), {x0}, {}, 4);
    double f = 1;
    for (int k = 0; k <= 4; ++k) {
        if (k > 0) f *= k;
        CHECK(c[std::size_t(k)][0].value().contains(2.0 / f));
        CHECK(c[std::size_t(k)][0].partial({1}).contains(1.0 / f));
    }
}

namespace {

vector_field rotation_field() { // x' = -y, y' = x
    prog_builder b(2, 0);
    auto x = b.state(0), y = b.state(1);
    b.output(b.c(0.0) - y);
    b.output(x);
    vector_field f;
    f.n = 2;
    f.m = 0;
    f.rhs = b.take();
    return f;
}

vector_field scalar_exp_field() {
    prog_builder b(1, 0);
    b.output(b.state(0));
    vector_field f;
    f.n = 1;
    f.m = 0;
    f.rhs = b.take();
    return f;
}

} // namespace

TEST_CASE("certified rotation over a full revolution") {
    vector_field f = rotation_field();
    odeint_options opt;
    opt.h_max = 0.05;
    opt.tol = 1e-16;
    ivec<b64> x0{di(1.0), di(0.0)};
    di T = di(2.0) * pi<b64>();
    auto steps = integrate<b64>(f, x0, ivec<b64>(0), T, opt);
    REQUIRE(!steps.empty());
    const auto& fin = steps.back().exit;
    CHECK(fin[0].contains(1.0));
    CHECK(fin[1].contains(0.0));
    CHECK(max_width(fin) <= 1e-9);
}

TEST_CASE("certified exponential to time one") {
    vector_field f = scalar_exp_field();
    odeint_options opt;
    opt.tol = 1e-18;
    opt.h_max = 0.1;
    auto steps = integrate<b64>(f, ivec<b64>{di(1.0)}, ivec<b64>(0), di(1.0), opt);
    const auto& fin = steps.back().exit;
    rational ten19("10000000000000000000");
    CHECK(rational(fin[0].lo()) <= rational("27182818284590452354") / ten19);
    CHECK(rational("27182818284590452353") / ten19 <= rational(fin[0].hi()));
    CHECK(fin[0].width_d() <= 1e-10);
}

TEST_CASE("point trajectories stay inside the step enclosures") {
    vector_field f = rotation_field();
    odeint_options opt;
    opt.h_max = 0.1;
    ivec<b64> x0{di(0.999, 1.001), di(-0.001, 0.001)};
    auto steps = integrate<b64>(f, x0, ivec<b64>(0), di(3.0), opt);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        double a = x0[0].lo() + u(rng) * x0[0].width_d();
        double b = x0[1].lo() + u(rng) * x0[1].width_d();
        double r = std::hypot(a, b), phi = std::atan2(b, a);
        for (const auto& s : steps) {
            double t1 = s.t0 + s.h;
            double px = r * std::cos(phi + t1), py = r * std::sin(phi + t1);
            CHECK(s.exit[0].contains(px));
            CHECK(s.exit[1].contains(py));
        }
    }
}

TEST_CASE("variational jet of the rotation contains the rotation matrix") {
    vector_field f = rotation_field();
    odeint_options opt;
    opt.h_max = 0.05;
    opt.tol = 1e-16;
    di T = pi<b64>(); // half revolution: exp(AT) = -I
    auto fj = integrate_variational<b64>(f, ivec<b64>{di(1.0), di(0.0)}, ivec<b64>(0), T, 3, opt);
    CHECK(fj.first(0, 0).contains(-1.0));
    CHECK(fj.first(1, 1).contains(-1.0));
    CHECK(fj.first(0, 1).contains(0.0));
    CHECK(fj.first(1, 0).contains(0.0));
    CHECK(fj.first(0, 0).width_d() < 1e-8);
    // linear field: higher-order derivatives vanish
    for (int i = 0; i < 2; ++i) {
        CHECK(fj.full[std::size_t(i)].coeff({2, 0}).contains(0.0));
        CHECK(fj.full[std::size_t(i)].coeff({1, 1}).contains(0.0));
        CHECK(fj.full[std::size_t(i)].coeff({0, 3}).contains(0.0));
    }
}

TEST_CASE("zero-time integration returns the identity jet") {
    vector_field f = rotation_field();
    auto fj = integrate_variational<b64>(f, ivec<b64>{di(0.5), di(0.25)}, ivec<b64>(0), di(0.0), 2);
    CHECK(fj.value[0].contains(0.5));
    CHECK(fj.value[1].contains(0.25));
    CHECK(fj.first(0, 0).contains(1.0));
    CHECK(fj.first(1, 1).contains(1.0));
    CHECK(fj.first(0, 1) == di(0.0));
}

TEST_CASE("first-order jets contain central finite differences of the twin") {
    vector_field f = rotation_field();
    odeint_options opt;
    opt.h_max = 0.05;
    opt.tol = 1e-16;
    auto fj = integrate_variational<b64>(f, ivec<b64>{di(1.0), di(0.0)}, ivec<b64>(0), di(1.5), 1, opt);
    program aug = f.rhs; // no params, already autonomous
    // the difference quotient is formed in extended precision: in double the
    // cancellation error alone is ~5e-11, which would swamp the margin below
    const double h = 1e-6;
    for (int j = 0; j < 2; ++j) {
        std::vector<xreal> xp{xreal(1.0), xreal(0.0)}, xm{xreal(1.0), xreal(0.0)};
        xp[std::size_t(j)] = xp[std::size_t(j)] + xreal(h);
        xm[std::size_t(j)] = xm[std::size_t(j)] - xreal(h);
        auto up = integrate_point<xreal, double>(aug, xp, 1.5);
        auto um = integrate_point<xreal, double>(aug, xm, 1.5);
        for (int i = 0; i < 2; ++i) {
            double fd = ((up[std::size_t(i)] - um[std::size_t(i)]) / (xreal(2.0) * xreal(h))).to_double();
            CHECK(fj.first(std::size_t(i), std::size_t(j)).inflated(1e-10).contains(fd));
        }
    }
}

TEST_CASE("falkner-skan short arc matches the high-accuracy twin") {
    vector_field f = fs_field();
    odeint_options opt;
    opt.tol = 1e-15;
    opt.h_max = 0.05;
    ivec<b64> x0{di(0.0), di(0.9398), di(0.0)};
    auto steps = integrate<b64>(f, x0, ivec<b64>{di(340.0)}, di(0.5), opt);
    const auto& fin = steps.back().exit;
    program aug = [] {
        prog_builder b(4, 0);
        auto x = b.state(0), y = b.state(1), z = b.state(2), beta = b.state(3);
        b.output(y);
        b.output(z);
        b.output(beta * (sqr(y) - b.c(1.0)) - x * z);
        b.output(b.c(0.0));
        return b.take();
    }();
    auto p = integrate_point<double, double>(aug, {0.0, 0.9398, 0.0, 340.0}, 0.5);
    for (int i = 0; i < 3; ++i) CHECK(fin[std::size_t(i)].contains(p[std::size_t(i)]));
    CHECK(max_width(fin) < 1e-8);
}

TEST_CASE("cr3bp jacobi constant is conserved along certified steps") {
    vector_field f = cr3bp_field();
    odeint_options opt;
    opt.tol = 1e-14;
    opt.h_max = 0.02;
    const double mu = 1.2150584460350998e-2;
    ivec<b64> x0{di(0.5), di(0.0), di(0.1), di(0.0), di(0.8), di(0.0)};
    auto steps = integrate<b64>(f, x0, ivec<b64>{di(mu)}, di(0.4), opt);
    ivec<b64> entry6(6), exit6(6);
    for (int i = 0; i < 6; ++i) {
        entry6[std::size_t(i)] = steps.front().entry[std::size_t(i)];
        exit6[std::size_t(i)] = steps.back().exit[std::size_t(i)];
    }
    di c0 = jacobi(di(mu), entry6);
    di c1 = jacobi(di(mu), exit6);
    CHECK(c0.intersects(c1));
}

TEST_CASE("subdivided initial boxes keep their samples enclosed") {
    vector_field f = rotation_field();
    ivec<b64> whole{di(0.99, 1.01), di(0.0)};
    ivec<b64> left{di(0.99, 1.0), di(0.0)}, right{di(1.0, 1.01), di(0.0)};
    auto sw = integrate<b64>(f, whole, ivec<b64>(0), di(2.0));
    auto sl = integrate<b64>(f, left, ivec<b64>(0), di(2.0));
    auto sr = integrate<b64>(f, right, ivec<b64>(0), di(2.0));
    for (double a : {0.992, 0.999, 1.004, 1.009}) {
        double px = a * std::cos(2.0), py = a * std::sin(2.0);
        CHECK(sw.back().exit[0].contains(px));
        CHECK(sw.back().exit[1].contains(py));
        bool in_half = (sl.back().exit[0].contains(px) && sl.back().exit[1].contains(py)) ||
                       (sr.back().exit[0].contains(px) && sr.back().exit[1].contains(py));
        CHECK(in_half);
    }
}

TEST_CASE("rough enclosure validates a picard step") {
    auto z = rough_enclosure<di, di>(zero_field(), {di(1.0, 2.0)}, {}, di(0.0, 5.0));
    CHECK(di(1.0, 2.0).subset_of(z[0]));
    CHECK(z[0].width_d() < 1.5);

    auto b = rough_enclosure<di, di>(exp_field(), {di(1.0)}, {}, di(0.0, 0.1));
    CHECK(b[0].lo() <= 1.0);
    CHECK(b[0].hi() >= std::exp(0.1));

    CHECK_THROWS_AS((rough_enclosure<di, di>(decay_field(), {di(1.0)}, {}, di(0.0, 10.0))),
                    validation_failed);
}
