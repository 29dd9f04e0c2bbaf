#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "symbif/poincare.hpp"
#include "symbif/systems.hpp"

using namespace symbif;

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

vector_field constant_field() { // x' = 0
    prog_builder b(1, 0);
    b.output(b.c(0.0));
    vector_field f;
    f.n = 1;
    f.m = 0;
    f.rhs = b.take();
    return f;
}

vector_field grazing_field() { // u' = 1, y' = 3(u-1)^2, so y = (t-1)^3 - grazes y=0
    prog_builder b(2, 0);
    auto u = b.state(0);
    b.output(b.c(1.0));
    b.output(b.c(3.0) * sqr(u - b.c(1.0)));
    vector_field f;
    f.n = 2;
    f.m = 0;
    f.rhs = b.take();
    return f;
}

} // namespace

TEST_CASE("crossing time of the rotation with x = 0 encloses pi/2") {
    vector_field f = rotation_field();
    odeint_options opt;
    opt.tol = 1e-16;
    opt.h_max = 0.05;
    auto steps = integrate<b64>(f, ivec<b64>{di(1.0), di(0.0)}, ivec<b64>(0), di(2.0), opt);
    section sec = section::coordinate(2, 0);
    di tau = crossing_time(f, steps, sec);
    di half_pi = pi<b64>() * di(0.5);
    CHECK(tau.intersects(half_pi));
    CHECK(tau.width_d() <= 1e-10);
}

TEST_CASE("a trajectory that never reaches the section reports no crossing") {
    vector_field f = constant_field();
    auto steps = integrate<b64>(f, ivec<b64>{di(1.0)}, ivec<b64>(0), di(5.0));
    section sec = section::coordinate(1, 0);
    CHECK_THROWS_AS(crossing_time(f, steps, sec), no_crossing);
}

TEST_CASE("a grazing cubic crossing reports suspected tangency") {
    vector_field f = grazing_field();
    auto steps = integrate<b64>(f, ivec<b64>{di(0.0), di(-1.0)}, ivec<b64>(0), di(2.0));
    section sec = section::coordinate(2, 1);
    CHECK_THROWS_AS(crossing_time(f, steps, sec), tangency_suspected);
}

TEST_CASE("rotation return map from (1,0): closed-form image and derivatives") {
    vector_field f = rotation_field();
    odeint_options opt;
    opt.tol = 1e-16;
    opt.h_max = 0.05;
    section sec = section::coordinate(2, 0);
    auto r = poincare_map<b64>(f, sec, ivec<b64>{di(1.0), di(0.0)}, ivec<b64>(0), 3, opt);

    // P(a,b) = (0, hypot(a,b)), tau(a,b) = atan2(a,b); at (1,0) the image is (0,1)
    di half_pi = pi<b64>() * di(0.5);
    CHECK(r.tau.intersects(half_pi));
    CHECK(r.tau.width_d() <= 1e-10);
    CHECK(r.image[0].contains(0.0));
    CHECK(r.image[1].contains(1.0));
    CHECK(max_width(r.image) <= 1e-10);

    // the image stays on the section
    di l = detail::section_value(sec, r.image);
    CHECK(l.contains(0.0));
    CHECK(l.width_d() <= 1e-10);

    // dP2/da = a/r = 1, dP2/db = b/r = 0; the first row vanishes identically
    CHECK(r.first(1, 0).contains(1.0));
    CHECK(r.first(1, 1).contains(0.0));
    CHECK(r.first(0, 0).contains(0.0));
    CHECK(r.first(0, 1).contains(0.0));
    CHECK(r.first(1, 0).width_d() < 1e-9);

    // second and third order closed forms of r = hypot at (1,0):
    // d2r/da2 = b^2/r^3 = 0, d2r/db2 = a^2/r^3 = 1, d3r/(da db^2) = -1
    CHECK(r.full[1].coeff({2, 0}).contains(0.0));
    CHECK(r.full[1].partial({0, 2}).contains(1.0));
    CHECK(r.full[1].partial({1, 2}).contains(-1.0));
    CHECK(r.full[1].partial({0, 2}).width_d() < 1e-7);

    // finite differences of the closed-form oracle
    const double h = 1e-6;
    double fd_a = (std::hypot(1.0 + h, 0.0) - std::hypot(1.0 - h, 0.0)) / (2 * h);
    double fd_b = (std::hypot(1.0, h) - std::hypot(1.0, -h)) / (2 * h);
    CHECK(r.first(1, 0).inflated(1e-9).contains(fd_a));
    CHECK(r.first(1, 1).inflated(1e-9).contains(fd_b));
}

TEST_CASE("rotation second return from (0,1) is the identity after a full turn") {
    vector_field f = rotation_field();
    odeint_options opt;
    opt.tol = 1e-16;
    opt.h_max = 0.05;
    section sec = section::coordinate(2, 0);
    sec.k = 2;
    auto r = poincare_map<b64>(f, sec, ivec<b64>{di(0.0), di(1.0)}, ivec<b64>(0), 1, opt);
    di two_pi = pi<b64>() * di(2.0);
    CHECK(r.tau.intersects(two_pi));
    CHECK(r.crossings == 2);
    CHECK(r.image[0].contains(0.0));
    CHECK(r.image[1].contains(1.0));
    CHECK(max_width(r.image) <= 1e-9);
    // the monodromy is the identity, but the return map is constrained to the
    // section, so its ambient derivative kills the transverse direction
    CHECK(r.first(0, 0).contains(0.0));
    CHECK(r.first(1, 1).contains(1.0));
    CHECK(r.first(0, 1).contains(0.0));
    CHECK(r.first(1, 0).contains(0.0));
}

TEST_CASE("semigroup: the second return intersects the composed first returns") {
    vector_field f = rotation_field();
    odeint_options opt;
    opt.tol = 1e-15;
    section sec1 = section::coordinate(2, 0);
    section sec2 = sec1;
    sec2.k = 2;
    ivec<b64> x0{di(1.0), di(0.0)};
    auto r2 = poincare_map<b64>(f, sec2, x0, ivec<b64>(0), 1, opt);
    auto a = poincare_map<b64>(f, sec1, x0, ivec<b64>(0), 1, opt);
    ivec<b64> mid{a.image[0], a.image[1]};
    auto b = poincare_map<b64>(f, sec1, mid, ivec<b64>(0), 1, opt);
    CHECK(r2.tau.intersects(a.tau + b.tau));
    for (int i = 0; i < 2; ++i)
        CHECK(r2.image[std::size_t(i)].intersects(b.image[std::size_t(i)]));
    imat<b64> prod = b.first * a.first;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(r2.first(std::size_t(i), std::size_t(j))
                      .intersects(prod(std::size_t(i), std::size_t(j))));
}

TEST_CASE("falkner-skan return map at the period-doubling resonance") {
    vector_field f = fs_field();
    odeint_options opt;
    opt.tol = 1e-16;
    section sec = section::coordinate(3, 2);
    ivec<b64> x{di(0.0), di(0.939792756949623004649), di(0.0)};
    ivec<b64> nu{di(340.18753498914353231)};
    auto r = poincare_map<b64>(f, sec, x, nu, 1, opt);

    // the orbit through (0, y, 0) is a period-two point of the return map: a
    // single crossing lands on the symmetry line again, so pi_x vanishes
    CHECK(r.image[0].contains(0.0));
    CHECK(b64::to_double(r.image[0].mag()) <= 1e-10);
    CHECK(r.first(0, 1).intersects(di(0.6341229327, 0.6341229330)));

    // and the second return closes up on the starting point
    section sec2 = sec;
    sec2.k = 2;
    auto r2 = poincare_map<b64>(f, sec2, x, nu, 1, opt);
    CHECK(r2.image[0].contains(0.0));
    CHECK(r2.image[1].contains(0.939792756949623004649));
}

TEST_CASE("falkner-skan reversibility defect") {
    vector_field f = fs_field();
    odeint_options opt;
    opt.tol = 1e-16;
    section sec = section::coordinate(3, 2);
    ivec<b64> x{di(0.0), di(0.9398), di(0.0)};
    ivec<b64> nu{di(340.0)};
    const signed_perm* R = f.symmetry("R");
    REQUIRE(R);
    auto defect = reversibility_defect<b64>(f, sec, *R, x, nu, opt);
    for (int i = 0; i < 3; ++i) CHECK(defect[std::size_t(i)].contains(0.0));
    CHECK(max_width(defect) <= 1e-8);

    // a sign-flipped non-reversor must be detected
    signed_perm wrong = *R;
    wrong.sign = {1, 1, -1};
    auto bad = reversibility_defect<b64>(f, sec, wrong, x, nu, opt);
    bool excludes = false;
    for (int i = 0; i < 3; ++i)
        if (!bad[std::size_t(i)].contains(0.0)) excludes = true;
    CHECK(excludes);
}

TEST_CASE("extended backend produces a compatible rotation return") {
    vector_field f = rotation_field();
    odeint_options opt;
    opt.tol = 1e-16;
    opt.h_max = 0.05;
    section sec = section::coordinate(2, 0);
    auto r = poincare_map<extp>(f, sec, ivec<extp>{xi(1.0), xi(0.0)}, ivec<extp>(0), 1, opt);
    xi half_pi = pi<extp>() * xi(0.5);
    CHECK(r.tau.intersects(half_pi));
    CHECK(r.image[1].contains(xreal(1.0)));
}
