#include <catch2/catch_amalgamated.hpp>

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <random>

#include "symbif/interval.hpp"

using namespace symbif;
using rational = boost::multiprecision::cpp_rational;

namespace {

rational to_rat(double d) { return rational(d); }

// exact check lo <= r <= hi
bool to_rat_bounds(const di& x, const rational& r) {
    return to_rat(x.lo()) <= r && r <= to_rat(x.hi());
}

std::mt19937_64 rng(20240817);

di random_interval(double scale) {
    std::uniform_real_distribution<double> d(-scale, scale);
    double a = d(rng), b = d(rng);
    if (a > b) std::swap(a, b);
    return di(a, b);
}

di widen(const di& x, double eps) {
    return di(x.lo() - eps * (1 + std::fabs(x.lo())), x.hi() + eps * (1 + std::fabs(x.hi())));
}

} // namespace

TEST_CASE("exact endpoint arithmetic") {
    di a(1.0, 2.0), b(3.0, 4.0);
    di s = a + b;
    CHECK(s.lo() == 4.0);
    CHECK(s.hi() == 6.0);

    di p = di(-1.0, 2.0) * di(3.0, 4.0);
    CHECK(p.lo() == -4.0);
    CHECK(p.hi() == 8.0);

    di two = di(2.0) * di(1.0);
    CHECK(two.lo() == 2.0);
    CHECK(two.hi() == 2.0);
}

TEST_CASE("division encloses exact rational with tiny width") {
    di q = di(1.0) / di(3.0);
    CHECK(to_rat_bounds(q, rational(1, 3)));
    CHECK(q.width_d() <= 2 * std::ldexp(1.0, -54));

    CHECK_THROWS_AS(di(1.0) / di(-1.0, 1.0), division_by_zero_interval);
}

TEST_CASE("hull and meet") {
    di h = hull(di(0.0, 1.0), di(2.0, 3.0));
    CHECK(h.lo() == 0.0);
    CHECK(h.hi() == 3.0);

    auto m = meet(di(0.0, 2.0), di(1.0, 3.0));
    REQUIRE(m);
    CHECK(m->lo() == 1.0);
    CHECK(m->hi() == 2.0);

    CHECK(!meet(di(0.0, 1.0), di(2.0, 3.0)));
}

TEST_CASE("containment monotonicity under random nesting") {
    for (int it = 0; it < 500; ++it) {
        di a = random_interval(10.0), b = random_interval(10.0);
        di aw = widen(a, 1e-6), bw = widen(b, 1e-6);
        CHECK((a + b).subset_of(aw + bw));
        CHECK((a - b).subset_of(aw - bw));
        CHECK((a * b).subset_of(aw * bw));
        if (!bw.contains_zero()) CHECK((a / b).subset_of(aw / bw));
        CHECK(sqr(a).subset_of(sqr(aw)));
    }
}

TEST_CASE("operation results contain sampled point results") {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int it = 0; it < 500; ++it) {
        di a = random_interval(50.0), b = random_interval(50.0);
        double x = a.lo() + u(rng) * (a.hi() - a.lo());
        double y = b.lo() + u(rng) * (b.hi() - b.lo());
        rational s = to_rat(x) + to_rat(y);
        di sum = a + b;
        CHECK(to_rat(sum.lo()) <= s);
        CHECK(s <= to_rat(sum.hi()));
        // exact rational oracle for the product
        rational p = to_rat(x) * to_rat(y);
        di prod = a * b;
        CHECK(to_rat(prod.lo()) <= p);
        CHECK(p <= to_rat(prod.hi()));
    }
}

TEST_CASE("sqrt brackets exact square roots") {
    di r = sqrt(di(2.0));
    CHECK(to_rat(r.lo()) * to_rat(r.lo()) <= 2);
    CHECK(to_rat(r.hi()) * to_rat(r.hi()) >= 2);
    CHECK(r.width_d() < 1e-15);
    di four = sqrt(di(4.0));
    CHECK(four.lo() == 2.0);
    CHECK(four.hi() == 2.0);
}

TEST_CASE("pi enclosure and transcendental sanity") {
    const rational ten19("10000000000000000000");
    const rational pi_lo = rational("31415926535897932384") / ten19;
    const rational pi_hi = rational("31415926535897932385") / ten19;
    const rational e_lo = rational("27182818284590452353") / ten19;
    const rational e_hi = rational("27182818284590452354") / ten19;

    di p = pi<b64>();
    CHECK(to_rat(p.lo()) <= pi_lo);
    CHECK(pi_hi <= to_rat(p.hi()));
    CHECK(p.width_d() < 1e-15);

    di e = exp(di(1.0));
    CHECK(to_rat(e.lo()) <= e_lo);
    CHECK(e_hi <= to_rat(e.hi()));
    CHECK(e.width_d() < 1e-13);

    di s = sin(p / di(2.0));
    CHECK(s.contains(1.0));
    CHECK(sin(di(0.0, 100.0)) == di(-1.0, 1.0));
    di c = cos(di(0.0));
    CHECK(c.contains(1.0));
}

TEST_CASE("decimal serialization round-trips outward") {
    for (int it = 0; it < 200; ++it) {
        di a = random_interval(1e3);
        di back = di::parse(a.str());
        CHECK(a.subset_of(back));
    }
    di x = di::parse("0.1");
    CHECK(to_rat_bounds(x, rational(1, 10)));
    CHECK(x.width_d() <= std::ldexp(1.0, -55));
}

TEST_CASE("extended backend passes the same containment checks") {
    xi a = xi::parse("0.1");
    CHECK(xi::policy::to_double(a.width()) < 1e-55);
    xi q = xi(1.0) / xi(3.0);
    CHECK(xi::policy::to_double(q.width()) < 1e-56);
    xi e = exp(xi(1.0));
    xreal e_lo = xreal::parse("2.71828182845904523536028747135266249775724709369995", MPFR_RNDD);
    xreal e_hi = xreal::parse("2.71828182845904523536028747135266249775724709369996", MPFR_RNDU);
    CHECK(e.lo() <= e_lo);
    CHECK(e_hi <= e.hi());
    xi back = xi::parse(a.str());
    CHECK(a.subset_of(back));
    // extended enclosures are strict subsets of binary64 ones
    di qd = di(1.0) / di(3.0);
    CHECK(extp::to_double(q.lo()) >= qd.lo());
    CHECK(extp::to_double(q.hi()) <= qd.hi());
}

TEST_CASE("pown handles signs and zero-straddling bases") {
    di x(-2.0, 3.0);
    di x2 = pown(x, 2);
    CHECK(x2.lo() == 0.0);
    CHECK(x2.hi() == 9.0);
    di x3 = pown(x, 3);
    CHECK(x3.contains(-8.0));
    CHECK(x3.contains(27.0));
    CHECK(pown(di(2.0), 0) == di(1.0));
}
