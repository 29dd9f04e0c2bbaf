#include <catch2/catch_amalgamated.hpp>

#include <boost/multiprecision/cpp_int.hpp>
#include <array>
#include <map>
#include <random>

#include "symbif/interval.hpp"
#include "symbif/jet.hpp"

using namespace symbif;
using rational = boost::multiprecision::cpp_rational;

namespace {

std::mt19937_64 rng(4451);

// sparse polynomials in up to 3 variables over the rationals; the exact
// oracle for jet coefficients
struct poly {
    std::map<std::array<int, 3>, rational> t;

    static poly var(int i) {
        poly p;
        std::array<int, 3> e{0, 0, 0};
        e[std::size_t(i)] = 1;
        p.t[e] = 1;
        return p;
    }
    static poly konst(const rational& c) {
        poly p;
        if (c != 0) p.t[{0, 0, 0}] = c;
        return p;
    }
    poly operator+(const poly& o) const {
        poly r = *this;
        for (auto& [e, c] : o.t) {
            r.t[e] += c;
            if (r.t[e] == 0) r.t.erase(e);
        }
        return r;
    }
    poly operator*(const poly& o) const {
        poly r;
        for (auto& [e1, c1] : t)
            for (auto& [e2, c2] : o.t) {
                std::array<int, 3> e{e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]};
                r.t[e] += c1 * c2;
                if (r.t[e] == 0) r.t.erase(e);
            }
        return r;
    }
    poly deriv(int v) const {
        poly r;
        for (auto& [e, c] : t) {
            if (e[std::size_t(v)] == 0) continue;
            std::array<int, 3> d = e;
            d[std::size_t(v)] -= 1;
            r.t[d] += c * e[std::size_t(v)];
            if (r.t[d] == 0) r.t.erase(d);
        }
        return r;
    }
    rational eval(const std::array<rational, 3>& x) const {
        rational s = 0;
        for (auto& [e, c] : t) {
            rational m = c;
            for (int v = 0; v < 3; ++v)
                for (int k = 0; k < e[std::size_t(v)]; ++k) m *= x[std::size_t(v)];
            s += m;
        }
        return s;
    }
};

bool encloses(const di& x, const rational& r) {
    return rational(x.lo()) <= r && r <= rational(x.hi());
}

// dyadic sample points keep the oracle comparison exact
double dyadic(double scale) {
    std::uniform_int_distribution<int> d(-64, 64);
    return d(rng) * scale / 64.0;
}

jet<di> jet_of(const poly& p, const std::array<double, 3>& x, int deg) {
    std::array<jet<di>, 3> v;
    for (int i = 0; i < 3; ++i) v[std::size_t(i)] = jet<di>::variable(3, deg, i, di(x[std::size_t(i)]));
    jet<di> r(3, deg);
    for (auto& [e, c] : p.t) {
        jet<di> m(3, deg, di(double(c.convert_to<double>())));
        for (int vv = 0; vv < 3; ++vv)
            for (int k = 0; k < e[std::size_t(vv)]; ++k) m = m * v[std::size_t(vv)];
        r += m;
    }
    return r;
}

poly random_poly(int nterms, int maxdeg) {
    std::uniform_int_distribution<int> cd(-9, 9), ed(0, maxdeg);
    poly p;
    for (int i = 0; i < nterms; ++i) {
        int c = cd(rng);
        if (c == 0) c = 1;
        std::array<int, 3> e{ed(rng), ed(rng), ed(rng)};
        while (e[0] + e[1] + e[2] > maxdeg) e[std::size_t(ed(rng) % 3)] = 0;
        p.t[e] += c;
    }
    return p;
}

} // namespace

TEST_CASE("polynomial jets match exact symbolic differentiation") {
    for (int trial = 0; trial < 200; ++trial) {
        poly p = random_poly(6, 4);
        std::array<double, 3> x{dyadic(2.0), dyadic(2.0), dyadic(2.0)};
        std::array<rational, 3> xr{rational(x[0]), rational(x[1]), rational(x[2])};
        jet<di> j = jet_of(p, x, 3);
        for (int a = 0; a <= 3; ++a)
            for (int b = 0; a + b <= 3; ++b)
                for (int c = 0; a + b + c <= 3; ++c) {
                    poly d = p;
                    for (int k = 0; k < a; ++k) d = d.deriv(0);
                    for (int k = 0; k < b; ++k) d = d.deriv(1);
                    for (int k = 0; k < c; ++k) d = d.deriv(2);
                    rational want = d.eval(xr);
                    rational fact = 1;
                    for (int k = 2; k <= a; ++k) fact *= k;
                    for (int k = 2; k <= b; ++k) fact *= k;
                    for (int k = 2; k <= c; ++k) fact *= k;
                    CHECK(encloses(j.coeff({a, b, c}), want / fact));
                }
    }
}

TEST_CASE("partial() applies the factorial") {
    jet<di> x = jet<di>::variable(2, 3, 0, di(2.0));
    jet<di> y = jet<di>::variable(2, 3, 1, di(3.0));
    jet<di> f = x * x * x * y; // x^3 y
    // d^3/dx^3 = 6y = 18, d^2/dx dy... d/dx d/dy x^3 y -> 3x^2 = 12
    CHECK(f.partial({3, 0}).contains(18.0));
    CHECK(f.partial({1, 1}).contains(12.0));
    CHECK(f.partial({0, 1}).contains(8.0));
}

TEST_CASE("jet division and sqrt satisfy ring identities") {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        jet<di> a(3, 3);
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = di(u(rng));
        a[0] = di(1.5 + std::fabs(u(rng)));
        jet<di> one(3, 3, di(1.0));
        jet<di> q = one / a;
        jet<di> prod = a * q;
        CHECK(prod[0].contains(1.0));
        for (std::size_t i = 1; i < prod.size(); ++i) CHECK(prod[i].contains(0.0));

        jet<di> r = sqrt(a);
        jet<di> back = r * r;
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(back[i].intersects(a[i].inflated(1e-12)));
        }
    }
}

TEST_CASE("division reproduces the geometric series") {
    jet<di> x = jet<di>::variable(1, 3, 0, di(0.0));
    jet<di> one(1, 3, di(1.0));
    jet<di> g = one / (one - x); // 1 + x + x^2 + x^3
    for (int k = 0; k <= 3; ++k) CHECK(g.coeff({k}).contains(1.0));
}

TEST_CASE("jet_compose agrees with direct evaluation of the composite") {
    for (int trial = 0; trial < 50; ++trial) {
        poly f = random_poly(5, 3);
        poly g0 = random_poly(4, 2), g1 = random_poly(4, 2), g2 = random_poly(4, 2);
        std::array<double, 3> x{dyadic(1.0), dyadic(1.0), dyadic(1.0)};

        jet<di> jg0 = jet_of(g0, x, 3), jg1 = jet_of(g1, x, 3), jg2 = jet_of(g2, x, 3);
        // f expanded at the g values
        std::array<jet<di>, 3> fv;
        for (int i = 0; i < 3; ++i)
            fv[std::size_t(i)] = jet<di>::variable(3, 3, i, (i == 0 ? jg0 : i == 1 ? jg1 : jg2).value());
        jet<di> jf(3, 3);
        for (auto& [e, c] : f.t) {
            jet<di> m(3, 3, di(double(c.convert_to<double>())));
            for (int vv = 0; vv < 3; ++vv)
                for (int k = 0; k < e[std::size_t(vv)]; ++k) m = m * fv[std::size_t(vv)];
            jf += m;
        }
        jet<di> composed = jet_compose(jf, {jg0, jg1, jg2});

        // oracle: substitute symbolically, then take the jet of the composite
        poly comp;
        for (auto& [e, c] : f.t) {
            poly m = poly::konst(c);
            for (int k = 0; k < e[0]; ++k) m = m * g0;
            for (int k = 0; k < e[1]; ++k) m = m * g1;
            for (int k = 0; k < e[2]; ++k) m = m * g2;
            comp = comp + m;
        }
        std::array<rational, 3> xr{rational(x[0]), rational(x[1]), rational(x[2])};
        for (int a = 0; a <= 3; ++a)
            for (int b = 0; a + b <= 3; ++b)
                for (int c = 0; a + b + c <= 3; ++c) {
                    poly d = comp;
                    for (int k = 0; k < a; ++k) d = d.deriv(0);
                    for (int k = 0; k < b; ++k) d = d.deriv(1);
                    for (int k = 0; k < c; ++k) d = d.deriv(2);
                    rational want = d.eval(xr);
                    rational fact = 1;
                    for (int k = 2; k <= a; ++k) fact *= k;
                    for (int k = 2; k <= b; ++k) fact *= k;
                    for (int k = 2; k <= c; ++k) fact *= k;
                    CHECK(encloses(composed.coeff({a, b, c}), want / fact));
                }
    }
}

TEST_CASE("jet coefficients are containment monotone") {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        jet<di> a(2, 3), b(2, 3);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = di(u(rng));
            b[i] = di(u(rng));
        }
        a[0] = di(2.0 + std::fabs(u(rng)));
        jet<di> aw = a, bw = b;
        for (std::size_t i = 0; i < a.size(); ++i) {
            aw[i] = a[i].inflated(1e-8);
            bw[i] = b[i].inflated(1e-8);
        }
        jet<di> p = a * b, pw = aw * bw;
        jet<di> q = b / a, qw = bw / aw;
        jet<di> s = sqrt(a), sw = sqrt(aw);
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(p[i].subset_of(pw[i]));
            CHECK(q[i].subset_of(qw[i]));
            CHECK(s[i].subset_of(sw[i]));
        }
    }
}

TEST_CASE("singular and over-order requests raise dedicated errors") {
    jet<di> bad(1, 3, di(-1.0, 1.0));
    jet<di> one(1, 3, di(1.0));
    CHECK_THROWS_AS(one / bad, singular_jet);
    CHECK_THROWS_AS(sqrt(bad), singular_jet);
    CHECK_THROWS_AS(one.partial({4}), order_exceeded);
}

TEST_CASE("inverse square root jet at 4") {
    jet<di> x = jet<di>::variable(1, 1, 0, di(4.0));
    jet<di> one(1, 1, di(1.0));
    jet<di> f = one / sqrt(x);
    CHECK(f.value().contains(0.5));
    CHECK(f.partial({1}).contains(-1.0 / 16.0));
}

TEST_CASE("first-order partials agree with central finite differences") {
    auto g = [](jet<di> x, jet<di> y) {
        jet<di> one(2, 1, di(1.0));
        return sqrt(x * x + y * y + one) / (y + jet<di>(2, 1, di(3.0)));
    };
    auto gp = [](double x, double y) { return std::sqrt(x * x + y * y + 1.0) / (y + 3.0); };
    double x0 = 0.7, y0 = -0.4;
    jet<di> j = g(jet<di>::variable(2, 1, 0, di(x0)), jet<di>::variable(2, 1, 1, di(y0)));
    for (double h : {1e-4, 1e-5}) {
        double dx = (gp(x0 + h, y0) - gp(x0 - h, y0)) / (2 * h);
        double dy = (gp(x0, y0 + h) - gp(x0, y0 - h)) / (2 * h);
        CHECK(j.partial({1, 0}).inflated(h * h * 10).contains(dx));
        CHECK(j.partial({0, 1}).inflated(h * h * 10).contains(dy));
    }
}

TEST_CASE("pown on jets matches repeated multiplication") {
    jet<di> x = jet<di>::variable(1, 3, 0, di(2.0));
    jet<di> p = pown(x, 3);
    CHECK(p.value().contains(8.0));
    CHECK(p.partial({1}).contains(12.0));
    CHECK(p.partial({2}).contains(12.0));
    CHECK(p.partial({3}).contains(6.0));
    jet<di> pm = pown(x, -2);
    CHECK(pm.value().contains(0.25));
    CHECK(pm.partial({1}).contains(-0.25));
}

TEST_CASE("extended precision jets tighten enclosures") {
    jet<xi> x = jet<xi>::variable(1, 3, 0, xi(2.0));
    jet<xi> f = sqrt(x * x * x);
    jet<di> xd = jet<di>::variable(1, 3, 0, di(2.0));
    jet<di> fd = sqrt(xd * xd * xd);
    for (std::size_t i = 0; i < f.size(); ++i) {
        CHECK(extp::to_double(f[i].width()) <= fd[i].width_d());
        // the extended enclosure must sit inside the binary64 one
        CHECK(extp::to_double(f[i].lo()) >= fd[i].lo());
        CHECK(extp::to_double(f[i].hi()) <= fd[i].hi());
    }
}
