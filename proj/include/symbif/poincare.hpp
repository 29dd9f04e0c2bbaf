// Validated Poincare maps: certified section crossings via interval Newton on
// the per-step Taylor polynomials, and return-map derivatives to degree 3 by
// implicit differentiation of the section identity.

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "symbif/odeint.hpp"

namespace symbif {

struct no_crossing : std::runtime_error {
    no_crossing() : std::runtime_error("trajectory does not reach the section") {}
};

struct tangency_suspected : std::runtime_error {
    tangency_suspected()
        : std::runtime_error("transversality enclosure contains zero at a bracketed crossing") {}
};

// hyperplane section <normal, x> = offset over the state coordinates
struct section {
    std::vector<double> normal;
    double offset = 0.0;
    int direction = 0; // +1: l increasing through 0, -1: decreasing, 0: either
    int k = 1;         // number of crossings the map composes

    static section coordinate(int dim, int coord, double offset = 0.0, int direction = 0,
                              int k = 1) {
        section s;
        s.normal.assign(std::size_t(dim), 0.0);
        s.normal[std::size_t(coord)] = 1.0;
        s.offset = offset;
        s.direction = direction;
        s.k = k;
        return s;
    }
};

namespace detail {

template <class V>
auto section_dot(const section& sec, const V& x) {
    auto acc = ring_const(x[0], 0.0);
    for (std::size_t i = 0; i < sec.normal.size(); ++i)
        if (sec.normal[i] != 0.0) acc = acc + ring_const(x[0], sec.normal[i]) * x[i];
    return acc;
}

template <class V>
auto section_value(const section& sec, const V& x) {
    return section_dot(sec, x) - ring_const(x[0], sec.offset);
}

// certified sign of l over a box: +1 / -1 when decisive, 0 when ambiguous
template <class P, class V>
int section_sign(const section& sec, const V& x) {
    interval<P> v = section_value(sec, x);
    if (v.strictly_positive()) return +1;
    if ((-v).strictly_positive()) return -1;
    return 0;
}

inline signed_perm inverse(const signed_perm& r) {
    signed_perm inv;
    inv.perm.resize(r.perm.size());
    inv.sign.resize(r.sign.size());
    inv.time_reversing = r.time_reversing;
    for (std::size_t i = 0; i < r.perm.size(); ++i) {
        inv.perm[std::size_t(r.perm[i])] = int(i);
        inv.sign[std::size_t(r.perm[i])] = r.sign[i];
    }
    return inv;
}

// interval Newton for the local crossing time of g(t) = l(p(t)) on [0, h].
// cf holds the Taylor coefficients at the window entry (last entry is the
// Lagrange coefficient over B); `before` is the certified sign at t = 0.
// Bisects while signs stay decisive, then contracts with Newton; nullopt when
// the iteration loses the crossing (caller treats the window as not crossing).
template <class P, class CF, class BV>
std::optional<interval<P>> section_newton(const program& aug, const section& sec, const CF& cf,
                                          const BV& rough, double h, int before) {
    using I = interval<P>;
    const std::size_t n = rough.size();
    std::vector<I> B(n);
    for (std::size_t i = 0; i < n; ++i) B[i] = rough[i];
    auto poly = [&](const I& t) {
        std::vector<I> acc(n);
        for (std::size_t i = 0; i < n; ++i) acc[i] = cf.back()[i];
        for (std::size_t k = cf.size() - 1; k-- > 0;)
            for (std::size_t i = 0; i < n; ++i) acc[i] = cf[k][i] + t * acc[i];
        return acc;
    };
    auto gval = [&](const I& t) { return section_value(sec, poly(t)); };
    auto gder = [&](const I& t) {
        auto p = poly(t);
        // clip to the rough enclosure: tighter, and keeps sqrt/div domains valid
        for (std::size_t i = 0; i < n; ++i)
            if (auto m = meet(p[i], B[i])) p[i] = *m;
        return section_dot(sec, eval_program(aug, p, {}));
    };

    double a = 0, b = h;
    for (int it = 0; it < 40 && b - a > 1e-3 * h; ++it) {
        double mid = 0.5 * (a + b);
        I v = gval(I(mid));
        if (v.strictly_positive())
            (before > 0 ? a : b) = mid;
        else if ((-v).strictly_positive())
            (before < 0 ? a : b) = mid;
        else
            break;
    }
    I t(a, b);
    for (int it = 0; it < 80; ++it) {
        I gd = gder(t);
        if (gd.contains_zero()) return std::nullopt;
        I m(t.mid());
        auto mt = meet(m - gval(m) / gd, t);
        if (!mt) return std::nullopt;
        bool progress = mt->width_d() < t.width_d() * 0.999;
        t = *mt;
        if (!progress) break;
    }
    return t;
}

} // namespace detail

// crossing time of the recorded trajectory with the section: brackets by the
// certified sign of l on step exit boxes, then runs interval Newton inside the
// bracketing step(s)
template <class P>
interval<P> crossing_time(const vector_field& f, const std::vector<solution_step<P>>& steps,
                          const section& sec) {
    using I = interval<P>;
    if (steps.empty()) throw no_crossing();
    program aug = detail::augment(f);

    int anchor_sign = detail::section_sign<P>(sec, steps.front().entry);
    bool have = anchor_sign != 0;
    I elapsed(0.0);        // time at the entry of the current step
    I anchor_t(0.0);       // time at the anchor (last decisive sign)
    std::size_t window_begin = 0;

    for (std::size_t j = 0; j < steps.size(); ++j) {
        const auto& s = steps[j];
        int es = detail::section_sign<P>(sec, s.exit);
        bool flip = have && es != 0 && es != anchor_sign &&
                    (sec.direction == 0 || es == sec.direction);
        if (flip) {
            std::optional<I> tau;
            I t_entry = anchor_t;
            for (std::size_t w = window_begin; w <= j; ++w) {
                const auto& sw = steps[w];
                if (detail::section_value(sec, sw.rough).contains_zero()) {
                    auto fB = eval_program(aug, std::vector<I>(sw.rough.begin(), sw.rough.end()), {});
                    if (detail::section_dot(sec, fB).contains_zero()) throw tangency_suspected();
                    auto tl = detail::section_newton<P>(aug, sec, sw.coeffs, sw.rough, sw.h,
                                                       anchor_sign);
                    if (tl) {
                        I cand = t_entry + *tl;
                        tau = tau ? hull(*tau, cand) : cand;
                    }
                }
                t_entry = t_entry + I(sw.h);
            }
            if (!tau) throw validation_failed("bracketed crossing not localized by Newton");
            return *tau;
        }
        elapsed = elapsed + I(s.h);
        if (es != 0) {
            anchor_sign = es;
            have = true;
            anchor_t = elapsed;
            window_begin = j + 1;
        }
    }
    throw no_crossing();
}

template <class P>
struct poincare_result {
    interval<P> tau;                    // total return time over all k crossings
    ivec<P> image;                      // augmented image box (state, parameters)
    imat<P> first;                      // d image / d (state, parameters)
    std::vector<jet<interval<P>>> full; // image jets to the requested degree
    int crossings = 0;
};

namespace detail {

template <class P>
struct leg_result {
    interval<P> tau;
    ivec<P> image;
    imat<P> first;
    std::vector<jet<interval<P>>> full;
};

// one certified crossing: advance until the sign of l on the hull flips in
// the admissible direction, then solve the section identity from the last
// decisive state (the anchor), both in interval and jet arithmetic
template <class P>
leg_result<P> poincare_leg(const integrator<P>& eng, const section& sec, const ivec<P>& x0,
                           const ivec<P>& nu, int jdeg, double t_max) {
    using I = interval<P>;
    using J = jet<I>;
    const odeint_options& opt = eng.options();
    const program& aug = eng.augmented();
    const int n = eng.field().n, m = eng.field().m, N = n + m;

    auto st = eng.init(x0, nu, jdeg);
    auto anchor = st;
    int anchor_sign = detail::section_sign<P>(sec, eng.hull(st));
    bool have = anchor_sign != 0;
    double damp = 1.0; // remembered step-rejection ratio, as in advance()
    for (;;) {
        if (P::to_double(st.ti.hi()) > t_max) throw no_crossing();
        double h = std::max(opt.h_min, eng.suggest_step(st) * damp);
        double took = eng.step_with_retries(st, h);
        damp = std::min(1.0, damp * (took < h ? took / h : 1.25));
        int s = detail::section_sign<P>(sec, eng.hull(st));
        if (s == 0) continue;
        if (have && s != anchor_sign && (sec.direction == 0 || s == sec.direction)) break;
        anchor = st;
        anchor_sign = s;
        have = true;
    }

    I win = st.ti - anchor.ti;
    double h_win = P::to_double(win.hi());
    ivec<P> Xa = eng.hull(anchor);
    std::vector<I> xs(Xa.begin(), Xa.end());
    I h01(P::from_double(0.0), win.hi());
    auto B = rough_enclosure<I, I>(aug, xs, {}, h01);
    I gp = detail::section_dot(sec, eval_program(aug, B, {}));
    if (gp.contains_zero()) throw tangency_suspected();

    auto cc = taylor_coeffs<I>(aug, xs, {}, opt.order);
    cc.push_back(taylor_coeffs<I>(aug, B, {}, opt.order + 1).back());
    auto tl = detail::section_newton<P>(aug, sec, cc, B, h_win, anchor_sign);
    if (!tl) throw validation_failed("section crossing not localized by Newton");
    I tloc = *tl;

    // image box first: it pins the crossing tightly, so the transversality
    // enclosure taken there is far narrower than over the whole rough window
    leg_result<P> leg;
    leg.tau = anchor.ti + tloc;
    leg.image = ivec<P>(xs.size());
    {
        std::vector<I> acc(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) acc[i] = cc.back()[i];
        for (std::size_t k = cc.size() - 1; k-- > 0;)
            for (std::size_t i = 0; i < xs.size(); ++i) acc[i] = cc[k][i] + tloc * acc[i];
        for (int i = 0; i < n; ++i) leg.image[std::size_t(i)] = acc[std::size_t(i)];
        for (int i = 0; i < m; ++i) leg.image[std::size_t(n + i)] = nu[std::size_t(i)];
    }
    std::vector<I> yv(leg.image.begin(), leg.image.end());
    auto Fy = eval_program(aug, yv, {});
    I sig = detail::section_dot(sec, Fy);
    if (sig.contains_zero()) throw tangency_suspected();

    // flow jets at the anchor, then local-time Taylor coefficients over the
    // jet ring with the Lagrange coefficient over a jet rough enclosure
    auto W = eng.result(anchor, anchor.ti).full;
    auto jc = taylor_coeffs<J>(aug, W, {}, opt.jet_order);
    jc.push_back(taylor_coeffs<J>(aug, rough_enclosure<J, J>(aug, W, {}, J(N, jdeg, h01)),
                                  {}, opt.jet_order + 1)
                     .back());
    auto horner_jets = [&](const J& hj) {
        std::vector<J> acc = jc.back();
        for (std::size_t k = jc.size() - 1; k-- > 0;)
            for (int i = 0; i < N; ++i) acc[std::size_t(i)] = jc[k][std::size_t(i)] + hj * acc[std::size_t(i)];
        return acc;
    };

    // crossing-time jet from l(Phi(d, x)) = 0, solved order by order: at order
    // q the unknown coefficient enters linearly with a factor enclosed by sig,
    // so one interval division per coefficient
    J d(N, jdeg, tloc);
    const auto& tabs = detail::jet_tables::get(N, jdeg);
    for (int q = 1; q <= jdeg; ++q) {
        J E = detail::section_value(sec, horner_jets(d));
        for (std::size_t idx = 1; idx < tabs.exps.size(); ++idx) {
            int deg = 0;
            for (int v = 0; v < N; ++v) deg += tabs.exps[idx][std::size_t(v)];
            if (deg == q) d[idx] = d[idx] - E[idx] / sig;
        }
    }

    auto Pjets = horner_jets(d);
    // parameters are exactly constant along the flow
    for (int i = 0; i < m; ++i)
        Pjets[std::size_t(n + i)] = J::variable(N, jdeg, n + i, nu[std::size_t(i)]);

    // tighten the jet value slots with the interval-ring image
    for (int i = 0; i < n; ++i) {
        auto mt = meet(leg.image[std::size_t(i)], Pjets[std::size_t(i)].value());
        if (!mt) throw validation_failed("image enclosures disagree");
        leg.image[std::size_t(i)] = *mt;
        Pjets[std::size_t(i)][0] = *mt;
    }

    // first order: intersect the jet coefficients with the projection formula
    // DP = (I - F(y) grad(l)^T / <grad(l), F(y)>) DPhi at the crossing
    {
        auto phiT = horner_jets(J(N, jdeg, tloc));
        leg.first = imat<P>(std::size_t(N), std::size_t(N));
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                I dphi(0.0);
                for (int l = 0; l < N; ++l) {
                    I proj = (i == l) ? I(1.0) : I(0.0);
                    if (std::size_t(l) < sec.normal.size() && sec.normal[std::size_t(l)] != 0.0)
                        proj = proj - Fy[std::size_t(i)] * I(sec.normal[std::size_t(l)]) / sig;
                    dphi = dphi + proj * phiT[std::size_t(l)][std::size_t(1 + j)];
                }
                auto mt = meet(dphi, Pjets[std::size_t(i)][std::size_t(1 + j)]);
                if (!mt) throw validation_failed("derivative enclosures disagree");
                leg.first(std::size_t(i), std::size_t(j)) = *mt;
                Pjets[std::size_t(i)][std::size_t(1 + j)] = *mt;
            }
    }
    leg.full = std::move(Pjets);
    return leg;
}

} // namespace detail

// the k-th return map of the section: image box, return time, and derivatives
// to `degree` with respect to (state, parameters); intermediate crossings are
// re-based on their image boxes and the jets chained by composition
template <class P>
poincare_result<P> poincare_map(const vector_field& f, const section& sec, const ivec<P>& x,
                                const ivec<P>& nu, int degree, odeint_options opt = {},
                                double t_max = 100.0) {
    using I = interval<P>;
    using J = jet<I>;
    const int n = f.n, m = f.m, N = n + m;
    const int jdeg = std::max(1, degree);
    integrator<P> eng(f, opt);

    poincare_result<P> out;
    ivec<P> seed = x;
    for (int c = 0; c < sec.k; ++c) {
        auto leg = detail::poincare_leg<P>(eng, sec, seed, nu, jdeg, t_max);
        if (c == 0) {
            out.tau = leg.tau;
            out.image = leg.image;
            out.first = leg.first;
            out.full = std::move(leg.full);
        } else {
            out.tau = out.tau + leg.tau;
            out.image = leg.image;
            const std::size_t uN = std::size_t(N);
            std::vector<J> comp(uN);
            for (int i = 0; i < N; ++i) comp[std::size_t(i)] = jet_compose(leg.full[std::size_t(i)], out.full);
            imat<P> fst = leg.first * out.first;
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j) {
                    auto mt = meet(fst(std::size_t(i), std::size_t(j)),
                                   comp[std::size_t(i)][std::size_t(1 + j)]);
                    if (!mt) throw validation_failed("chained derivative enclosures disagree");
                    fst(std::size_t(i), std::size_t(j)) = *mt;
                    comp[std::size_t(i)][std::size_t(1 + j)] = *mt;
                }
            out.first = std::move(fst);
            out.full = std::move(comp);
        }
        out.crossings = c + 1;
        seed = ivec<P>(std::size_t(n));
        for (int i = 0; i < n; ++i) seed[std::size_t(i)] = out.image[std::size_t(i)];
    }
    return out;
}

// enclosure of R^{-1}(P(R(P(x)))) - x; contains zero for genuinely reversible
// data, so it doubles as an integration-quality diagnostic
template <class P>
ivec<P> reversibility_defect(const vector_field& f, const section& sec, const signed_perm& r,
                             const ivec<P>& x, const ivec<P>& nu, odeint_options opt = {},
                             double t_max = 100.0) {
    const int n = f.n;
    const std::size_t un = std::size_t(n);
    auto p1 = poincare_map<P>(f, sec, x, nu, 1, opt, t_max);
    ivec<P> y1(un);
    for (int i = 0; i < n; ++i) y1[std::size_t(i)] = p1.image[std::size_t(i)];
    auto p2 = poincare_map<P>(f, sec, r.apply(y1), nu, 1, opt, t_max);
    ivec<P> y3(un);
    for (int i = 0; i < n; ++i) y3[std::size_t(i)] = p2.image[std::size_t(i)];
    return detail::inverse(r).apply(y3) - x;
}

} // namespace symbif
