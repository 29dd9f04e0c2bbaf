// Validated Taylor-method integration with Lohner-style wrapping control,
// variational jets to degree 3, and a nonrigorous point-arithmetic twin.

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "symbif/interval.hpp"
#include "symbif/jet.hpp"
#include "symbif/linalg.hpp"
#include "symbif/tape.hpp"

namespace symbif {

namespace detail {

// containment helpers shared by interval and jet-of-interval rings
template <class R>
bool ring_subset(const R& a, const R& b) {
    if constexpr (requires { a.size(); }) {
        for (std::size_t i = 0; i < a.size(); ++i)
            if (!a[i].subset_of(b[i])) return false;
        return true;
    } else {
        return a.subset_of(b);
    }
}

template <class R>
R ring_hull(const R& a, const R& b) {
    if constexpr (requires { a.size(); }) {
        R r = a;
        for (std::size_t i = 0; i < a.size(); ++i) r[i] = hull(a[i], b[i]);
        return r;
    } else {
        return hull(a, b);
    }
}

template <class R>
R ring_inflate(const R& a, double abs_eps, double rel_eps) {
    if constexpr (requires { a.size(); }) {
        R r = a;
        for (std::size_t i = 0; i < a.size(); ++i)
            r[i] = a[i].inflated(abs_eps + rel_eps * a[i].width_d());
        return r;
    } else {
        return a.inflated(abs_eps + rel_eps * a.width_d());
    }
}

} // namespace detail

// Taylor coefficients of the solution through x0: result[k][i] encloses
// x_i^(k)(0)/k!. Works over any coefficient ring (intervals, jets, doubles).
template <class R>
std::vector<std::vector<R>> taylor_coeffs(const program& rhs, const std::vector<R>& x0,
                                          const std::vector<R>& params, int s) {
    const std::size_t n = x0.size();
    const std::size_t nops = rhs.ops.size();
    const R& like = x0.at(0);
    const R zero = ring_const(like, 0.0);
    const R two = ring_const(like, 2.0);

    std::vector<std::vector<R>> x(std::size_t(s) + 1, std::vector<R>(n, zero));
    x[0] = x0;
    // node coefficient table, filled order by order
    std::vector<std::vector<R>> nc(nops);

    for (int k = 0; k <= s; ++k) {
        const std::size_t uk = std::size_t(k);
        for (std::size_t oi = 0; oi < nops; ++oi) {
            const tape_op& op = rhs.ops[oi];
            auto& c = nc[oi];
            R v = zero;
            switch (op.kind) {
                case op_kind::konst: v = (k == 0) ? ring_const(like, op.cval) : zero; break;
                case op_kind::var: v = x[uk][std::size_t(op.a)]; break;
                case op_kind::param: v = (k == 0) ? params[std::size_t(op.a)] : zero; break;
                case op_kind::add: v = nc[std::size_t(op.a)][uk] + nc[std::size_t(op.b)][uk]; break;
                case op_kind::sub: v = nc[std::size_t(op.a)][uk] - nc[std::size_t(op.b)][uk]; break;
                case op_kind::neg: v = -nc[std::size_t(op.a)][uk]; break;
                case op_kind::mul: {
                    const auto& a = nc[std::size_t(op.a)];
                    const auto& b = nc[std::size_t(op.b)];
                    for (int j = 0; j <= k; ++j) v += a[std::size_t(j)] * b[uk - std::size_t(j)];
                    break;
                }
                case op_kind::sqr_op: {
                    const auto& a = nc[std::size_t(op.a)];
                    for (int j = 0; j <= k; ++j) v += a[std::size_t(j)] * a[uk - std::size_t(j)];
                    break;
                }
                case op_kind::div: {
                    const auto& a = nc[std::size_t(op.a)];
                    const auto& b = nc[std::size_t(op.b)];
                    v = a[uk];
                    for (int j = 0; j < k; ++j) v -= c[std::size_t(j)] * b[uk - std::size_t(j)];
                    v = v / b[0];
                    break;
                }
                case op_kind::sqrt_op: {
                    const auto& a = nc[std::size_t(op.a)];
                    if (k == 0) {
                        using std::sqrt;
                        v = sqrt(a[0]);
                    } else {
                        v = a[uk];
                        for (int j = 1; j < k; ++j) v -= c[std::size_t(j)] * c[uk - std::size_t(j)];
                        v = v / (two * c[0]);
                    }
                    break;
                }
            }
            c.push_back(v);
        }
        if (k < s) {
            // x^{(k+1)}/(k+1)! = F_k / (k+1)
            R div = ring_const(like, double(k + 1));
            for (std::size_t i = 0; i < n; ++i)
                x[uk + 1][i] = nc[std::size_t(rhs.outputs[i])][uk] / div;
        }
    }
    return x;
}

// first-order Picard rough enclosure: returns B with x + [0,h] F(B) ⊆ B
template <class C, class R>
std::vector<R> rough_enclosure(const program& rhs, const std::vector<R>& x,
                               const std::vector<R>& params, const C& h01, int max_attempts = 12) {
    std::vector<R> b = x;
    for (auto& bi : b) bi = detail::ring_inflate(bi, 1e-14, 0.1);
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        auto f = eval_program(rhs, b, params);
        std::vector<R> cand(x.size());
        bool ok = true;
        for (std::size_t i = 0; i < x.size(); ++i) {
            cand[i] = x[i] + h01 * f[i];
            if (!detail::ring_subset(cand[i], b[i])) ok = false;
        }
        if (ok) return b;
        // restart the Picard iteration from the inflated candidate; hulling
        // with the previous box keeps marginal failures tied forever
        for (std::size_t i = 0; i < x.size(); ++i)
            b[i] = detail::ring_inflate(cand[i], 1e-14, 0.1);
    }
    throw validation_failed("rough enclosure did not stabilize; reduce the step");
}

struct odeint_options {
    int order = 20;      // Taylor order of the certified C^0 step
    int jet_order = 14;  // Taylor order used for variational jets
    double tol = 1e-12;  // per-step local error target
    double h_min = 1e-8;
    double h_max = 0.5;
    int max_steps = 200000;
    bool record_steps = false;
};

template <class P>
struct solution_step {
    double t0 = 0, h = 0;
    ivec<P> entry, exit, rough;
    // interval Taylor coefficients over the entry hull, orders 0..s,
    // with the Lagrange coefficient over `rough` at index s+1
    std::vector<ivec<P>> coeffs;
};

// set representation c + C r0 + Q r (doubleton with QR-controlled local frame)
template <class P>
struct lohner_set {
    using real = typename P::real;
    vec<real> c;
    mat<real> C;
    ivec<P> r0;
    mat<real> Q;
    ivec<P> r;

    static lohner_set from_box(const ivec<P>& x) {
        const std::size_t n = x.size();
        lohner_set s;
        s.c = mid<P>(x);
        s.C = mat<real>::identity(n);
        s.r0 = ivec<P>(n);
        for (std::size_t i = 0; i < n; ++i) r0_entry(s.r0[i], x[i], s.c[i]);
        s.Q = mat<real>::identity(n);
        s.r = ivec<P>(n);
        return s;
    }

    static lohner_set point_column(const vec<real>& v) {
        const std::size_t n = v.size();
        lohner_set s;
        s.c = v;
        s.C = mat<real>(n, 0);
        s.r0 = ivec<P>(0);
        s.Q = mat<real>::identity(n);
        s.r = ivec<P>(n);
        return s;
    }

    ivec<P> hull() const {
        ivec<P> h = to_ivec<P>(c) + to_imat<P>(Q) * r;
        if (r0.size() > 0) h = h + to_imat<P>(C) * r0;
        return h;
    }

private:
    static void r0_entry(interval<P>& out, const interval<P>& x, const real& m) {
        out = x - interval<P>(m, m);
    }
};

// new set = z + J (C r0 + Q r), re-centered and re-framed
template <class P>
void lohner_update(lohner_set<P>& s, const imat<P>& J, const ivec<P>& z) {
    using real = typename P::real;
    const std::size_t n = s.c.size();
    vec<real> cn(n);
    ivec<P> u(n);
    for (std::size_t i = 0; i < n; ++i) {
        cn[i] = z[i].mid();
        u[i] = z[i] - interval<P>(cn[i], cn[i]);
    }
    if (s.r0.size() > 0) {
        imat<P> JC = J * to_imat<P>(s.C);
        mat<real> Cn = mid<P>(JC);
        imat<P> resid = JC - to_imat<P>(Cn);
        u = u + resid * s.r0;
        s.C = std::move(Cn);
    }
    imat<P> M = J * to_imat<P>(s.Q);
    mat<real> Qn = qr_frame(mid<P>(M));
    auto Qinv = iinverse<P>(Qn);
    if (!Qinv) {
        Qn = mat<real>::identity(n);
        Qinv = iinverse<P>(Qn);
    }
    s.r = (*Qinv * M) * s.r + *Qinv * u;
    s.Q = std::move(Qn);
    s.c = std::move(cn);
}

template <class P>
struct flow_jet {
    interval<P> t;
    ivec<P> value;
    imat<P> first;                      // d phi / d(initial state, parameters)
    std::vector<jet<interval<P>>> full; // per component, degree r, all orders filled
};

namespace detail {

// rewrite a parameterized field as an autonomous program over the augmented
// state (x, nu) with nu' = 0
inline program augment(const vector_field& f) {
    program p = f.rhs;
    p.nstate = f.n + f.m;
    p.nparam = 0;
    for (auto& op : p.ops)
        if (op.kind == op_kind::param) {
            op.kind = op_kind::var;
            op.a += f.n;
        }
    tape_op zero{op_kind::konst};
    p.ops.push_back(zero);
    for (int i = 0; i < f.m; ++i) p.outputs.push_back(int(p.ops.size()) - 1);
    return p;
}

// process-wide accepted-step tally, for performance diagnostics only
inline long& step_counter() {
    static long n = 0;
    return n;
}

template <class R, class C>
std::vector<R> horner(const std::vector<std::vector<R>>& coeffs, const std::vector<R>& rem, const C& h) {
    const std::size_t n = coeffs[0].size();
    std::vector<R> acc = rem;
    for (std::size_t k = coeffs.size(); k-- > 0;) {
        for (std::size_t i = 0; i < n; ++i) acc[i] = coeffs[k][i] + h * acc[i];
    }
    return acc;
}

} // namespace detail

template <class P>
class integrator {
public:
    using I = interval<P>;
    using real = typename P::real;
    using J = jet<I>;

    struct state {
        lohner_set<P> x;                 // C^0 set over the augmented space
        std::vector<lohner_set<P>> v;    // columns of D phi
        std::vector<J> hi;               // orders >= 2 of the flow jet (orders 0..1 kept zero)
        int degree = 1;
        long nsteps = 0;     // accepted steps, for diagnostics
        double t = 0;        // step bookkeeping only
        interval<P> ti;      // rigorous enclosure of the elapsed time
        std::vector<solution_step<P>> steps;
    };

    integrator(const vector_field& f, odeint_options opt = {})
        : field_(f), aug_(detail::augment(f)), N_(f.n + f.m), opt_(opt) {}

    int dim() const { return N_; }
    const odeint_options& options() const { return opt_; }
    const vector_field& field() const { return field_; }
    const program& augmented() const { return aug_; }

    state init(const ivec<P>& x0, const ivec<P>& nu, int degree) const {
        state st;
        st.degree = degree;
        st.ti = I(0.0);
        ivec<P> a(un());
        for (int i = 0; i < field_.n; ++i) a[std::size_t(i)] = x0[std::size_t(i)];
        for (int i = 0; i < field_.m; ++i) a[std::size_t(field_.n + i)] = nu[std::size_t(i)];
        st.x = lohner_set<P>::from_box(a);
        if (degree >= 1) {
            st.v.reserve(un());
            for (int cidx = 0; cidx < N_; ++cidx) {
                vec<real> e(un());
                e[std::size_t(cidx)] = P::from_double(1.0);
                st.v.push_back(lohner_set<P>::point_column(e));
            }
        }
        if (degree >= 2) st.hi.assign(un(), J(N_, degree));
        return st;
    }

    ivec<P> hull(const state& st) const { return st.x.hull(); }

    imat<P> first(const state& st) const {
        imat<P> m(un(), un());
        for (int cidx = 0; cidx < N_; ++cidx) {
            ivec<P> h = st.v[std::size_t(cidx)].hull();
            for (int i = 0; i < N_; ++i) m(std::size_t(i), std::size_t(cidx)) = h[std::size_t(i)];
        }
        return m;
    }

    double suggest_step(const state& st) const {
        vec<real> c = st.x.c;
        std::vector<I> pc(c.begin(), c.end());
        auto coeffs = taylor_coeffs<I>(aug_, pc, {}, opt_.order);
        double top = 0;
        for (int i = 0; i < N_; ++i)
            top = std::max(top, P::to_double(coeffs[std::size_t(opt_.order)][std::size_t(i)].mag()));
        if (top <= 0) return opt_.h_max;
        double h = std::pow(opt_.tol / top, 1.0 / opt_.order);
        return std::min(std::max(h, opt_.h_min), opt_.h_max);
    }

    // one certified step of size h (h.hi used for validation; h may be a
    // point interval for interior steps or a genuine interval for the final one)
    void step(state& st, const I& h) const {
        const double h_hi = P::to_double(h.hi());
        ivec<P> X = st.x.hull();
        std::vector<I> xs(X.begin(), X.end());

        I h01(P::from_double(0), h.hi());
        auto B = rough_enclosure<I, I>(aug_, xs, {}, h01);

        // center image
        std::vector<I> pc(st.x.c.begin(), st.x.c.end());
        auto cc = taylor_coeffs<I>(aug_, pc, {}, opt_.order);
        auto cB = taylor_coeffs<I>(aug_, B, {}, opt_.order + 1);
        std::vector<I> z = detail::horner(cc, cB[std::size_t(opt_.order) + 1], h);

        // step-map jet over the entry hull
        int jdeg = std::max(1, st.degree);
        std::vector<J> id(un());
        for (int i = 0; i < N_; ++i) id[std::size_t(i)] = J::variable(N_, jdeg, i, xs[std::size_t(i)]);
        auto jc = taylor_coeffs<J>(aug_, id, {}, opt_.jet_order);
        J h01j(N_, jdeg, h01);
        auto Bj = rough_enclosure<J, J>(aug_, id, {}, h01j);
        auto jB = taylor_coeffs<J>(aug_, Bj, {}, opt_.jet_order + 1);
        J hj(N_, jdeg, h);
        std::vector<J> S(un(), J(N_, jdeg));
        {
            std::vector<J> acc = jB[std::size_t(opt_.jet_order) + 1];
            for (std::size_t k = std::size_t(opt_.jet_order) + 1; k-- > 0;) {
                for (int i = 0; i < N_; ++i)
                    acc[std::size_t(i)] = jc[k][std::size_t(i)] + hj * acc[std::size_t(i)];
            }
            S = std::move(acc);
        }

        imat<P> Jm(un(), un());
        for (int i = 0; i < N_; ++i)
            for (int j = 0; j < N_; ++j)
                Jm(std::size_t(i), std::size_t(j)) = jet_first_coeff(S[std::size_t(i)], j);

        if (opt_.record_steps) {
            solution_step<P> rec;
            rec.t0 = st.t;
            rec.h = h_hi;
            rec.entry = X;
            rec.rough = ivec<P>(un());
            for (int i = 0; i < N_; ++i) rec.rough[std::size_t(i)] = B[std::size_t(i)];
            auto ci = taylor_coeffs<I>(aug_, xs, {}, opt_.order);
            rec.coeffs.reserve(std::size_t(opt_.order) + 2);
            for (auto& row : ci) {
                ivec<P> v(un());
                for (int i = 0; i < N_; ++i) v[std::size_t(i)] = row[std::size_t(i)];
                rec.coeffs.push_back(std::move(v));
            }
            {
                ivec<P> v(un());
                for (int i = 0; i < N_; ++i)
                    v[std::size_t(i)] = cB[std::size_t(opt_.order) + 1][std::size_t(i)];
                rec.coeffs.push_back(std::move(v));
            }
            st.steps.push_back(std::move(rec));
        }

        // derivative hulls at step entry, needed by the order >= 2 composition
        imat<P> V(0, 0);
        if (st.degree >= 2) V = first(st);

        // C^0 doubleton update
        ivec<P> zv(un());
        for (int i = 0; i < N_; ++i) zv[std::size_t(i)] = z[std::size_t(i)];
        lohner_update(st.x, Jm, zv);

        // first-order columns
        for (auto& col : st.v) {
            ivec<P> zc = Jm * to_ivec<P>(col.c);
            lohner_update(col, Jm, zc);
        }

        // orders 2..degree via jet composition
        if (st.degree >= 2) {
            std::vector<J> inner(un(), J(N_, st.degree));
            for (int i = 0; i < N_; ++i) {
                J& gi = inner[std::size_t(i)];
                gi = st.hi[std::size_t(i)];
                for (int j = 0; j < N_; ++j) set_first_coeff(gi, j, V(std::size_t(i), std::size_t(j)));
            }
            std::vector<J> outer = S;
            std::vector<J> nhi(un());
            for (int i = 0; i < N_; ++i) {
                J comp = jet_compose(outer[std::size_t(i)], inner);
                // keep only orders >= 2
                zero_low_orders(comp);
                nhi[std::size_t(i)] = std::move(comp);
            }
            st.hi = std::move(nhi);
        }

        if (opt_.record_steps) {
            ivec<P> ex = st.x.hull();
            st.steps.back().exit = ex;
        }
        st.t += h_hi;
        st.ti = st.ti + h;
        ++st.nsteps;
        ++detail::step_counter();
    }

    // advance so the final hull is valid for every time in T; the elapsed
    // time is tracked as an interval so the final step size T - t stays
    // rigorous no matter how many rounded additions preceded it
    void advance(state& st, const I& T) const {
        double t_end = P::to_double(T.lo());
        int guard = 0;
        // the step suggestion only sees the set center, so for wide sets the
        // validated step can be persistently smaller; remember the rejection
        // ratio instead of rediscovering it by halving on every step
        double damp = 1.0;
        while (P::to_double(st.ti.hi()) < t_end) {
            if (++guard > opt_.max_steps) throw validation_failed("max step count exceeded");
            double h = std::max(opt_.h_min, suggest_step(st) * damp);
            double t_hi = P::to_double(st.ti.hi());
            if (t_hi + h >= t_end) {
                // final step covers the full time interval T - t
                I hf = T - st.ti;
                try {
                    step(st, hf);
                    return;
                } catch (const validation_failed&) {
                    double half = (t_end - t_hi) / 2;
                    if (half < opt_.h_min) throw;
                    step_with_retries(st, half);
                    continue;
                } catch (const invalid_interval&) {
                    // a domain violation (e.g. sqrt) on a trial box is a
                    // validation failure: retry with a smaller step
                    double half = (t_end - t_hi) / 2;
                    if (half < opt_.h_min) throw;
                    step_with_retries(st, half);
                    continue;
                }
            }
            double took = step_with_retries(st, h);
            damp = std::min(1.0, damp * (took < h ? took / h : 1.25));
        }
    }

    flow_jet<P> result(const state& st, const I& T) const {
        flow_jet<P> out;
        out.t = T;
        out.value = st.x.hull();
        if (st.degree >= 1) out.first = first(st);
        if (st.degree >= 1) {
            out.full.assign(un(), J(N_, st.degree));
            for (int i = 0; i < N_; ++i) {
                J& f = out.full[std::size_t(i)];
                if (st.degree >= 2) f = st.hi[std::size_t(i)];
                f[0] = out.value[std::size_t(i)];
                for (int j = 0; j < N_; ++j) set_first_coeff(f, j, out.first(std::size_t(i), std::size_t(j)));
            }
        }
        return out;
    }

    // returns the step size actually taken after halving retries
    double step_with_retries(state& st, double h) const {
        for (;;) {
            try {
                step(st, I(h));
                return h;
            } catch (const validation_failed&) {
                h *= 0.5;
                if (h < opt_.h_min) throw;
            } catch (const invalid_interval&) {
                h *= 0.5;
                if (h < opt_.h_min) throw;
            }
        }
    }

private:
    // first-order coefficient access without building initializer lists per dim
    std::size_t un() const { return std::size_t(N_); }
    static I jet_first_coeff(const J& s, int var) { return s[std::size_t(1 + var)]; }
    static void set_first_coeff(J& s, int var, const I& v) { s[std::size_t(1 + var)] = v; }
    static void zero_low_orders(J& s) {
        s[0] = I(0.0);
        int n = s.nvars();
        for (int j = 0; j < n; ++j) s[std::size_t(1 + j)] = I(0.0);
    }

    vector_field field_;
    program aug_;
    int N_;
    odeint_options opt_;
};

// chained certified C^0 integration; returns recorded steps with the final
// box as the exit of the last step
template <class P>
std::vector<solution_step<P>> integrate(const vector_field& f, const ivec<P>& x0, const ivec<P>& nu,
                                        const interval<P>& T, odeint_options opt = {}) {
    opt.record_steps = true;
    integrator<P> eng(f, opt);
    auto st = eng.init(x0, nu, 1);
    eng.advance(st, T);
    return std::move(st.steps);
}

template <class P>
flow_jet<P> integrate_variational(const vector_field& f, const ivec<P>& x0, const ivec<P>& nu,
                                  const interval<P>& T, int degree, odeint_options opt = {}) {
    integrator<P> eng(f, opt);
    auto st = eng.init(x0, nu, degree);
    eng.advance(st, T);
    return eng.result(st, T);
}

// nonrigorous point-arithmetic twin; R is double, xreal, or a jet over them
template <class R, class S>
std::vector<R> integrate_point(const program& aug, std::vector<R> x, S T, int order = 30,
                               double tol = 1e-20, double h_max = 0.5) {
    auto scalar_mag = [](const auto& s) {
        if constexpr (requires { s.to_double(); })
            return std::fabs(s.to_double());
        else
            return std::fabs(double(s));
    };
    auto mag_of = [&](const R& v) {
        if constexpr (requires { v.value(); })
            return scalar_mag(v.value());
        else
            return scalar_mag(v);
    };
    double t = 0;
    double t_end;
    if constexpr (requires { T.to_double(); })
        t_end = T.to_double();
    else
        t_end = double(T);
    int guard = 0;
    while (t < t_end) {
        if (++guard > 2000000) throw std::runtime_error("point integration stalled");
        auto c = taylor_coeffs<R>(aug, x, {}, order);
        double top = 0;
        for (auto& ci : c[std::size_t(order)]) top = std::max(top, mag_of(ci));
        double h = top > 0 ? std::pow(tol / top, 1.0 / order) : h_max;
        h = std::min(h, h_max);
        h = std::max(h, 1e-12);
        if (t + h > t_end) h = t_end - t;
        R hr = ring_const(x[0], h);
        std::vector<R> acc = c[std::size_t(order)];
        for (std::size_t k = std::size_t(order); k-- > 0;) {
            for (std::size_t i = 0; i < x.size(); ++i) acc[i] = c[k][i] + hr * acc[i];
        }
        x = std::move(acc);
        t += h;
    }
    return x;
}

} // namespace symbif
