// Interval Newton machinery: existence/uniqueness tests, parametrized branch
// validation with affine substitution and second-order bounds, and adaptive
// branch continuation with glue checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <optional>
#include <stdexcept>
#include <vector>

#include "symbif/jet.hpp"
#include "symbif/linalg.hpp"
#include "symbif/tape.hpp"

namespace symbif {

struct singular_jacobian : std::runtime_error {
    singular_jacobian() : std::runtime_error("state jacobian is numerically singular") {}
};

struct stalled_at_parameter : std::runtime_error {
    double where;
    explicit stalled_at_parameter(double z)
        : std::runtime_error("continuation stalled: minimum parameter step reached"), where(z) {}
};

enum class newton_status { unique_zero, no_zero, inconclusive };

template <class P>
struct newton_outcome {
    newton_status status;
    ivec<P> box; // refined enclosure N on unique_zero, disjoint N on no_zero
};

// A parametrized map f(z, x) is any callable (Z, X, degree) -> n jets in m+n
// variables (z first, then x), seeded as variables over the given boxes, so
// that coefficient alpha of jet i encloses D^alpha f_i / alpha! over Z x X.
// An unparametrized map takes (X, degree) and returns n jets in n variables.

template <class P>
struct program_fn {
    program pr;
    int m = 0, n = 0;

    std::vector<jet<interval<P>>> operator()(const ivec<P>& z, const ivec<P>& x,
                                             int degree) const {
        using J = jet<interval<P>>;
        const int nv = m + n;
        std::vector<J> xs, zs;
        for (int i = 0; i < m; ++i) zs.push_back(J::variable(nv, degree, i, z[std::size_t(i)]));
        for (int j = 0; j < n; ++j)
            xs.push_back(J::variable(nv, degree, m + j, x[std::size_t(j)]));
        return eval_program<J>(pr, xs, zs);
    }
    std::vector<jet<interval<P>>> operator()(const ivec<P>& x, int degree) const {
        return (*this)(ivec<P>(0), x, degree);
    }
};

namespace detail {

template <class P>
ivec<P> jet_values(const std::vector<jet<interval<P>>>& j) {
    ivec<P> v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].value();
    return v;
}

// first-order block of the jets: columns [c0, c0+cols) of the variable set
template <class P>
imat<P> jet_block(const std::vector<jet<interval<P>>>& j, int c0, int cols) {
    imat<P> d(j.size(), std::size_t(cols));
    for (std::size_t i = 0; i < j.size(); ++i)
        for (int k = 0; k < cols; ++k) d(i, std::size_t(k)) = j[i][std::size_t(1 + c0 + k)];
    return d;
}

// flat index of the monomial e_a + e_b in the table of the given jet
inline std::size_t pair_index(const jet_tables& t, int a, int b) {
    const std::size_t m = t.exps.size();
    int idx = t.prod[std::size_t(1 + a) * m + std::size_t(1 + b)];
    if (idx < 0) throw order_exceeded();
    return std::size_t(idx);
}

} // namespace detail

template <class P, class Fn>
newton_outcome<P> interval_newton(Fn&& f, const ivec<P>& x0, const ivec<P>& X) {
    const std::size_t n = X.size();
    ivec<P> f0 = detail::jet_values<P>(f(x0, 0));
    auto dj = f(X, 1);
    imat<P> df = detail::jet_block<P>(dj, 0, int(n));
    auto d = ilinear_solve<P>(df, f0);
    if (!d) return {newton_status::inconclusive, X};
    ivec<P> N = x0 - *d;
    if (strict_subset_of<P>(N, X)) return {newton_status::unique_zero, N};
    bool disjoint = false;
    for (std::size_t i = 0; i < n; ++i)
        if (!N[i].intersects(X[i])) disjoint = true;
    if (disjoint) return {newton_status::no_zero, N};
    auto cut = meet<P>(N, X);
    return {newton_status::inconclusive, cut ? *cut : X};
}

// Affine substitution (z, x) = s(z, w) = (z, x0 + w - A (z - z0)) flattening
// the implicit branch to first order. C and Dz are plain floating point; the
// matrix A of the substitution is their exact product, enclosed rigorously.
template <class P>
struct substitution {
    ivec<P> z0, x0;             // thin base point
    mat<typename P::real> C;    // approximate inverse of D_x f(z0, x0)
    mat<typename P::real> Dz;   // approximate D_z f(z0, x0)
    imat<P> A;                  // rigorous enclosure of C * Dz
    std::vector<jet<interval<P>>> fj0; // first-order jet of f at the base point
};

template <class P, class Fn>
substitution<P> affine_substitution(Fn&& f, const ivec<P>& z0, const ivec<P>& x0) {
    const std::size_t m = z0.size(), n = x0.size();
    auto j = f(z0, x0, 1);
    imat<P> dxf = detail::jet_block<P>(j, int(m), int(n));
    imat<P> dzf = detail::jet_block<P>(j, 0, int(m));
    auto c = invert_point(mid<P>(dxf));
    if (!c) throw singular_jacobian();
    substitution<P> s;
    s.z0 = z0;
    s.x0 = x0;
    s.C = *c;
    s.Dz = mid<P>(dzf);
    s.A = to_imat<P>(s.C) * to_imat<P>(s.Dz);
    s.fj0 = std::move(j);
    return s;
}

// g = f o s as a parametrized map in (z, w). First-order z-columns are
// refined by intersecting D_z f - [D_x f * A] with D_z f - [(D_x f * C) * Dz]:
// both enclose D_z g because A is exactly C * Dz, and the regrouped product
// nearly cancels against D_z f.
template <class P, class Fn>
struct substituted_fn {
    const Fn* f;
    substitution<P> s;

    ivec<P> x_of(const ivec<P>& Z, const ivec<P>& W) const {
        return s.x0 + W - ivec<P>(s.A * (Z - s.z0));
    }

    std::vector<jet<interval<P>>> operator()(const ivec<P>& Z, const ivec<P>& W,
                                             int degree) const {
        ivec<P> X = x_of(Z, W);
        return compose((*f)(Z, X, degree), Z, X, degree);
    }

    // compose an already computed jet of f at (Z, X), X = x_of(Z, W), with
    // the inner affine jets of s
    std::vector<jet<interval<P>>> compose(const std::vector<jet<interval<P>>>& fj,
                                          const ivec<P>& Z, const ivec<P>& X,
                                          int degree) const {
        using I = interval<P>;
        using J = jet<I>;
        const int m = int(Z.size()), n = int(X.size()), nv = m + n;
        // inner jets of s in the (z, w) variables
        std::vector<J> inner;
        for (int i = 0; i < m; ++i)
            inner.push_back(J::variable(nv, degree, i, Z[std::size_t(i)]));
        for (int j = 0; j < n; ++j) {
            J a(nv, degree, X[std::size_t(j)]);
            if (degree > 0) {
                for (int i = 0; i < m; ++i)
                    a[std::size_t(1 + i)] = -s.A(std::size_t(j), std::size_t(i));
                a[std::size_t(1 + m + j)] = I(1.0);
            }
            inner.push_back(a);
        }
        std::vector<J> g;
        for (std::size_t i = 0; i < fj.size(); ++i) g.push_back(jet_compose(fj[i], inner));
        if (degree >= 1) {
            imat<P> dxf = detail::jet_block<P>(fj, m, n);
            imat<P> dzf = detail::jet_block<P>(fj, 0, m);
            imat<P> b1 = dxf * s.A;
            imat<P> b2 = (dxf * to_imat<P>(s.C)) * to_imat<P>(s.Dz);
            for (std::size_t i = 0; i < g.size(); ++i)
                for (int k = 0; k < m; ++k) {
                    auto mt = meet(b1(i, std::size_t(k)), b2(i, std::size_t(k)));
                    if (!mt) continue;
                    I refined = dzf(i, std::size_t(k)) - *mt;
                    auto cut = meet(g[i][std::size_t(1 + k)], refined);
                    if (cut) g[i][std::size_t(1 + k)] = *cut;
                }
        }
        return g;
    }
};

template <class P, class Fn>
substituted_fn<P, std::decay_t<Fn>> substitute(const Fn& f, const substitution<P>& s) {
    return {&f, s};
}

// Bound on g(Z, w0): meet of direct interval evaluation, the mean-value form
// g(z0, w0) + D_z g(Z, w0) dZ, and the second-order Taylor form with the
// Hessian evaluated over the box. Width is practically quadratic in rad(Z).
template <class P>
ivec<P> improved_value_bound(const std::vector<jet<interval<P>>>& p1,
                             const std::vector<jet<interval<P>>>& b2j, const ivec<P>& dZ) {
    using I = interval<P>;
    const std::size_t m = dZ.size();

    ivec<P> direct = detail::jet_values<P>(b2j);

    ivec<P> g0 = detail::jet_values<P>(p1);
    imat<P> dzg = detail::jet_block<P>(b2j, 0, int(m));
    ivec<P> mean = g0 + ivec<P>(dzg * dZ);

    const std::size_t n = g0.size();
    ivec<P> quad(n);
    const auto& tab = detail::jet_tables::get(b2j[0].nvars(), b2j[0].degree());
    for (std::size_t i = 0; i < n; ++i) {
        I acc = g0[i];
        for (std::size_t k = 0; k < m; ++k) acc = acc + p1[i][1 + k] * dZ[k];
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t l = k; l < m; ++l) {
                // sqr keeps the diagonal term one-signed
                I dzz = (k == l) ? sqr(dZ[k]) : dZ[k] * dZ[l];
                acc = acc + b2j[i][detail::pair_index(tab, int(k), int(l))] * dzz;
            }
        quad[i] = acc;
    }

    auto a = meet<P>(direct, mean);
    if (!a) throw validation_failed("value bounds of a substituted map disagree");
    auto b = meet<P>(*a, quad);
    if (!b) throw validation_failed("value bounds of a substituted map disagree");
    return *b;
}

template <class P, class G>
ivec<P> improved_value_bound(G&& g, const ivec<P>& z0, const ivec<P>& Z, const ivec<P>& w0) {
    return improved_value_bound<P>(g(z0, w0, 1), g(Z, w0, 2), Z - z0);
}

// Bound on D_w g(Z, W): meet of the direct first-order block with the
// second-order form D_w g(z0, w0) + D2_ww g * dW + D2_zw g * dZ.
template <class P>
imat<P> improved_derivative_bound(const std::vector<jet<interval<P>>>& p1,
                                  const std::vector<jet<interval<P>>>& d2,
                                  const ivec<P>& dZ, const ivec<P>& dW) {
    using I = interval<P>;
    const std::size_t m = dZ.size(), n = dW.size();

    imat<P> direct = detail::jet_block<P>(d2, int(m), int(n));

    const auto& tab = detail::jet_tables::get(d2[0].nvars(), d2[0].degree());
    imat<P> second(direct.rows(), direct.cols());
    for (std::size_t i = 0; i < direct.rows(); ++i)
        for (std::size_t j = 0; j < n; ++j) {
            I acc = p1[i][1 + m + j];
            for (std::size_t k = 0; k < n; ++k) {
                I h = d2[i][detail::pair_index(tab, int(m + k), int(m + j))];
                if (k == j) h = h + h; // coefficient is half the diagonal partial
                acc = acc + h * dW[k];
            }
            for (std::size_t l = 0; l < m; ++l)
                acc = acc + d2[i][detail::pair_index(tab, int(l), int(m + j))] * dZ[l];
            second(i, j) = acc;
        }

    imat<P> r(direct.rows(), direct.cols());
    for (std::size_t i = 0; i < direct.rows(); ++i)
        for (std::size_t j = 0; j < n; ++j) {
            auto mt = meet(direct(i, j), second(i, j));
            if (!mt) throw validation_failed("derivative bounds of a substituted map disagree");
            r(i, j) = *mt;
        }
    return r;
}

template <class P, class G>
imat<P> improved_derivative_bound(G&& g, const ivec<P>& z0, const ivec<P>& w0,
                                  const ivec<P>& Z, const ivec<P>& W) {
    return improved_derivative_bound<P>(g(z0, w0, 1), g(Z, W, 2), Z - z0, W - w0);
}

template <class P>
struct branch_segment {
    ivec<P> Z;      // parameter box covered by this piece
    ivec<P> z0, x0; // thin base point
    imat<P> A;      // affine substitution matrix (zero when unused)
    ivec<P> W;      // solution box in substituted coordinates
    ivec<P> X;      // enclosure of the branch in original coordinates over Z
    imat<P> Dg;     // derivative of the implicit branch over Z
    std::optional<std::vector<imat<P>>> D2;
};

template <class P>
struct parametrized_outcome {
    newton_status status;
    std::optional<branch_segment<P>> segment;
};

// Parametrized interval Newton (with or without the affine substitution).
// On unique_zero the zero set of f in Z x X is the graph of a C^1 function
// g : Z -> X whose values lie in segment.X and derivative in segment.Dg.
template <class P, class Fn>
parametrized_outcome<P> parametrized_newton(Fn&& f, const ivec<P>& z0, const ivec<P>& x0,
                                            const ivec<P>& X, const ivec<P>& Z,
                                            bool use_substitution = true) {
    const std::size_t m = Z.size(), n = X.size();
    parametrized_outcome<P> out{newton_status::inconclusive, std::nullopt};
    try {

    branch_segment<P> seg;
    seg.Z = Z;
    seg.z0 = z0;
    seg.x0 = x0;
    imat<P> dxf, dzf; // first-order blocks of f over Z x seg.X (plain path)

    if (use_substitution) {
        substitution<P> sub;
        try {
            sub = affine_substitution<P>(f, z0, x0);
        } catch (const singular_jacobian&) {
            return out;
        }
        auto g = substitute<P>(f, sub);
        ivec<P> dZ = Z - z0;
        ivec<P> W = (X - x0) + ivec<P>(sub.A * dZ); // covers s^{-1}(Z x X)
        ivec<P> w0(n);
        ivec<P> val, Nw;
        imat<P> dw;
        // three map evaluations total: the thin jet (reused from the
        // substitution), g over Z x {w0}, and g over Z x W; the second-order
        // jets also carry the value and first-order blocks the bounds need
        ivec<P> Xc = g.x_of(Z, W);
        auto fc = f(Z, Xc, 2);
        auto gc = g.compose(fc, Z, Xc, 2);
        try {
            auto p1 = g.compose(sub.fj0, z0, x0, 1);
            val = improved_value_bound<P>(p1, g(Z, w0, 2), dZ);
            dw = improved_derivative_bound<P>(p1, gc, dZ, W);
        } catch (const validation_failed&) {
            return out;
        }
        auto d = ilinear_solve<P>(dw, val);
        if (!d) return out;
        Nw = -*d;
        bool disjoint = false;
        for (std::size_t i = 0; i < n; ++i)
            if (!Nw[i].intersects(W[i])) disjoint = true;
        if (disjoint) return {newton_status::no_zero, std::nullopt};
        if (!strict_subset_of<P>(Nw, W)) return out;
        seg.A = sub.A;
        seg.W = Nw;
        // hull of x0 + w(z) - A (z - z0) over Z; the branch may leave the
        // candidate X, whose only role was to size W
        seg.X = x0 + Nw - ivec<P>(sub.A * dZ);
        // branch derivative through the substituted coordinates: the graph is
        // x(z) = x0 + w(z) - A (z - z0) with D_w g . w' = -D_z g, and the
        // refined blocks of g stay tight where the raw D_x f of a long chunk
        // wraps across zero
        imat<P> dzg = detail::jet_block<P>(gc, 0, int(m));
        seg.Dg = imat<P>(n, m);
        for (std::size_t l = 0; l < m; ++l) {
            ivec<P> rhs(n);
            for (std::size_t i = 0; i < n; ++i) rhs[i] = -dzg(i, l);
            auto col = ilinear_solve<P>(dw, rhs);
            if (!col) return out;
            for (std::size_t i = 0; i < n; ++i)
                seg.Dg(i, l) = (*col)[i] - sub.A(i, l);
        }
        out.status = newton_status::unique_zero;
        out.segment = std::move(seg);
        return out;
    } else {
        ivec<P> f0 = detail::jet_values<P>(f(Z, x0, 0));
        auto dj = f(Z, X, 1);
        dxf = detail::jet_block<P>(dj, int(m), int(n));
        auto d = ilinear_solve<P>(dxf, f0);
        if (!d) return out;
        ivec<P> N = x0 - *d;
        bool disjoint = false;
        for (std::size_t i = 0; i < n; ++i)
            if (!N[i].intersects(X[i])) disjoint = true;
        if (disjoint) return {newton_status::no_zero, std::nullopt};
        if (!strict_subset_of<P>(N, X)) return out;
        seg.A = imat<P>(n, m);
        seg.W = N - x0;
        seg.X = N;
        auto rj = f(Z, seg.X, 1);
        dxf = detail::jet_block<P>(rj, int(m), int(n));
        dzf = detail::jet_block<P>(rj, 0, int(m));
    }

    // branch derivative: D_x f . g' = -D_z f over the refined enclosure
    seg.Dg = imat<P>(n, m);
    for (std::size_t l = 0; l < m; ++l) {
        ivec<P> rhs(n);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = -dzf(i, l);
        auto col = ilinear_solve<P>(dxf, rhs);
        if (!col) return out;
        for (std::size_t i = 0; i < n; ++i) seg.Dg(i, l) = (*col)[i];
    }

    out.status = newton_status::unique_zero;
    out.segment = std::move(seg);
    return out;

    } catch (const std::runtime_error&) {
        // overestimation surfacing as an evaluation failure: never a claim
        return {newton_status::inconclusive, std::nullopt};
    }
}

template <class P>
struct branch {
    std::vector<branch_segment<P>> segments;
    std::vector<bool> glue; // glue[i]: segments i, i+1 overlap in Z and in X
};

struct continuation_options {
    double initial_width = 1e-2;
    double min_width = 1e-9;
    double growth = 1.5;     // chunk growth after consecutive successes
    double overlap = 0.05;   // fraction of each chunk shared with the next
    double safety_factor = 10.0;
    bool use_substitution = true;
    int threads = 1;
    std::size_t max_segments = 100000;
};

namespace detail {

template <class P, class Fn, class Seed>
branch<P> continue_block(Fn&& f, Seed&& seed, double za, double zb,
                         const continuation_options& opt) {
    using I = interval<P>;
    branch<P> br;
    double start = za;
    double h = std::min(opt.initial_width, zb - za);
    int streak = 0;
    while (start < zb - 1e-15 * std::max(1.0, std::abs(zb))) {
        if (br.segments.size() >= opt.max_segments)
            throw stalled_at_parameter(start);
        double end = std::min(start + h, zb);
        double zm = 0.5 * (start + end);
        std::vector<double> x0d = seed(zm);
        const std::size_t n = x0d.size();
        ivec<P> z0{I(zm)};
        ivec<P> x0(n);
        for (std::size_t i = 0; i < n; ++i) x0[i] = I(x0d[i]);
        ivec<P> Z{I(start, end)};

        // candidate radius: safety x (Newton step at the center + deviation of
        // the seed path from the affine prediction at the chunk ends)
        bool ok = false;
        try {
        auto j = f(z0, x0, 1);
        imat<P> dxf = detail::jet_block<P>(j, 1, int(n));
        imat<P> dzf = detail::jet_block<P>(j, 0, 1);
        auto c = invert_point(mid<P>(dxf));
        if (c) {
            vec<typename P::real> f0 = mid<P>(detail::jet_values<P>(j));
            vec<typename P::real> step = *c * f0;
            vec<typename P::real> acol(n);
            {
                auto dzm = mid<P>(dzf);
                vec<typename P::real> dcol(n);
                for (std::size_t i = 0; i < n; ++i) dcol[i] = dzm(i, 0);
                acol = *c * dcol;
            }
            std::vector<double> xa = seed(start), xb = seed(end);
            const double hw = 0.5 * (end - start);
            std::vector<double> rad(n);
            for (std::size_t i = 0; i < n; ++i) {
                double pa = x0d[i] - P::to_double(acol[i]) * (start - zm);
                double pb = x0d[i] - P::to_double(acol[i]) * (end - zm);
                double dev = std::max(std::abs(xa[i] - pa), std::abs(xb[i] - pb));
                // the enclosure width of the preconditioned parameter
                // derivative bounds how far the true graph can drift from the
                // affine prediction across the chunk
                I drift(0.0);
                for (std::size_t k = 0; k < n; ++k)
                    drift = drift + I((*c)(i, k)) * dzf(k, 0);
                double dw = 0.5 * drift.width_d() * hw;
                rad[i] = opt.safety_factor *
                             (std::abs(P::to_double(step[i])) + dev + dw) +
                         1e-11 * (1.0 + std::abs(x0d[i]));
            }
            for (double grow = 1.0; grow <= 625.0 && !ok; grow *= 25.0) {
                ivec<P> X(n);
                for (std::size_t i = 0; i < n; ++i)
                    X[i] = I(x0d[i]).inflated(grow * rad[i]);
                auto pn = parametrized_newton<P>(f, z0, x0, X, Z, opt.use_substitution);
                if (pn.status == newton_status::unique_zero) {
                    br.segments.push_back(std::move(*pn.segment));
                    ok = true;
                }
            }
        }
        } catch (const stalled_at_parameter&) {
            throw;
        } catch (const std::runtime_error&) {
            ok = false;
        }
        if (ok) {
            start = end - opt.overlap * (end - start);
            if (end >= zb) break;
            if (++streak >= 2) {
                h *= opt.growth;
                streak = 0;
            }
        } else {
            streak = 0;
            h *= 0.5;
            if (h < opt.min_width) throw stalled_at_parameter(start);
        }
    }
    br.glue.assign(br.segments.size() > 0 ? br.segments.size() - 1 : 0, false);
    return br;
}

template <class P>
bool glue_ok(const branch_segment<P>& a, const branch_segment<P>& b) {
    for (std::size_t i = 0; i < a.Z.size(); ++i)
        if (!a.Z[i].intersects(b.Z[i])) return false;
    for (std::size_t i = 0; i < a.X.size(); ++i)
        if (!a.X[i].intersects(b.X[i])) return false;
    return true;
}

} // namespace detail

// Certify the solution branch of f(z, x) = 0 over [za, zb] (scalar parameter)
// following a nonrigorous seed path z -> x. Chunks are dispatched to a work
// pool and merged in parameter order; consecutive segments overlap in z and
// their enclosures are glue-checked.
template <class P, class Fn, class Seed>
branch<P> continue_branch(Fn&& f, Seed&& seed, double za, double zb,
                          continuation_options opt = {}) {
    branch<P> br;
    int nb = std::max(1, opt.threads);
    double block = (zb - za) / nb;
    if (nb == 1) {
        br = detail::continue_block<P>(f, seed, za, zb, opt);
    } else {
        double lap = std::min(opt.initial_width, 0.01 * block);
        std::vector<std::future<branch<P>>> fut;
        for (int k = 0; k < nb; ++k) {
            double a = za + k * block;
            double b = (k + 1 == nb) ? zb : za + (k + 1) * block + lap;
            fut.push_back(std::async(std::launch::async, [&, a, b] {
                return detail::continue_block<P>(f, seed, a, b, opt);
            }));
        }
        for (auto& fu : fut) {
            branch<P> part = fu.get();
            for (auto& s : part.segments) br.segments.push_back(std::move(s));
        }
    }
    br.glue.assign(br.segments.size() > 0 ? br.segments.size() - 1 : 0, false);
    for (std::size_t i = 0; i + 1 < br.segments.size(); ++i)
        br.glue[i] = detail::glue_ok(br.segments[i], br.segments[i + 1]);
    return br;
}

} // namespace symbif
