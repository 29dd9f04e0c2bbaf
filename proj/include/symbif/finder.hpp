// Nonrigorous, high-accuracy location of approximate bifurcation points: an
// eigenvalue-independent Newton scheme on the pair (fixed-point equation,
// reduced bifurcation function), a symmetry-breaking variant solving
// (pi_xd P, d pi_zd P / dz) = 0 on the planar invariant subspace, and a
// branch-following resonance scanner that produces the seeds.
//
// Everything here runs in point arithmetic (thin intervals of the chosen
// policy, re-thinned each step); the rigorous pipeline never consumes the
// derivative approximations made below.

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "symbif/bifurcation.hpp"

namespace symbif {

struct max_iterations : std::runtime_error {
    explicit max_iterations(const std::string& what) : std::runtime_error(what) {}
};
struct singular_iteration_matrix : std::runtime_error {
    singular_iteration_matrix() : std::runtime_error("singular iteration matrix") {}
};

template <class P>
struct seed_point {
    interval<P> nu;            // parameter (or p0), thin
    ivec<P> p;                 // section coordinates p1, p2..., thin
    int k = 0;                 // targeted resonance
    double residual_g = 0;     // |dG_k/dp1| at the returned point
    double residual_q = 0;     // |pi_q P| at the returned point
    std::vector<double> trace; // residual norm per iteration
};

struct finder_options {
    int max_iters = 25;
    double tol = 1e-12;
    // a Newton step larger than this means the seed left the local basin
    double max_step = 1.0;
};

namespace detail {

template <class P>
interval<P> thin(const interval<P>& x) {
    return interval<P>(x.mid());
}

template <class P>
ivec<P> point_solve(const imat<P>& M, const ivec<P>& b) {
    auto r = ilinear_solve<P>(M, b);
    if (!r) throw singular_iteration_matrix();
    for (auto& x : *r) x = thin<P>(x);
    return *r;
}

// Newton for the fixed-point branch at frozen nu: pi_q map(nu, p) = 0 in p
template <class P, class F>
ivec<P> point_branch(const F& map, int np, int nq, const interval<P>& nu, ivec<P> p,
                     const finder_options& opt) {
    if (np != nq) throw std::invalid_argument("point branch solve needs a square q block");
    for (int it = 0; it < opt.max_iters; ++it) {
        auto f = map(nu, p, 1, 1);
        auto v = ivec<P>(std::size_t(nq));
        auto M = imat<P>(std::size_t(nq), std::size_t(np));
        double rn = 0;
        for (int i = 0; i < nq; ++i) {
            v[std::size_t(i)] = thin<P>(f[std::size_t(np + i)].value());
            rn = std::max(rn, std::abs(P::to_double(v[std::size_t(i)].mid())));
            for (int j = 0; j < np; ++j)
                M(std::size_t(i), std::size_t(j)) =
                    thin<P>(f[std::size_t(np + i)][std::size_t(1 + 1 + j)]);
        }
        if (rn < opt.tol) return p;
        auto d = point_solve<P>(M, v);
        for (int j = 0; j < np; ++j) p[std::size_t(j)] = thin<P>(p[std::size_t(j)] - d[std::size_t(j)]);
    }
    throw max_iterations("fixed-point branch did not converge");
}

// degree-2 jet of G_k at a thin point, resolving p2(nu, p1) by a point
// Lyapunov-Schmidt solve when the q2 block is nonempty
template <class P, class F>
jet<interval<P>> point_G(const F& map, int k, int np2, int nq2, const interval<P>& nu,
                         const interval<P>& p1, const ivec<P>& p2) {
    const int np = 1 + np2;
    if (np2 == 0) {
        ivec<P> p{p1};
        return map(nu, p, k, 2)[std::size_t(np)];
    }
    auto p2j = ls_p2_jets_core<P>(map, k, np2, nq2, nu, p1, p2, 2);
    return eval_G_from_p2<P>(map, k, np2, nu, p1, p2j, 2);
}

} // namespace detail

// Newton-like refinement of a 1:k bifurcation point: solve
//   pi_q map(nu, p) = 0   and   dG_k/dp1 (nu, p1) = 0
// for (nu, p1, p2), with the iteration-matrix row for the second equation
// built from the approximations dg/dp1 ~ (1/2) d^2G/dp1^2 and
// dg/dnu ~ d^2G/dnu dp1 + (1/2) d^2G/dp1^2 p1'(nu), valid near the zero.
template <class P, class F>
seed_point<P> refine_bifurcation_point(const F& map, int k, int np2, int nq2,
                                       const interval<P>& nu_seed, const ivec<P>& p_seed,
                                       finder_options opt = {}) {
    using I = interval<P>;
    const int np = 1 + np2, nq = 1 + nq2;
    if (np != nq) throw std::invalid_argument("refinement needs a square q block");
    I nu = detail::thin<P>(nu_seed);
    ivec<P> p = p_seed;
    for (auto& x : p) x = detail::thin<P>(x);

    seed_point<P> out;
    out.k = k;
    const int n = 1 + np; // unknowns (nu, p1, p2)
    for (int it = 0; it < opt.max_iters; ++it) {
        I resid_g, p1prime;
        auto M = imat<P>(std::size_t(n), std::size_t(n));
        auto b = ivec<P>(std::size_t(n));
        try {
            auto f = map(nu, p, 1, 1);
            auto Jq = imat<P>(std::size_t(nq), std::size_t(np));
            auto Jnu = ivec<P>(std::size_t(nq));
            for (int i = 0; i < nq; ++i) {
                b[std::size_t(1 + i)] = detail::thin<P>(f[std::size_t(np + i)].value());
                Jnu[std::size_t(i)] = detail::thin<P>(f[std::size_t(np + i)][1]);
                for (int j = 0; j < np; ++j)
                    Jq(std::size_t(i), std::size_t(j)) =
                        detail::thin<P>(f[std::size_t(np + i)][std::size_t(1 + 1 + j)]);
            }
            // branch slope p1'(nu) from the frozen-parameter Jacobian
            auto v = detail::point_solve<P>(Jq, Jnu);
            p1prime = I(0.0) - v[0];

            auto p2 = ivec<P>(std::size_t(np2));
            for (int i = 0; i < np2; ++i) p2[std::size_t(i)] = p[std::size_t(1 + i)];
            auto G = detail::point_G<P>(map, k, np2, nq2, nu, p[0], p2);
            resid_g = detail::thin<P>(G.partial({0, 1}));
            I Gpp = detail::thin<P>(G.partial({0, 2}));
            I Gnp = detail::thin<P>(G.partial({1, 1}));

            b[0] = resid_g;
            M(0, 0) = Gnp + I(0.5) * Gpp * p1prime;
            M(0, 1) = I(0.5) * Gpp;
            for (int j = 0; j < np2; ++j) M(0, std::size_t(2 + j)) = I(0.0);
            for (int i = 0; i < nq; ++i) {
                M(std::size_t(1 + i), 0) = Jnu[std::size_t(i)];
                for (int j = 0; j < np; ++j)
                    M(std::size_t(1 + i), std::size_t(1 + j)) = Jq(std::size_t(i), std::size_t(j));
            }
        } catch (const validation_failed&) {
            // the orbit left the integrable region: no nearby zero
            throw max_iterations("bifurcation refinement left the basin");
        } catch (const invalid_interval&) {
            throw max_iterations("bifurcation refinement left the basin");
        }

        double rg = std::abs(P::to_double(resid_g.mid()));
        double rq = 0;
        for (int i = 0; i < nq; ++i)
            rq = std::max(rq, std::abs(P::to_double(b[std::size_t(1 + i)].mid())));
        out.trace.push_back(std::max(rg, rq));
        if (std::max(rg, rq) < opt.tol) {
            out.nu = nu;
            out.p = p;
            out.residual_g = rg;
            out.residual_q = rq;
            return out;
        }

        auto r = detail::point_solve<P>(M, b);
        if (std::abs(P::to_double(r[0].mid())) > opt.max_step)
            throw max_iterations("bifurcation refinement left the basin");
        nu = detail::thin<P>(nu - r[0]);
        for (int j = 0; j < np; ++j)
            p[std::size_t(j)] = detail::thin<P>(p[std::size_t(j)] - r[std::size_t(1 + j)]);
    }
    throw max_iterations("bifurcation refinement did not converge");
}

// Symmetry-breaking variant: on the planar invariant subspace of a spatial
// system, solve for (x, yd) with
//   pi_xd P(x, 0, 0, 0, yd, 0) = 0   and   d pi_zd P / dz (x, 0, 0, 0, yd, 0) = 0.
// The indices name the relevant state coordinates.
struct sb_indices {
    int x = 0, z = 2, xd = 3, yd = 4, zd = 5;
};

template <class P>
seed_point<P> find_symmetry_breaking(const vector_field& field, const section& sec,
                                     const ivec<P>& params, const interval<P>& x_seed,
                                     const interval<P>& yd_seed, sb_indices ix = {},
                                     finder_options opt = {},
                                     const odeint_options& iopt = {}, double t_max = 100.0) {
    using I = interval<P>;
    using J = jet<I>;
    const int n = field.n, m = field.m;
    if (n <= std::max({ix.x, ix.z, ix.xd, ix.yd, ix.zd}))
        throw std::invalid_argument("system has no out-of-plane direction");

    I x0 = detail::thin<P>(x_seed), yd0 = detail::thin<P>(yd_seed);
    seed_point<P> out;
    out.k = 1;
    for (int it = 0; it < opt.max_iters; ++it) {
        auto st = ivec<P>(std::size_t(n));
        st[std::size_t(ix.x)] = x0;
        st[std::size_t(ix.yd)] = yd0;
        auto r = poincare_map<P>(field, sec, st, params, 2, iopt, t_max);

        // rename to (u0, u1, u2) = (x, yd, z)
        std::vector<J> inner(std::size_t(n + m));
        for (int i = 0; i < n + m; ++i)
            inner[std::size_t(i)] =
                J(3, 2, i < n ? st[std::size_t(i)] : params[std::size_t(i - n)]);
        inner[std::size_t(ix.x)] = J::variable(3, 2, 0, x0);
        inner[std::size_t(ix.yd)] = J::variable(3, 2, 1, yd0);
        inner[std::size_t(ix.z)] = J::variable(3, 2, 2, I(0.0));
        J F1 = jet_compose(r.full[std::size_t(ix.xd)], inner);
        J F2 = jet_compose(r.full[std::size_t(ix.zd)], inner);

        ivec<P> b{detail::thin<P>(F1.value()), detail::thin<P>(F2.partial({0, 0, 1}))};
        double rn = std::max(std::abs(P::to_double(b[0].mid())),
                             std::abs(P::to_double(b[1].mid())));
        out.trace.push_back(rn);
        if (rn < opt.tol) {
            out.nu = x0;
            out.p = ivec<P>{yd0};
            out.residual_q = std::abs(P::to_double(b[0].mid()));
            out.residual_g = std::abs(P::to_double(b[1].mid()));
            return out;
        }

        auto M = imat<P>(2, 2);
        M(0, 0) = detail::thin<P>(F1.partial({1, 0, 0}));
        M(0, 1) = detail::thin<P>(F1.partial({0, 1, 0}));
        M(1, 0) = detail::thin<P>(F2.partial({1, 0, 1}));
        M(1, 1) = detail::thin<P>(F2.partial({0, 1, 1}));
        auto d = detail::point_solve<P>(M, b);
        x0 = detail::thin<P>(x0 - d[0]);
        yd0 = detail::thin<P>(yd0 - d[1]);
    }
    throw max_iterations("symmetry-breaking refinement did not converge");
}

// Scan a fixed-point branch for 1:k resonances of the full (two-iterate)
// monodromy: the restricted trace passes 2 cos(2 pi / k). Brackets each
// crossing by bisection and returns one seed per crossing, ready for
// refine_bifurcation_point.
template <class P>
std::vector<seed_point<P>> resonance_scan(const poincare_family<P>& fam, double nu_lo,
                                          double nu_hi, int nsamples,
                                          const std::vector<int>& k_list,
                                          const ivec<P>& p_seed, finder_options opt = {}) {
    using I = interval<P>;
    const int np = 1 + int(fam.split.p2.size());
    const int nq = 1 + int(fam.split.q2.size());
    if (nsamples < 2) return {};

    // (p1, q1)-restricted trace of the derivative of the two-iterate return map
    auto mono_trace = [&](const I& nu, const ivec<P>& p) {
        const int n = fam.field.n;
        auto x = ivec<P>(std::size_t(n));
        x[std::size_t(fam.section_coord())] = I(fam.sec.offset);
        x[std::size_t(fam.split.p1)] = p[0];
        for (std::size_t i = 0; i < fam.split.p2.size(); ++i)
            x[std::size_t(fam.split.p2[i])] = p[1 + i];
        ivec<P> nuv = fam.params;
        if (fam.nu_param >= 0)
            nuv[std::size_t(fam.nu_param)] = nu;
        else
            x[std::size_t(fam.split.p0)] = nu;
        section sk = fam.sec;
        sk.k = fam.sec.k * 2;
        auto r = poincare_map<P>(fam.field, sk, x, nuv, 1, fam.opt, fam.t_max);
        auto e = [&](int i) { return std::size_t(i); };
        I tr = r.first(e(fam.split.p1), e(fam.split.p1)) +
               r.first(e(fam.split.q1), e(fam.split.q1));
        return P::to_double(tr.mid());
    };

    struct sample {
        double nu;
        ivec<P> p;
        double tr;
        bool ok;
    };
    std::vector<sample> samples;
    ivec<P> p = p_seed;
    for (int i = 0; i < nsamples; ++i) {
        double nu = nu_lo + (nu_hi - nu_lo) * double(i) / double(nsamples - 1);
        sample s{nu, p, 0.0, false};
        try {
            s.p = detail::point_branch<P>(fam, np, nq, I(nu), p, opt);
            s.tr = mono_trace(I(nu), s.p);
            s.ok = true;
            p = s.p; // continuation
        } catch (const std::runtime_error&) {
        }
        samples.push_back(std::move(s));
    }

    std::vector<seed_point<P>> seeds;
    for (int k : k_list) {
        double target = 2.0 * std::cos(2.0 * M_PI / double(k));
        for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
            const auto &a = samples[i], &c = samples[i + 1];
            if (!a.ok || !c.ok) continue;
            double ha = a.tr - target, hc = c.tr - target;
            if (ha == 0.0 || ha * hc >= 0.0) continue;
            // bisect the bracket
            double lo = a.nu, hi = c.nu, hlo = ha;
            ivec<P> pl = a.p;
            for (int step = 0; step < 24 && hi - lo > 1e-4; ++step) {
                double mid = 0.5 * (lo + hi);
                try {
                    auto pm = detail::point_branch<P>(fam, np, nq, I(mid), pl, opt);
                    double hm = mono_trace(I(mid), pm) - target;
                    if (hlo * hm <= 0.0) {
                        hi = mid;
                    } else {
                        lo = mid;
                        hlo = hm;
                        pl = pm;
                    }
                } catch (const std::runtime_error&) {
                    break;
                }
            }
            seed_point<P> s;
            s.k = k;
            s.nu = I(0.5 * (lo + hi));
            try {
                s.p = detail::point_branch<P>(fam, np, nq, s.nu, pl, opt);
            } catch (const std::runtime_error&) {
                s.p = pl;
            }
            seeds.push_back(std::move(s));
        }
    }
    return seeds;
}

} // namespace symbif
