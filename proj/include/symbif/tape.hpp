// Vector fields as straight-line programs over elementary operations, so one
// definition evaluates over doubles, intervals, jets, and Taylor-coefficient
// rings alike.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "symbif/jet.hpp"

namespace symbif {

enum class op_kind { konst, var, param, add, sub, mul, div, sqrt_op, neg, sqr_op };

struct tape_op {
    op_kind kind;
    int a = -1, b = -1;
    double cval = 0; // constants must be exactly representable in binary64
};

struct program {
    int nstate = 0, nparam = 0;
    std::vector<tape_op> ops;
    std::vector<int> outputs;
};

inline double sqr(double x) { return x * x; }

// lift a double constant into an arbitrary coefficient ring
template <class R>
R ring_const(const R& like, double v) {
    if constexpr (requires { like.nvars(); like.degree(); }) {
        using T = std::decay_t<decltype(like.value())>;
        return R(like.nvars(), like.degree(), T(v));
    } else {
        (void)like;
        return R(v);
    }
}

template <class R>
std::vector<R> eval_program(const program& p, const std::vector<R>& state, const std::vector<R>& params) {
    if (int(state.size()) != p.nstate || int(params.size()) != p.nparam)
        throw std::invalid_argument("program arity mismatch");
    const R& like = p.nstate > 0 ? state[0] : params.at(0);
    std::vector<R> v;
    v.reserve(p.ops.size());
    for (const auto& op : p.ops) {
        switch (op.kind) {
            case op_kind::konst: v.push_back(ring_const(like, op.cval)); break;
            case op_kind::var: v.push_back(state[std::size_t(op.a)]); break;
            case op_kind::param: v.push_back(params[std::size_t(op.a)]); break;
            case op_kind::add: v.push_back(v[std::size_t(op.a)] + v[std::size_t(op.b)]); break;
            case op_kind::sub: v.push_back(v[std::size_t(op.a)] - v[std::size_t(op.b)]); break;
            case op_kind::mul: v.push_back(v[std::size_t(op.a)] * v[std::size_t(op.b)]); break;
            case op_kind::div: v.push_back(v[std::size_t(op.a)] / v[std::size_t(op.b)]); break;
            case op_kind::sqrt_op: {
                using std::sqrt;
                v.push_back(sqrt(v[std::size_t(op.a)]));
                break;
            }
            case op_kind::neg: v.push_back(-v[std::size_t(op.a)]); break;
            case op_kind::sqr_op: v.push_back(v[std::size_t(op.a)] * v[std::size_t(op.a)]); break;
        }
    }
    std::vector<R> out;
    out.reserve(p.outputs.size());
    for (int i : p.outputs) out.push_back(v[std::size_t(i)]);
    return out;
}

// small builder DSL; expressions are indices into the growing tape
class prog_builder {
public:
    struct node {
        prog_builder* b;
        int i;
    };

    prog_builder(int nstate, int nparam) {
        p_.nstate = nstate;
        p_.nparam = nparam;
    }

    node state(int i) { return push({op_kind::var, i}); }
    node param(int i) { return push({op_kind::param, i}); }
    node c(double v) {
        tape_op op{op_kind::konst};
        op.cval = v;
        return push(op);
    }

    friend node operator+(node a, node b) { return a.b->push({op_kind::add, a.i, b.i}); }
    friend node operator-(node a, node b) { return a.b->push({op_kind::sub, a.i, b.i}); }
    friend node operator*(node a, node b) { return a.b->push({op_kind::mul, a.i, b.i}); }
    friend node operator/(node a, node b) { return a.b->push({op_kind::div, a.i, b.i}); }
    friend node operator-(node a) { return a.b->push({op_kind::neg, a.i}); }
    friend node sqrt(node a) { return a.b->push({op_kind::sqrt_op, a.i}); }
    friend node sqr(node a) { return a.b->push({op_kind::sqr_op, a.i}); }

    void output(node n) { p_.outputs.push_back(n.i); }

    program take() { return std::move(p_); }

private:
    node push(tape_op op) {
        p_.ops.push_back(op);
        return node{this, int(p_.ops.size()) - 1};
    }
    program p_;
};

// signed coordinate permutation; enough for every symmetry the two systems use
struct signed_perm {
    std::vector<int> perm;  // image index per coordinate
    std::vector<int> sign;  // +1 / -1
    bool time_reversing = false;

    template <class V>
    V apply(const V& x) const {
        V r = x;
        for (std::size_t i = 0; i < perm.size(); ++i) {
            r[std::size_t(perm[i])] = sign[i] > 0 ? x[i] : -x[i];
        }
        return r;
    }

    signed_perm compose(const signed_perm& o) const {
        // (this ∘ o)(x) = this(o(x))
        signed_perm r;
        r.perm.resize(perm.size());
        r.sign.resize(perm.size());
        r.time_reversing = time_reversing != o.time_reversing;
        for (std::size_t i = 0; i < perm.size(); ++i) {
            r.perm[i] = perm[std::size_t(o.perm[i])];
            r.sign[i] = o.sign[i] * sign[std::size_t(o.perm[i])];
        }
        return r;
    }

    bool is_identity() const {
        for (std::size_t i = 0; i < perm.size(); ++i)
            if (perm[i] != int(i) || sign[i] != 1) return false;
        return !time_reversing;
    }

    friend bool operator==(const signed_perm& a, const signed_perm& b) {
        return a.perm == b.perm && a.sign == b.sign && a.time_reversing == b.time_reversing;
    }
};

struct vector_field {
    int n = 0; // state dimension
    int m = 0; // parameter dimension
    program rhs;
    std::optional<program> first_integral;
    std::vector<std::pair<std::string, signed_perm>> symmetries;
    int default_section_coord = -1;

    const signed_perm* symmetry(const std::string& name) const {
        for (auto& [nm, s] : symmetries)
            if (nm == name) return &s;
        return nullptr;
    }
};

} // namespace symbif
