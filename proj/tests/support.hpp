#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "dg4/expr.hpp"

namespace dg4::testing {

// Random smooth expression on R^n, built with raw nodes so no folding hides structure.
// With `entire` set, only polynomial and sin/cos/exp nodes are produced.
class ExprGen {
public:
    ExprGen(int n_vars, std::uint64_t seed, bool entire = false) : n_(n_vars), entire_(entire), rng_(seed) {}

    Expr make(int depth) {
        if (depth == 0 || pick(4) == 0) return leaf();
        int op = pick(9);
        if (entire_ && (op == 3 || op == 8)) op = 2;
        switch (op) {
            case 0: return Expr::raw(Op::Add, make(depth - 1), make(depth - 1));
            case 1: return Expr::raw(Op::Sub, make(depth - 1), make(depth - 1));
            case 2: return Expr::raw(Op::Mul, make(depth - 1), make(depth - 1));
            case 3:
                return Expr::raw(Op::Div, make(depth - 1),
                                 Expr::raw(Op::Add, Expr::integer(2), Expr::raw(Op::Cos, make(depth - 1))));
            case 4: return Expr::raw(Op::Pow, make(depth - 1), Expr(), 2 + pick(2));
            case 5: return Expr::raw(Op::Sin, make(depth - 1));
            case 6: return Expr::raw(Op::Cos, make(depth - 1));
            case 7: return Expr::raw(Op::Exp, Expr::raw(Op::Sin, make(depth - 1)));
            default:
                return Expr::raw(Op::Sqrt, Expr::raw(Op::Add, Expr::integer(1),
                                                     Expr::raw(Op::Pow, make(depth - 1), Expr(), 2)));
        }
    }

    std::vector<double> point(double lo = -1.0, double hi = 1.0) {
        std::uniform_real_distribution<double> u(lo, hi);
        std::vector<double> p(static_cast<std::size_t>(n_));
        for (double& v : p) v = u(rng_);
        return p;
    }

    int pick(int k) { return std::uniform_int_distribution<int>(0, k - 1)(rng_); }

    std::mt19937_64& rng() { return rng_; }

private:
    int n_;
    bool entire_;
    std::mt19937_64 rng_;

    Expr leaf() {
        if (pick(3) == 0) {
            int k = pick(5) - 2;
            return k < 0 ? Expr::raw(Op::Neg, Expr::integer(-k)) : Expr::integer(k);
        }
        return Expr::var(pick(n_));
    }
};

// Central difference with one Richardson step.
inline double fd(const Expr& e, int var, std::vector<double> x, double h = 1e-3) {
    auto central = [&](double step) {
        std::vector<double> a = x, b = x;
        a[static_cast<std::size_t>(var)] += step;
        b[static_cast<std::size_t>(var)] -= step;
        return (eval(e, a) - eval(e, b)) / (2 * step);
    };
    return (4 * central(h / 2) - central(h)) / 3;
}

}  // namespace dg4::testing
