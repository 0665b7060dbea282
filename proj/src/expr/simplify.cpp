#include <algorithm>
#include <map>
#include <unordered_map>

#include "cache.hpp"
#include "dg4/expr.hpp"

namespace dg4 {

namespace {

constexpr std::size_t kMaxTerms = 4000;
constexpr std::size_t kWorkBudget = 200000;

struct Overflow {};

// Monomial operations spent by the current simplify call.
thread_local std::size_t work_done = 0;

struct Atom {
    std::uint64_t order;
    const Node* node;
    bool operator<(const Atom& o) const noexcept {
        return order != o.order ? order < o.order : node < o.node;
    }
    bool operator==(const Atom& o) const noexcept { return node == o.node; }
};

// The total degree is cached on first use; monomials are not modified after
// they become map keys.
struct Monomial : std::vector<std::pair<Atom, int>> {
    using std::vector<std::pair<Atom, int>>::vector;
    mutable int deg = -1;
};

int degree(const Monomial& m) {
    if (m.deg < 0) {
        int d = 0;
        for (const auto& [a, e] : m) d += e;
        m.deg = d;
    }
    return m.deg;
}

struct MonoLess {
    bool operator()(const Monomial& x, const Monomial& y) const noexcept {
        int dx = degree(x), dy = degree(y);
        if (dx != dy) return dx > dy;
        std::size_t n = std::min(x.size(), y.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (!(x[i].first == y[i].first)) return x[i].first < y[i].first;
            if (x[i].second != y[i].second) return x[i].second > y[i].second;
        }
        return x.size() > y.size();
    }
};

using Poly = std::map<Monomial, Constant, MonoLess>;

Monomial mono_mul(const Monomial& x, const Monomial& y) {
    Monomial out;
    out.reserve(x.size() + y.size());
    std::size_t i = 0, j = 0;
    while (i < x.size() || j < y.size()) {
        if (j == y.size() || (i < x.size() && x[i].first < y[j].first)) {
            out.push_back(x[i++]);
        } else if (i == x.size() || y[j].first < x[i].first) {
            out.push_back(y[j++]);
        } else {
            out.emplace_back(x[i].first, x[i].second + y[j].second);
            ++i;
            ++j;
        }
    }
    return out;
}

void add_term(Poly& p, const Monomial& m, const Constant& c) {
    if (++work_done > kWorkBudget) throw Overflow{};
    if (c.is_zero()) return;
    auto [it, inserted] = p.emplace(m, c);
    if (!inserted) {
        it->second = it->second + c;
        if (it->second.is_zero()) p.erase(it);
    }
    if (p.size() > kMaxTerms) throw Overflow{};
}

Poly poly_const(const Constant& c) {
    Poly p;
    add_term(p, {}, c);
    return p;
}

Poly poly_add(const Poly& x, const Poly& y, bool subtract) {
    Poly out = x;
    for (const auto& [m, c] : y) add_term(out, m, subtract ? -c : c);
    return out;
}

Poly poly_mul(const Poly& x, const Poly& y) {
    if (x.size() * y.size() > 8 * kMaxTerms || work_done + x.size() * y.size() > kWorkBudget) throw Overflow{};
    Poly out;
    for (const auto& [mx, cx] : x)
        for (const auto& [my, cy] : y) add_term(out, mono_mul(mx, my), cx * cy);
    return out;
}

Poly poly_scale(const Poly& x, const Constant& c) {
    Poly out;
    for (const auto& [m, v] : x) add_term(out, m, v * c);
    return out;
}

bool is_constant(const Poly& p) { return p.empty() || (p.size() == 1 && p.begin()->first.empty()); }

Constant constant_of(const Poly& p) { return p.empty() ? Constant::exact(0) : p.begin()->second; }

struct Rational {
    Poly num;
    Poly den;
};

class Simplifier {
public:
    Expr run(const Expr& e) { return to_expr(nf(e)); }

private:
    std::unordered_map<const Node*, Rational> memo_;
    std::unordered_map<const Node*, Expr> atoms_;

    Atom atom(const Expr& e) {
        atoms_.emplace(e.id(), e);
        std::uint64_t order =
            e.op() == Op::Var ? static_cast<std::uint64_t>(e.var_index()) : ((e.hash() >> 1) | (1ull << 63));
        return Atom{order, e.id()};
    }

    Rational from_atom(const Expr& e) {
        Poly p;
        add_term(p, Monomial{{atom(e), 1}}, Constant::exact(1));
        return {p, poly_const(Constant::exact(1))};
    }

    Rational lift(const Expr& e) {
        if (e.is_const()) return {poly_const(e.constant_value()), poly_const(Constant::exact(1))};
        if (e.op() == Op::Neg) {
            Rational r = lift(e.child(0));
            r.num = poly_scale(r.num, Constant::exact(-1));
            return r;
        }
        return from_atom(e);
    }

    bool reducible(const Atom& a, int k) const {
        if (k < 2) return false;
        Op op = atoms_.at(a.node).op();
        return op == Op::Cos || op == Op::Sqrt;
    }

    bool has_reducible(const Poly& p) const {
        for (const auto& [m, c] : p)
            for (const auto& [a, k] : m)
                if (reducible(a, k)) return true;
        return false;
    }

    // cos(u)^k -> cos(u)^(k mod 2) (1 - sin(u)^2)^(k/2) and sqrt(u)^k -> sqrt(u)^(k mod 2) u^(k/2).
    Rational reduce(const Poly& p) {
        Rational acc{Poly{}, poly_const(Constant::exact(1))};
        for (const auto& [m, c] : p) {
            Monomial keep;
            Rational t{poly_const(c), poly_const(Constant::exact(1))};
            for (const auto& [a, k] : m) {
                if (!reducible(a, k)) {
                    keep.emplace_back(a, k);
                    continue;
                }
                if (k % 2) keep.emplace_back(a, 1);
                const Expr& at = atoms_.at(a.node);
                Rational base;
                if (at.op() == Op::Cos) {
                    Rational s = lift(sin(at.child(0)));
                    Poly s2 = poly_mul(s.num, s.num);
                    base = {poly_add(poly_const(Constant::exact(1)), s2, true), poly_const(Constant::exact(1))};
                } else {
                    base = nf(at.child(0));
                }
                t = mul(t, power(base, k / 2));
            }
            Poly kp;
            add_term(kp, keep, Constant::exact(1));
            t = mul(t, {kp, poly_const(Constant::exact(1))});
            acc = add(acc, t, false);
        }
        return acc;
    }

    static Monomial mono_gcd(const Poly& a, const Poly& b) {
        bool first = true;
        Monomial g;
        auto fold = [&](const Monomial& m) {
            if (first) {
                g = m;
                first = false;
                return;
            }
            Monomial next;
            std::size_t j = 0;
            for (const auto& [at, e] : g) {
                while (j < m.size() && m[j].first < at) ++j;
                if (j < m.size() && m[j].first == at) next.emplace_back(at, std::min(e, m[j].second));
            }
            g = std::move(next);
        };
        for (const auto& [m, c] : a) fold(m);
        for (const auto& [m, c] : b) fold(m);
        return g;
    }

    static Poly mono_div(const Poly& p, const Monomial& g) {
        Poly out;
        for (const auto& [m, c] : p) {
            Monomial q;
            std::size_t j = 0;
            for (const auto& [at, e] : m) {
                int sub = 0;
                while (j < g.size() && g[j].first < at) ++j;
                if (j < g.size() && g[j].first == at) sub = g[j].second;
                if (e - sub > 0) q.emplace_back(at, e - sub);
            }
            out.emplace(std::move(q), c);
        }
        return out;
    }

    Rational normalize(Poly num, Poly den) {
        if (den.empty()) throw Overflow{};  // a pole of the whole rational function
        if (has_reducible(num) || has_reducible(den)) {
            Rational rd = reduce(den);
            if (rd.num.empty()) throw Overflow{};
            return mul(reduce(num), {rd.den, rd.num});
        }
        if (num.empty()) return {Poly{}, poly_const(Constant::exact(1))};
        if (is_constant(den)) return {poly_scale(num, Constant::exact(1) / constant_of(den)), poly_const(Constant::exact(1))};

        Monomial g = mono_gcd(num, den);
        if (!g.empty()) {
            num = mono_div(num, g);
            den = mono_div(den, g);
            if (is_constant(den))
                return {poly_scale(num, Constant::exact(1) / constant_of(den)), poly_const(Constant::exact(1))};
        }

        // Move square roots that divide every denominator term into the numerator.
        for (const auto& [a, k] : mono_gcd(den, Poly{})) {
            if (atoms_.at(a.node).op() != Op::Sqrt) continue;
            Poly s;
            add_term(s, Monomial{{a, 1}}, Constant::exact(1));
            return normalize(poly_mul(num, s), poly_mul(den, s));
        }

        if (num.size() == den.size()) {
            Constant ratio;
            bool proportional = true, first = true;
            for (auto i = num.begin(), j = den.begin(); i != num.end(); ++i, ++j) {
                if (i->first != j->first) {
                    proportional = false;
                    break;
                }
                Constant r = i->second / j->second;
                if (first) {
                    ratio = r;
                    first = false;
                } else if (!r.same_as(ratio)) {
                    proportional = false;
                    break;
                }
            }
            if (proportional) return {poly_const(ratio), poly_const(Constant::exact(1))};
        }

        Constant lead = den.begin()->second;
        if (!lead.is_one()) {
            Constant inv = Constant::exact(1) / lead;
            num = poly_scale(num, inv);
            den = poly_scale(den, inv);
        }
        return {std::move(num), std::move(den)};
    }

    static bool same_poly(const Poly& a, const Poly& b) {
        if (a.size() != b.size()) return false;
        for (auto i = a.begin(), j = b.begin(); i != a.end(); ++i, ++j)
            if (i->first != j->first || !i->second.same_as(j->second)) return false;
        return true;
    }

    Rational add(const Rational& x, const Rational& y, bool subtract) {
        if (same_poly(x.den, y.den)) return normalize(poly_add(x.num, y.num, subtract), x.den);
        Poly n = poly_add(poly_mul(x.num, y.den), poly_mul(y.num, x.den), subtract);
        return normalize(std::move(n), poly_mul(x.den, y.den));
    }

    Rational mul(const Rational& x, const Rational& y) {
        return normalize(poly_mul(x.num, y.num), poly_mul(x.den, y.den));
    }

    Rational inverse(const Rational& x) {
        if (x.num.empty()) throw Overflow{};
        return normalize(x.den, x.num);
    }

    Rational power(Rational base, int k) {
        if (k < 0) {
            base = inverse(base);
            k = -k;
        }
        Rational acc{poly_const(Constant::exact(1)), poly_const(Constant::exact(1))};
        while (k > 0) {
            if (k & 1) acc = mul(acc, base);
            k >>= 1;
            if (k) base = mul(base, base);
        }
        return acc;
    }

    Expr child_expr(const Expr& e, int i) { return to_expr(nf(e.child(i))); }

    Rational nf(const Expr& e) {
        if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second;
        Rational r;
        switch (e.op()) {
            case Op::Const:
                r = lift(e);
                break;
            case Op::Var:
                r = from_atom(e);
                break;
            case Op::Neg: {
                r = nf(e.child(0));
                r.num = poly_scale(r.num, Constant::exact(-1));
                break;
            }
            case Op::Add:
            case Op::Sub:
                r = add(nf(e.child(0)), nf(e.child(1)), e.op() == Op::Sub);
                break;
            case Op::Mul:
                r = mul(nf(e.child(0)), nf(e.child(1)));
                break;
            case Op::Div:
                r = mul(nf(e.child(0)), inverse(nf(e.child(1))));
                break;
            case Op::Pow:
                r = power(nf(e.child(0)), e.exponent());
                break;
            case Op::Sin: r = lift(sin(child_expr(e, 0))); break;
            case Op::Cos: r = lift(cos(child_expr(e, 0))); break;
            case Op::Exp: r = lift(exp(child_expr(e, 0))); break;
            case Op::Ln: r = lift(ln(child_expr(e, 0))); break;
            case Op::Sqrt: r = lift(sqrt(child_expr(e, 0))); break;
            case Op::Atan2: r = lift(atan2(child_expr(e, 0), child_expr(e, 1))); break;
        }
        memo_.emplace(e.id(), r);
        return r;
    }

    Expr poly_expr(const Poly& p) {
        Expr out;
        bool first = true;
        for (const auto& [m, c] : p) {
            Expr mono = Expr::integer(1);
            for (const auto& [at, k] : m) mono = mono * pow(atoms_.at(at.node), k);
            Constant mag = c.sign() < 0 ? -c : c;
            Expr term = mag.is_one() ? mono : Expr::constant(mag) * mono;
            if (first) {
                out = c.sign() < 0 ? -term : term;
                first = false;
            } else {
                out = c.sign() < 0 ? out - term : out + term;
            }
        }
        return out;
    }

    Expr to_expr(const Rational& r) {
        Expr n = poly_expr(r.num);
        if (is_constant(r.den) && constant_of(r.den).is_one()) return n;
        return n / poly_expr(r.den);
    }
};

WeakMemo& simplify_memo() {
    static auto* m = new WeakMemo();
    return *m;
}

}  // namespace

Expr simplify(const Expr& e) {
    if (e.arity() == 0) return e;
    if (auto hit = simplify_memo().find(e, 0)) return *hit;
    Expr out;
    work_done = 0;
    try {
        out = Simplifier().run(e);
    } catch (const Overflow&) {
        out = e;
    }
    simplify_memo().store(e, 0, out);
    simplify_memo().store(out, 0, out);
    return out;
}

}  // namespace dg4
