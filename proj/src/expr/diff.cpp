#include <unordered_map>
#include <unordered_set>

#include "cache.hpp"
#include "dg4/expr.hpp"

namespace dg4 {

namespace {

WeakMemo& diff_memo() {
    static auto* m = new WeakMemo();
    return *m;
}

class Differ {
public:
    explicit Differ(int var) : v_(var) {}

    Expr d(const Expr& e) {
        if (!e.depends_on(v_)) return Expr();
        if (e.op() == Op::Var) return Expr::integer(1);
        if (auto it = local_.find(e.id()); it != local_.end()) return it->second;
        if (auto hit = diff_memo().find(e, v_)) {
            local_.emplace(e.id(), *hit);
            return *hit;
        }
        Expr r = rule(e);
        local_.emplace(e.id(), r);
        diff_memo().store(e, v_, r);
        return r;
    }

private:
    int v_;
    std::unordered_map<const Node*, Expr> local_;

    Expr rule(const Expr& e) {
        const Expr a = e.child(0);
        switch (e.op()) {
            case Op::Neg:
                return -d(a);
            case Op::Add:
                return d(a) + d(e.child(1));
            case Op::Sub:
                return d(a) - d(e.child(1));
            case Op::Mul: {
                const Expr b = e.child(1);
                return d(a) * b + a * d(b);
            }
            case Op::Div: {
                const Expr b = e.child(1);
                Expr da = d(a), db = d(b);
                if (db.is_zero()) return da / b;
                return (da * b - a * db) / pow(b, 2);
            }
            case Op::Pow: {
                int k = e.exponent();
                return Expr::integer(k) * pow(a, k - 1) * d(a);
            }
            case Op::Sin:
                return cos(a) * d(a);
            case Op::Cos:
                return -(sin(a) * d(a));
            case Op::Exp:
                return e * d(a);
            case Op::Ln:
                return d(a) / a;
            case Op::Sqrt:
                return d(a) / (Expr::integer(2) * e);
            case Op::Atan2: {
                const Expr x = e.child(1);
                return (x * d(a) - a * d(x)) / (pow(x, 2) + pow(a, 2));
            }
            default:
                return Expr();
        }
    }
};

Expr rebuild(const Expr& e, const Expr& a, const Expr& b) {
    switch (e.op()) {
        case Op::Neg: return -a;
        case Op::Add: return a + b;
        case Op::Sub: return a - b;
        case Op::Mul: return a * b;
        case Op::Div: return a / b;
        case Op::Pow: return pow(a, e.exponent());
        case Op::Sin: return sin(a);
        case Op::Cos: return cos(a);
        case Op::Exp: return exp(a);
        case Op::Ln: return ln(a);
        case Op::Sqrt: return sqrt(a);
        case Op::Atan2: return atan2(a, b);
        default: return e;
    }
}

}  // namespace

Expr diff(const Expr& e, int var) {
    if (var < 0 || var >= 64) throw Error(ErrorCode::InvalidArgument, "differentiation variable out of range");
    return Differ(var).d(e);
}

Expr substitute(const Expr& e, std::span<const Expr> replacements) {
    std::uint64_t touched = 0;
    for (std::size_t i = 0; i < replacements.size() && i < 64; ++i) {
        if (replacements[i] != Expr::var(static_cast<int>(i))) touched |= std::uint64_t{1} << i;
    }
    std::unordered_map<const Node*, Expr> memo;
    auto go = [&](auto&& self, const Expr& x) -> Expr {
        if ((x.var_mask() & touched) == 0) return x;
        if (x.op() == Op::Var) return replacements[x.var_index()];
        if (auto it = memo.find(x.id()); it != memo.end()) return it->second;
        Expr a = self(self, x.child(0));
        Expr b = x.arity() == 2 ? self(self, x.child(1)) : Expr();
        Expr r = rebuild(x, a, b);
        memo.emplace(x.id(), r);
        return r;
    };
    return go(go, e);
}

std::size_t node_count(std::span<const Expr> roots) {
    std::unordered_set<const Node*> seen;
    std::vector<Expr> stack(roots.begin(), roots.end());
    while (!stack.empty()) {
        Expr x = stack.back();
        stack.pop_back();
        if (!seen.insert(x.id()).second) continue;
        for (int i = 0; i < x.arity(); ++i) stack.push_back(x.child(i));
    }
    return seen.size();
}

std::size_t node_count(const Expr& e) { return node_count(std::span<const Expr>(&e, 1)); }

}  // namespace dg4
