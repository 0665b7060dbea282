#include <mutex>
#include <unordered_map>

#include "dg4/expr.hpp"
#include "node.hpp"

namespace dg4 {

namespace {

struct Key {
    Op op;
    int ival;
    Constant value;
    const Node* a;
    const Node* b;
    std::uint64_t hash;
};

struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept { return static_cast<std::size_t>(k.hash); }
};

struct KeyEq {
    bool operator()(const Key& x, const Key& y) const noexcept {
        return x.op == y.op && x.ival == y.ival && x.a == y.a && x.b == y.b && x.value.same_as(y.value);
    }
};

struct InternTable {
    std::mutex mu;
    std::unordered_map<Key, std::weak_ptr<const Node>, KeyHash, KeyEq> map;
    std::size_t purge_at = 1u << 16;
};

InternTable& table() {
    static auto* t = new InternTable();  // intentionally leaked: outlives static Exprs
    return *t;
}

int arity_of(Op op) {
    switch (op) {
        case Op::Const:
        case Op::Var:
            return 0;
        case Op::Neg:
        case Op::Pow:
        case Op::Sin:
        case Op::Cos:
        case Op::Exp:
        case Op::Ln:
        case Op::Sqrt:
            return 1;
        default:
            return 2;
    }
}

}  // namespace

Expr ExprFactory::intern(Op op, int ival, const Constant& value, const Expr& a, const Expr& b) {
    const int ar = arity_of(op);
    const Node* pa = ar >= 1 ? a.node_.get() : nullptr;
    const Node* pb = ar >= 2 ? b.node_.get() : nullptr;
    std::uint64_t h = mix_hash(static_cast<std::uint64_t>(op) + 1, static_cast<std::uint64_t>(ival));
    if (op == Op::Const) h = mix_hash(h, value.hash());
    if (pa) h = mix_hash(h, pa->hash);
    if (pb) h = mix_hash(h, pb->hash);

    Key key{op, ival, op == Op::Const ? value : Constant(), pa, pb, h};
    auto& t = table();
    std::lock_guard lock(t.mu);
    if (auto it = t.map.find(key); it != t.map.end()) {
        if (auto live = it->second.lock()) return Expr(std::move(live));
    }
    auto n = std::make_shared<Node>();
    n->op = op;
    n->ival = ival;
    n->value = key.value;
    if (pa) n->a = a.node_;
    if (pb) n->b = b.node_;
    n->hash = h;
    n->mask = op == Op::Var ? (std::uint64_t{1} << ival) : 0;
    if (pa) n->mask |= pa->mask;
    if (pb) n->mask |= pb->mask;
    std::shared_ptr<const Node> cn = n;
    t.map.insert_or_assign(key, cn);
    if (t.map.size() > t.purge_at) {
        for (auto it = t.map.begin(); it != t.map.end();) {
            if (it->second.expired())
                it = t.map.erase(it);
            else
                ++it;
        }
        t.purge_at = std::max<std::size_t>(1u << 16, 2 * t.map.size());
    }
    return Expr(std::move(cn));
}

Expr::Expr() : Expr(constant(Constant::exact(0))) {}

Expr Expr::constant(const Constant& c) { return ExprFactory::intern(Op::Const, 0, c, Expr(nullptr), Expr(nullptr)); }

Expr Expr::var(int index) {
    if (index < 0 || index >= 64) throw Error(ErrorCode::InvalidArgument, "variable index out of range");
    return ExprFactory::intern(Op::Var, index, Constant(), Expr(nullptr), Expr(nullptr));
}

Expr Expr::raw(Op op, const Expr& a, const Expr& b, int exponent) {
    return ExprFactory::intern(op, op == Op::Pow ? exponent : 0, Constant(), a, b);
}

Op Expr::op() const noexcept { return node_->op; }
int Expr::var_index() const noexcept { return node_->op == Op::Var ? node_->ival : -1; }
int Expr::exponent() const noexcept { return node_->op == Op::Pow ? node_->ival : 0; }
const Constant& Expr::constant_value() const noexcept { return node_->value; }
int Expr::arity() const noexcept { return arity_of(node_->op); }

Expr Expr::child(int i) const { return Expr(i == 0 ? node_->a : node_->b); }

bool Expr::is_zero() const noexcept { return node_->op == Op::Const && node_->value.is_zero(); }
bool Expr::is_one() const noexcept { return node_->op == Op::Const && node_->value.is_one(); }
std::uint64_t Expr::var_mask() const noexcept { return node_->mask; }
std::uint64_t Expr::hash() const noexcept { return node_->hash; }

// ---------------------------------------------------------------------------
// Folding constructors

namespace {

bool is_neg(const Expr& e) { return e.op() == Op::Neg; }
bool is_minus_one(const Expr& e) { return e.is_const() && e.constant_value().is_minus_one(); }

Expr make_const(const Constant& c) { return Expr::constant(c); }

}  // namespace

Expr operator-(const Expr& a) {
    if (a.is_const()) return make_const(-a.constant_value());
    if (is_neg(a)) return a.child(0);
    return Expr::raw(Op::Neg, a);
}

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_const() && b.is_const()) return make_const(a.constant_value() + b.constant_value());
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a == b) return Expr::integer(2) * a;
    if (is_neg(b)) return a - b.child(0);
    if (is_neg(a)) return b - a.child(0);
    return Expr::raw(Op::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
    if (a.is_const() && b.is_const()) return make_const(a.constant_value() - b.constant_value());
    if (b.is_zero()) return a;
    if (a.is_zero()) return -b;
    if (a == b) return Expr();
    if (is_neg(b)) return a + b.child(0);
    return Expr::raw(Op::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_const() && b.is_const()) return make_const(a.constant_value() * b.constant_value());
    if (a.is_zero() || b.is_zero()) return Expr();
    if (a.is_one()) return b;
    if (b.is_one()) return a;
    if (is_minus_one(a)) return -b;
    if (is_minus_one(b)) return -a;
    if (is_neg(a)) return -(a.child(0) * b);
    if (is_neg(b)) return -(a * b.child(0));
    if (b.is_const()) return b * a;
    if (a.is_const() && b.op() == Op::Mul && b.child(0).is_const())
        return make_const(a.constant_value() * b.child(0).constant_value()) * b.child(1);
    if (a == b) return pow(a, 2);
    return Expr::raw(Op::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
    if (b.is_zero()) return Expr::raw(Op::Div, a, b);  // surfaces as DivisionByZero
    if (a.is_const() && b.is_const()) return make_const(a.constant_value() / b.constant_value());
    if (a.is_zero()) return Expr();
    if (b.is_one()) return a;
    if (is_minus_one(b)) return -a;
    if (a == b) return Expr::integer(1);
    if (b.is_const()) return make_const(Constant::exact(1) / b.constant_value()) * a;
    if (is_neg(a)) return -(a.child(0) / b);
    if (is_neg(b)) return -(a / b.child(0));
    return Expr::raw(Op::Div, a, b);
}

Expr pow(const Expr& a, int k) {
    if (k == 0) return Expr::integer(1);
    if (k == 1) return a;
    if (a.is_const() && !(k < 0 && a.is_zero())) return make_const(a.constant_value().pow(k));
    if (k > 0 && a.op() == Op::Pow && a.exponent() > 0) return pow(a.child(0), a.exponent() * k);
    if (is_neg(a)) return (k % 2 == 0) ? pow(a.child(0), k) : -pow(a.child(0), k);
    return Expr::raw(Op::Pow, a, Expr(), k);
}

Expr sin(const Expr& a) {
    if (a.is_zero()) return Expr();
    if (is_neg(a)) return -sin(a.child(0));
    return Expr::raw(Op::Sin, a);
}

Expr cos(const Expr& a) {
    if (a.is_zero()) return Expr::integer(1);
    if (is_neg(a)) return cos(a.child(0));
    return Expr::raw(Op::Cos, a);
}

Expr exp(const Expr& a) {
    if (a.is_zero()) return Expr::integer(1);
    return Expr::raw(Op::Exp, a);
}

Expr ln(const Expr& a) {
    if (a.is_one()) return Expr();
    return Expr::raw(Op::Ln, a);
}

Expr sqrt(const Expr& a) {
    if (a.is_const()) {
        if (auto r = a.constant_value().exact_sqrt()) return make_const(*r);
    }
    // exp is positive, so these square roots are exact.
    if (a.op() == Op::Exp) return exp(a.child(0) / Expr::integer(2));
    if (a.op() == Op::Pow && a.exponent() > 0 && a.exponent() % 2 == 0 && a.child(0).op() == Op::Exp)
        return pow(a.child(0), a.exponent() / 2);
    return Expr::raw(Op::Sqrt, a);
}

Expr atan2(const Expr& y, const Expr& x) { return Expr::raw(Op::Atan2, y, x); }

}  // namespace dg4
