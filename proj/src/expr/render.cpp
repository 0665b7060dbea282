#include <cmath>
#include <string>
#include <unordered_map>

#include "dg4/expr.hpp"
#include "node.hpp"

namespace dg4 {

namespace {

// Binding strength of the grammar level an expression renders at.
enum Level { kSum = 1, kTerm = 2, kFactor = 3, kBase = 4 };

Level level_of(const Expr& e) {
    switch (e.op()) {
        case Op::Const: {
            const Constant& c = e.constant_value();
            if (c.is_exact() && c.den() != 1) return kTerm;
            return kBase;
        }
        case Op::Add:
        case Op::Sub:
            return kSum;
        case Op::Mul:
        case Op::Div:
            return kTerm;
        case Op::Pow:
            return e.exponent() < 0 ? kTerm : kFactor;
        default:
            return kBase;
    }
}

struct TooLong {};

class Renderer {
public:
    explicit Renderer(std::size_t limit = std::string::npos) : limit_(limit) {}

    std::string run(const Expr& e) {
        std::string out;
        emit(e, out);
        return out;
    }

private:
    std::size_t limit_;
    std::unordered_map<const Node*, std::string> memo_;

    void wrap(const Expr& e, Level need, std::string& out) {
        if (level_of(e) < need) {
            out += '(';
            emit(e, out);
            out += ')';
        } else {
            emit(e, out);
        }
    }

    void emit(const Expr& e, std::string& out) {
        if (e.arity() > 0) {
            if (auto it = memo_.find(e.id()); it != memo_.end()) {
                out += it->second;
                return;
            }
        }
        std::string s;
        switch (e.op()) {
            case Op::Const:
                s = e.constant_value().str();
                break;
            case Op::Var:
                s = "x" + std::to_string(e.var_index() + 1);
                break;
            case Op::Neg:
                s = "-";
                wrap(e.child(0), kBase, s);
                break;
            case Op::Add:
            case Op::Sub:
                wrap(e.child(0), kSum, s);
                s += e.op() == Op::Add ? " + " : " - ";
                wrap(e.child(1), kTerm, s);
                break;
            case Op::Mul:
            case Op::Div:
                wrap(e.child(0), kTerm, s);
                s += e.op() == Op::Mul ? "*" : "/";
                wrap(e.child(1), kFactor, s);
                break;
            case Op::Pow:
                if (e.exponent() < 0) {
                    s = "1/";
                    std::string inner;
                    wrap(e.child(0), kBase, inner);
                    if (e.exponent() != -1) inner += "^" + std::to_string(-e.exponent());
                    s += e.exponent() == -1 ? inner : "(" + inner + ")";
                } else {
                    wrap(e.child(0), kBase, s);
                    s += "^" + std::to_string(e.exponent());
                }
                break;
            case Op::Atan2:
                s = "atan2(";
                emit(e.child(0), s);
                s += ", ";
                emit(e.child(1), s);
                s += ")";
                break;
            default: {
                static const char* names[] = {"sin", "cos", "exp", "ln", "sqrt"};
                s = names[static_cast<int>(e.op()) - static_cast<int>(Op::Sin)];
                s += "(";
                emit(e.child(0), s);
                s += ")";
            }
        }
        if (s.size() > limit_) throw TooLong{};
        if (e.arity() > 0) memo_.emplace(e.id(), s);
        out += s;
        if (out.size() > limit_) throw TooLong{};
    }
};

}  // namespace

std::string render(const Expr& e) { return Renderer().run(e); }

std::string render_clipped(const Expr& e, std::size_t max_chars) {
    try {
        return Renderer(max_chars).run(e);
    } catch (const TooLong&) {
        return "<expression with " + std::to_string(node_count(e)) + " nodes>";
    }
}

}  // namespace dg4
