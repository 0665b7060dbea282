#pragma once

#include <cstdint>
#include <memory>

#include "dg4/expr.hpp"

namespace dg4 {

struct Node {
    Op op = Op::Const;
    int ival = 0;  // variable index or integer exponent
    Constant value;
    std::shared_ptr<const Node> a;
    std::shared_ptr<const Node> b;
    std::uint64_t hash = 0;
    std::uint64_t mask = 0;
};

class ExprFactory {
public:
    static Expr intern(Op op, int ival, const Constant& value, const Expr& a, const Expr& b);
    static const std::shared_ptr<const Node>& ptr(const Expr& e) { return e.node_; }
    static Expr wrap(std::shared_ptr<const Node> n) { return Expr(std::move(n)); }
};

inline std::uint64_t mix_hash(std::uint64_t h, std::uint64_t v) {
    v *= 0x9E3779B97F4A7C15ull;
    v ^= v >> 32;
    h ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    return h;
}

}  // namespace dg4
