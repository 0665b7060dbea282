#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dg4/error.hpp"

namespace dg4 {

/// Scalar literal: an exact rational while it fits in 64-bit numerator and
/// denominator, otherwise a double. Arithmetic degrades to double on overflow.
class Constant {
public:
    Constant() = default;
    static Constant exact(std::int64_t num, std::int64_t den = 1);
    static Constant real(double v);

    bool is_exact() const noexcept { return exact_; }
    std::int64_t num() const noexcept { return num_; }
    std::int64_t den() const noexcept { return den_; }
    double value() const noexcept;

    bool is_zero() const noexcept;
    bool is_one() const noexcept;
    bool is_minus_one() const noexcept;
    bool is_integer() const noexcept { return exact_ && den_ == 1; }
    int sign() const noexcept;

    Constant operator-() const;
    friend Constant operator+(const Constant& a, const Constant& b);
    friend Constant operator-(const Constant& a, const Constant& b);
    friend Constant operator*(const Constant& a, const Constant& b);
    /// Caller guarantees b is nonzero.
    friend Constant operator/(const Constant& a, const Constant& b);
    Constant pow(int k) const;
    /// Exact square root when both numerator and denominator are perfect squares.
    std::optional<Constant> exact_sqrt() const;

    /// Identity comparison (exact vs real literals are distinct).
    bool same_as(const Constant& o) const noexcept;
    /// Total order used for canonical sorting.
    bool less_than(const Constant& o) const noexcept;

    std::string str() const;
    std::uint64_t hash() const noexcept;

private:
    bool exact_ = true;
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
    double real_ = 0.0;
};

enum class Op : std::uint8_t {
    Const,
    Var,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Atan2,
};

struct Node;

/// Immutable, hash-consed expression DAG over chart coordinates x1..xn
/// (0-based variable indices internally). Structurally equal expressions
/// share one node, so equality is pointer comparison.
class Expr {
public:
    Expr();  // the exact constant 0

    static Expr constant(const Constant& c);
    static Expr integer(std::int64_t k) { return constant(Constant::exact(k)); }
    static Expr rational(std::int64_t p, std::int64_t q) { return constant(Constant::exact(p, q)); }
    static Expr real(double v) { return constant(Constant::real(v)); }
    static Expr var(int index);

    /// Builds a node without any algebraic folding (used by the parser so that
    /// parsed trees mirror the input text).
    static Expr raw(Op op, const Expr& a, const Expr& b = Expr(), int exponent = 0);

    Op op() const noexcept;
    int var_index() const noexcept;
    int exponent() const noexcept;
    const Constant& constant_value() const noexcept;
    int arity() const noexcept;
    Expr child(int i) const;

    bool is_const() const noexcept { return op() == Op::Const; }
    bool is_zero() const noexcept;
    bool is_one() const noexcept;
    /// Bit i set when variable i occurs.
    std::uint64_t var_mask() const noexcept;
    bool depends_on(int var) const noexcept { return (var_mask() >> var) & 1u; }
    std::uint64_t hash() const noexcept;
    const Node* id() const noexcept { return node_.get(); }

    friend bool operator==(const Expr& a, const Expr& b) noexcept { return a.node_ == b.node_; }
    friend bool operator!=(const Expr& a, const Expr& b) noexcept { return a.node_ != b.node_; }

private:
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
    friend struct Node;
    friend class ExprFactory;
};

// Algebraic constructors. These fold constants and apply 0/1 identities, but
// never change the domain of definition in a way that would hide a pole.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& a, int k);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr ln(const Expr& a);
Expr sqrt(const Expr& a);
Expr atan2(const Expr& y, const Expr& x);

inline Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
inline Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }
inline Expr& operator*=(Expr& a, const Expr& b) { return a = a * b; }

struct ParseOptions {
    /// Accept `t` as an alias for x1 (four-variable procomplex charts).
    bool t_alias = false;
};

/// Parses the expression grammar. Integer literals become exact constants;
/// decimal literals become doubles. Throws SyntaxError / UnknownVariable.
Expr parse(std::string_view text, int n_vars, ParseOptions options = {});

/// Text form accepted back by parse(). Exact rationals p/q print as "p/q".
std::string render(const Expr& e);
/// render() clipped to `max_chars`; longer outputs are replaced by a size note.
std::string render_clipped(const Expr& e, std::size_t max_chars);

/// Exact partial derivative with respect to variable `var`.
Expr diff(const Expr& e, int var);

/// Canonical rational-function normal form over the non-polynomial atoms:
/// constant folding, like-term collection, common denominators, and the
/// rewrite cos(u)^2 -> 1 - sin(u)^2. Falls back to the input when expansion
/// would exceed an internal size budget.
Expr simplify(const Expr& e);

/// Replaces variable i by replacements[i] (variables beyond the span stay).
Expr substitute(const Expr& e, std::span<const Expr> replacements);

/// Number of distinct DAG nodes.
std::size_t node_count(const Expr& e);
std::size_t node_count(std::span<const Expr> roots);

/// Compiled straight-line program for a batch of expressions sharing
/// subterms. Evaluation is read-only and safe to call concurrently.
class Evaluator {
public:
    Evaluator() = default;
    explicit Evaluator(std::span<const Expr> roots);
    explicit Evaluator(const std::vector<Expr>& roots)
        : Evaluator(std::span<const Expr>(roots.data(), roots.size())) {}

    std::size_t size() const noexcept { return outputs_.size(); }

    struct Batch {
        std::vector<double> values;
        /// -1 when the root evaluated cleanly; otherwise an opaque fault id.
        std::vector<int> fault;
        bool ok() const;
    };

    Batch evaluate(std::span<const double> x) const;
    /// Throws EvalError when any root fails.
    std::vector<double> operator()(std::span<const double> x) const;
    EvalError error_for(int fault) const;

private:
    struct Instr {
        Op op;
        int a = -1;
        int b = -1;
        int ival = 0;
        double c = 0.0;
    };
    std::vector<Instr> code_;
    std::vector<int> outputs_;
    std::vector<Expr> keep_;  // nodes referenced by code_, for error locations
    int max_var_ = -1;
};

/// Convenience: single expression, throws EvalError / ChartMismatch.
double eval(const Expr& e, std::span<const double> x);

}  // namespace dg4
