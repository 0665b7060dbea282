#include <cmath>
#include <unordered_map>

#include "dg4/expr.hpp"
#include "node.hpp"

namespace dg4 {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::SyntaxError: return "SyntaxError";
        case ErrorCode::UnknownVariable: return "UnknownVariable";
        case ErrorCode::DivisionByZero: return "DivisionByZero";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::ChartMismatch: return "ChartMismatch";
        case ErrorCode::DegreeError: return "DegreeError";
        case ErrorCode::DegreeOverflow: return "DegreeOverflow";
        case ErrorCode::DegenerateSymplectic: return "DegenerateSymplectic";
        case ErrorCode::NotClosed: return "NotClosed";
        case ErrorCode::RankDrop: return "RankDrop";
        case ErrorCode::NotGeneralPosition: return "NotGeneralPosition";
        case ErrorCode::AmbiguousKernel: return "AmbiguousKernel";
        case ErrorCode::InvalidStructure: return "InvalidStructure";
        case ErrorCode::NijenhuisVanishes: return "NijenhuisVanishes";
        case ErrorCode::DerivedDegenerate: return "DerivedDegenerate";
        case ErrorCode::ComplexEigenvalues: return "ComplexEigenvalues";
        case ErrorCode::NotASymmetry: return "NotASymmetry";
        case ErrorCode::FrameDependent: return "FrameDependent";
        case ErrorCode::ProjectionDegenerate: return "ProjectionDegenerate";
        case ErrorCode::NotNormalized: return "NotNormalized";
        case ErrorCode::TypeMismatch: return "TypeMismatch";
        case ErrorCode::DegeneratePoint: return "DegeneratePoint";
        case ErrorCode::FrameSingular: return "FrameSingular";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

Evaluator::Evaluator(std::span<const Expr> roots) {
    std::unordered_map<const Node*, int> slot;
    // Iterative post-order so deep trees do not exhaust the stack.
    std::vector<std::pair<Expr, int>> stack;
    for (const Expr& root : roots) {
        stack.emplace_back(root, 0);
        while (!stack.empty()) {
            auto& [x, state] = stack.back();
            if (slot.count(x.id())) {
                stack.pop_back();
                continue;
            }
            if (state < x.arity()) {
                Expr c = x.child(state++);
                if (!slot.count(c.id())) stack.emplace_back(c, 0);
                continue;
            }
            Instr ins{x.op()};
            if (x.arity() >= 1) ins.a = slot.at(x.child(0).id());
            if (x.arity() >= 2) ins.b = slot.at(x.child(1).id());
            if (x.op() == Op::Const) ins.c = x.constant_value().value();
            if (x.op() == Op::Var) {
                ins.ival = x.var_index();
                max_var_ = std::max(max_var_, ins.ival);
            }
            if (x.op() == Op::Pow) ins.ival = x.exponent();
            slot.emplace(x.id(), static_cast<int>(code_.size()));
            code_.push_back(ins);
            keep_.push_back(x);
            stack.pop_back();
        }
        outputs_.push_back(slot.at(root.id()));
    }
}

bool Evaluator::Batch::ok() const {
    for (int f : fault)
        if (f >= 0) return false;
    return true;
}

// Fault ids encode the failing instruction and whether it was a pole.
Evaluator::Batch Evaluator::evaluate(std::span<const double> x) const {
    if (max_var_ >= static_cast<int>(x.size()))
        throw Error(ErrorCode::ChartMismatch, "point has " + std::to_string(x.size()) +
                                                  " coordinates but expression uses x" +
                                                  std::to_string(max_var_ + 1));
    std::vector<double> v(code_.size());
    std::vector<int> f(code_.size(), -1);
    for (std::size_t i = 0; i < code_.size(); ++i) {
        const Instr& in = code_[i];
        int fa = in.a >= 0 ? f[in.a] : -1;
        int fb = in.b >= 0 ? f[in.b] : -1;
        if (fa >= 0 || fb >= 0) {
            f[i] = fa >= 0 ? fa : fb;
            continue;
        }
        double a = in.a >= 0 ? v[in.a] : 0.0;
        double b = in.b >= 0 ? v[in.b] : 0.0;
        double r = 0.0;
        bool pole = false, domain = false;
        switch (in.op) {
            case Op::Const: r = in.c; break;
            case Op::Var: r = x[in.ival]; break;
            case Op::Neg: r = -a; break;
            case Op::Add: r = a + b; break;
            case Op::Sub: r = a - b; break;
            case Op::Mul: r = a * b; break;
            case Op::Div:
                if (b == 0.0)
                    pole = true;
                else
                    r = a / b;
                break;
            case Op::Pow:
                if (in.ival < 0 && a == 0.0)
                    pole = true;
                else if (in.ival == 2)
                    r = a * a;
                else
                    r = std::pow(a, in.ival);
                break;
            case Op::Sin: r = std::sin(a); break;
            case Op::Cos: r = std::cos(a); break;
            case Op::Exp: r = std::exp(a); break;
            case Op::Ln:
                if (a <= 0.0)
                    domain = true;
                else
                    r = std::log(a);
                break;
            case Op::Sqrt:
                if (a < 0.0)
                    domain = true;
                else
                    r = std::sqrt(a);
                break;
            case Op::Atan2:
                if (a == 0.0 && b == 0.0)
                    domain = true;
                else
                    r = std::atan2(a, b);
                break;
        }
        if (!pole && !domain && !std::isfinite(r)) domain = true;
        if (pole)
            f[i] = static_cast<int>(2 * i + 1);
        else if (domain)
            f[i] = static_cast<int>(2 * i);
        else
            v[i] = r;
    }
    Batch out;
    out.values.resize(outputs_.size());
    out.fault.resize(outputs_.size());
    for (std::size_t k = 0; k < outputs_.size(); ++k) {
        out.values[k] = v[outputs_[k]];
        out.fault[k] = f[outputs_[k]];
        if (out.fault[k] >= 0) out.values[k] = std::nan("");
    }
    return out;
}

EvalError Evaluator::error_for(int fault) const {
    const Expr& at = keep_.at(static_cast<std::size_t>(fault / 2));
    return EvalError(fault % 2 ? ErrorCode::DivisionByZero : ErrorCode::DomainError,
                     render_clipped(at, 200));
}

std::vector<double> Evaluator::operator()(std::span<const double> x) const {
    Batch b = evaluate(x);
    for (int f : b.fault)
        if (f >= 0) throw error_for(f);
    return std::move(b.values);
}

double eval(const Expr& e, std::span<const double> x) {
    Evaluator ev(std::span<const Expr>(&e, 1));
    return ev(x)[0];
}

}  // namespace dg4
