#include <cctype>
#include <charconv>
#include <cstdlib>
#include <string>

#include "dg4/expr.hpp"

namespace dg4 {

namespace {

class Parser {
public:
    Parser(std::string_view text, int n_vars, ParseOptions opt) : s_(text), n_(n_vars), opt_(opt) {}

    Expr run() {
        Expr e = expr();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
    int n_;
    ParseOptions opt_;
    int depth_ = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError(msg, pos_); }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            if (pos_ >= s_.size()) fail(std::string("expected '") + c + "' but input ended");
            fail(std::string("expected '") + c + "'");
        }
    }

    Expr expr() {
        if (++depth_ > 2000) fail("expression nested too deeply");
        Expr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = Expr::raw(Op::Add, lhs, term());
            else if (accept('-'))
                lhs = Expr::raw(Op::Sub, lhs, term());
            else
                break;
        }
        --depth_;
        return lhs;
    }

    Expr term() {
        Expr lhs = factor();
        for (;;) {
            if (accept('*'))
                lhs = Expr::raw(Op::Mul, lhs, factor());
            else if (accept('/'))
                lhs = Expr::raw(Op::Div, lhs, factor());
            else
                break;
        }
        return lhs;
    }

    Expr factor() {
        Expr b = base();
        if (accept('^')) {
            skip_ws();
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            if (start == pos_) fail("expected integer exponent");
            int k = 0;
            auto [p, ec] = std::from_chars(s_.data() + start, s_.data() + pos_, k);
            if (ec != std::errc() || k > 1000000) {
                pos_ = start;
                fail("exponent out of range");
            }
            b = Expr::raw(Op::Pow, b, Expr(), k);
        }
        return b;
    }

    Expr base() {
        if (++depth_ > 2000) fail("expression nested too deeply");
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        char c = s_[pos_];
        Expr out;
        if (c == '-') {
            ++pos_;
            out = Expr::raw(Op::Neg, base());
        } else if (c == '(') {
            ++pos_;
            out = expr();
            expect(')');
        } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            out = number();
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            out = identifier();
        } else {
            fail("unexpected '" + std::string(1, c) + "'");
        }
        --depth_;
        return out;
    }

    Expr number() {
        std::size_t start = pos_;
        bool decimal = false;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ < s_.size() && s_[pos_] == '.') {
            decimal = true;
            ++pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        }
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                decimal = true;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            } else {
                pos_ = save;
            }
        }
        std::string tok(s_.substr(start, pos_ - start));
        if (tok == ".") {
            pos_ = start;
            fail("malformed number");
        }
        if (!decimal) {
            std::int64_t v = 0;
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec == std::errc() && p == tok.data() + tok.size()) return Expr::integer(v);
        }
        return Expr::real(std::strtod(tok.c_str(), nullptr));
    }

    Expr identifier() {
        std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        std::string name(s_.substr(start, pos_ - start));

        if (name == "sin" || name == "cos" || name == "exp" || name == "ln" || name == "sqrt" ||
            name == "atan2") {
            skip_ws();
            if (pos_ >= s_.size() || s_[pos_] != '(') fail("expected '(' after " + name);
            ++pos_;
            Expr a = expr();
            if (name == "atan2") {
                expect(',');
                Expr b = expr();
                expect(')');
                return Expr::raw(Op::Atan2, a, b);
            }
            expect(')');
            Op op = name == "sin"   ? Op::Sin
                    : name == "cos" ? Op::Cos
                    : name == "exp" ? Op::Exp
                    : name == "ln"  ? Op::Ln
                                    : Op::Sqrt;
            return Expr::raw(op, a);
        }
        if (name == "t" && opt_.t_alias) return Expr::var(0);
        if (name.size() >= 2 && name[0] == 'x' && name[1] != '0') {
            int k = 0;
            auto [p, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), k);
            if (ec == std::errc() && p == name.data() + name.size() && k >= 1 && k <= n_)
                return Expr::var(k - 1);
        }
        throw UnknownVariable(name, start);
    }
};

}  // namespace

Expr parse(std::string_view text, int n_vars, ParseOptions options) {
    return Parser(text, n_vars, options).run();
}

}  // namespace dg4
