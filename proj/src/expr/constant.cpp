#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dg4/expr.hpp"
#include "node.hpp"

namespace dg4 {

namespace {

using i128 = __int128;

bool fits(i128 v) {
    return v >= static_cast<i128>(INT64_MIN) + 1 && v <= static_cast<i128>(INT64_MAX);
}

i128 gcd128(i128 a, i128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

Constant make_exact(i128 num, i128 den) {
    if (den < 0) {
        num = -num;
        den = -den;
    }
    i128 g = gcd128(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    if (fits(num) && fits(den)) return Constant::exact(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
    return Constant::real(static_cast<double>(num) / static_cast<double>(den));
}

}  // namespace

Constant Constant::exact(std::int64_t num, std::int64_t den) {
    if (den == 0) throw Error(ErrorCode::InvalidArgument, "rational constant with zero denominator");
    Constant c;
    c.exact_ = true;
    if (den < 0) {
        num = -num;
        den = -den;
    }
    std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    c.num_ = num;
    c.den_ = den;
    return c;
}

Constant Constant::real(double v) {
    Constant c;
    c.exact_ = false;
    c.real_ = (v == 0.0) ? 0.0 : v;  // fold -0.0
    return c;
}

double Constant::value() const noexcept {
    return exact_ ? static_cast<double>(num_) / static_cast<double>(den_) : real_;
}

bool Constant::is_zero() const noexcept { return exact_ ? num_ == 0 : real_ == 0.0; }
bool Constant::is_one() const noexcept { return exact_ ? (num_ == 1 && den_ == 1) : real_ == 1.0; }
bool Constant::is_minus_one() const noexcept { return exact_ ? (num_ == -1 && den_ == 1) : real_ == -1.0; }

int Constant::sign() const noexcept {
    double v = exact_ ? static_cast<double>(num_) : real_;
    return (v > 0) - (v < 0);
}

Constant Constant::operator-() const {
    if (exact_) return make_exact(-static_cast<i128>(num_), den_);
    return real(-real_);
}

Constant operator+(const Constant& a, const Constant& b) {
    if (a.exact_ && b.exact_)
        return make_exact(static_cast<i128>(a.num_) * b.den_ + static_cast<i128>(b.num_) * a.den_,
                          static_cast<i128>(a.den_) * b.den_);
    return Constant::real(a.value() + b.value());
}

Constant operator-(const Constant& a, const Constant& b) { return a + (-b); }

Constant operator*(const Constant& a, const Constant& b) {
    if (a.exact_ && b.exact_)
        return make_exact(static_cast<i128>(a.num_) * b.num_, static_cast<i128>(a.den_) * b.den_);
    return Constant::real(a.value() * b.value());
}

Constant operator/(const Constant& a, const Constant& b) {
    if (a.exact_ && b.exact_)
        return make_exact(static_cast<i128>(a.num_) * b.den_, static_cast<i128>(a.den_) * b.num_);
    return Constant::real(a.value() / b.value());
}

Constant Constant::pow(int k) const {
    if (k < 0) return Constant::exact(1) / pow(-k);
    Constant r = Constant::exact(1);
    Constant base = *this;
    while (k > 0) {
        if (k & 1) r = r * base;
        k >>= 1;
        if (k > 0) base = base * base;
    }
    return r;
}

std::optional<Constant> Constant::exact_sqrt() const {
    if (!exact_ || num_ < 0) return std::nullopt;
    auto isqrt = [](std::int64_t v) -> std::optional<std::int64_t> {
        auto r = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(v))));
        for (std::int64_t c = r > 1 ? r - 1 : 0; c <= r + 1; ++c)
            if (static_cast<i128>(c) * c == v) return c;
        return std::nullopt;
    };
    auto n = isqrt(num_);
    auto d = isqrt(den_);
    if (!n || !d) return std::nullopt;
    return Constant::exact(*n, *d);
}

bool Constant::same_as(const Constant& o) const noexcept {
    if (exact_ != o.exact_) return false;
    if (exact_) return num_ == o.num_ && den_ == o.den_;
    return std::bit_cast<std::uint64_t>(real_) == std::bit_cast<std::uint64_t>(o.real_);
}

bool Constant::less_than(const Constant& o) const noexcept {
    double x = value(), y = o.value();
    if (x != y) return x < y;
    if (exact_ != o.exact_) return exact_;
    return false;
}

std::string Constant::str() const {
    if (exact_) {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", real_);
    std::string s(buf);
    if (s.find_first_of(".eni") == std::string::npos) s += ".0";
    return s;
}

std::uint64_t Constant::hash() const noexcept {
    if (exact_) return mix_hash(mix_hash(1, static_cast<std::uint64_t>(num_)), static_cast<std::uint64_t>(den_));
    return mix_hash(2, std::bit_cast<std::uint64_t>(real_));
}

}  // namespace dg4
