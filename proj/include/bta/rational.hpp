#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bta {

/// Exact rational number with 64-bit numerator/denominator, always kept
/// normalized (gcd 1, positive denominator). Flop tallies and the flop
/// model use these so that table comparisons are equality checks, not
/// float-tolerance checks. Magnitudes stay tiny (denominators are 1, 2,
/// 3 or 6 in practice), so plain int64 arithmetic is sufficient.
class Rational
{
public:
    constexpr Rational() = default;

    Rational(std::int64_t num, std::int64_t den = 1) : num_(num), den_(den)
    {
        if (den_ == 0) { throw std::invalid_argument("Rational: zero denominator"); }
        normalize();
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    bool is_integer() const { return den_ == 1; }

    friend Rational operator+(const Rational& a, const Rational& b)
    {
        return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b)
    {
        return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b)
    {
        return Rational(a.num_ * b.num_, a.den_ * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b)
    {
        if (b.num_ == 0) { throw std::invalid_argument("Rational: division by zero"); }
        return Rational(a.num_ * b.den_, a.den_ * b.num_);
    }

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }

    friend bool operator==(const Rational& a, const Rational& b)
    {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b)
    {
        return a.num_ * b.den_ < b.num_ * a.den_;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    /// "p/q" or just "p" for integers.
    std::string str() const
    {
        if (den_ == 1) { return std::to_string(num_); }
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

private:
    void normalize()
    {
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        const std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
        if (num_ == 0) { den_ = 1; }
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

inline Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }

} // namespace bta
