/// @file util.hpp
/// @brief Small shared utilities: 2-vectors, grids, hashing.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace fel {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
    // 90-degree counterclockwise rotation, (x,y) -> (-y,x)
    Vec2 perp() const { return {-y, x}; }
};

inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }

/// n points logarithmically spaced on [lo, hi], endpoints included.
inline std::vector<double> log_space(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2)
        throw std::invalid_argument("log_space: need 0 < lo < hi and n >= 2");
    std::vector<double> v(n);
    const double l0 = std::log(lo), l1 = std::log(hi);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = std::exp(l0 + (l1 - l0) * double(i) / double(n - 1));
    v.front() = lo;
    v.back() = hi;
    return v;
}

inline std::vector<double> lin_space(double lo, double hi, std::size_t n) {
    if (n < 2) throw std::invalid_argument("lin_space: n >= 2");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = lo + (hi - lo) * double(i) / double(n - 1);
    return v;
}

/// FNV-1a 64-bit hash; used for config hashes and table checksums.
struct Fnv1a64 {
    std::uint64_t state = 0xcbf29ce484222325ull;

    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state ^= p[i];
            state *= 0x100000001b3ull;
        }
    }
    void update(const std::string& s) { update(s.data(), s.size()); }
    void update(double v) { update(&v, sizeof v); }
    void update(std::uint64_t v) { update(&v, sizeof v); }
    std::uint64_t digest() const { return state; }
};

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Best rational approximation of x by continued fractions.
/// Exponent targets like 6(2/3 - 1/p) are formed in exact integer
/// arithmetic from this representation.
struct Rational {
    long long num = 0;
    long long den = 1;

    static Rational from_double(double x, double tol = 1e-12, long long max_den = 1000000) {
        const bool neg = x < 0;
        double v = std::abs(x);
        long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
        double a = v;
        for (int it = 0; it < 64; ++it) {
            long long ai = static_cast<long long>(std::floor(a));
            long long p2 = ai * p1 + p0, q2 = ai * q1 + q0;
            if (q2 > max_den) break;
            p0 = p1; q0 = q1; p1 = p2; q1 = q2;
            if (std::abs(v - double(p1) / double(q1)) < tol * std::max(1.0, v)) break;
            double frac = a - double(ai);
            if (frac < 1e-15) break;
            a = 1.0 / frac;
        }
        return {neg ? -p1 : p1, q1};
    }

    double value() const { return double(num) / double(den); }

    Rational operator-(Rational o) const { return normalized(num * o.den - o.num * den, den * o.den); }
    Rational operator*(Rational o) const { return normalized(num * o.num, den * o.den); }
    Rational inverse() const {
        if (num == 0) throw std::domain_error("Rational: inverse of zero");
        return num > 0 ? Rational{den, num} : Rational{-den, -num};
    }
    std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }

private:
    static long long gcd_ll(long long a, long long b) {
        while (b) { long long t = a % b; a = b; b = t; }
        return a < 0 ? -a : a;
    }
    static Rational normalized(long long n, long long d) {
        if (d < 0) { n = -n; d = -d; }
        long long g = gcd_ll(n == 0 ? 1 : n, d);
        return {n / g, d / g};
    }
};

} // namespace fel
