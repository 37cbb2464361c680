#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mixpot {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on a numerical argument was violated.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Points live in R^1 or R^2; unused coordinates are zero.
using Point = std::array<double, 2>;
using Vec2 = std::array<double, 2>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double dist2(const Point& a, const Point& b, int dim) {
    double d = 0.0;
    for (int k = 0; k < dim; ++k) d += (a[k] - b[k]) * (a[k] - b[k]);
    return d;
}

inline double dist(const Point& a, const Point& b, int dim) { return std::sqrt(dist2(a, b, dim)); }

inline double norm(const Vec2& z, int dim) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += z[k] * z[k];
    return std::sqrt(s);
}

inline double dot(const Vec2& a, const Vec2& b, int dim) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += a[k] * b[k];
    return s;
}

/// Surface measure of the unit sphere S^{n-1}: 2 for n=1, 2*pi for n=2.
inline double unit_sphere_area(int dim) { return dim == 1 ? 2.0 : 2.0 * std::numbers::pi; }

/// Lebesgue measure of the unit ball.
inline double unit_ball_volume(int dim) { return dim == 1 ? 2.0 : std::numbers::pi; }

/// 64-bit FNV-1a, used for config and cache fingerprints.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a_bytes(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a(std::string_view(static_cast<const char*>(data), n), h);
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return s;
}

/// Sum of a sequence by recursive pairwise halving. Result depends only on
/// the order of the input, so repeated runs are bit-identical.
template <typename It>
double pairwise_sum(It first, It last) {
    const auto n = last - first;
    if (n <= 8) {
        double s = 0.0;
        for (; first != last; ++first) s += *first;
        return s;
    }
    auto mid = first + n / 2;
    return pairwise_sum(first, mid) + pairwise_sum(mid, last);
}

}  // namespace mixpot
