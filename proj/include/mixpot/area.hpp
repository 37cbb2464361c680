#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mixpot/core.hpp"

namespace mixpot {

namespace detail {

/// Antiderivative of sqrt(r^2 - x^2) on [-r, r].
inline double semicircle_primitive(double x, double r) {
    x = std::clamp(x, -r, r);
    const double s = std::sqrt(std::max(0.0, r * r - x * x));
    return 0.5 * (x * s + r * r * std::asin(x / r));
}

}  // namespace detail

/// Exact area of the disk |x - c| < r intersected with [x0,x1] x [y0,y1].
inline double disk_rect_area(const Point& c, double r, double x0, double x1, double y0, double y1) {
    x0 -= c[0];
    x1 -= c[0];
    y0 -= c[1];
    y1 -= c[1];
    const double a = std::max(x0, -r), b = std::min(x1, r);
    if (!(b > a) || !(y1 > y0) || y0 >= r || y1 <= -r) return 0.0;
    std::vector<double> br{a, b};
    for (double y : {y0, y1}) {
        if (std::abs(y) < r) {
            const double t = std::sqrt(r * r - y * y);
            for (double x : {-t, t})
                if (x > a && x < b) br.push_back(x);
        }
    }
    std::sort(br.begin(), br.end());
    double area = 0.0;
    for (std::size_t k = 0; k + 1 < br.size(); ++k) {
        const double lo = br[k], hi = br[k + 1];
        if (!(hi > lo)) continue;
        const double m = 0.5 * (lo + hi);
        const double sm = std::sqrt(std::max(0.0, r * r - m * m));
        const bool top_circle = sm < y1;
        const bool bottom_circle = -sm > y0;
        const double top = top_circle ? sm : y1;
        const double bottom = bottom_circle ? -sm : y0;
        if (top <= bottom) continue;
        const double S = detail::semicircle_primitive(hi, r) - detail::semicircle_primitive(lo, r);
        const double w = hi - lo;
        area += (top_circle ? S : y1 * w) - (bottom_circle ? -S : y0 * w);
    }
    return area;
}

/// Length of (c - r, c + r) intersected with [x0, x1].
inline double interval_overlap(double c, double r, double x0, double x1) {
    return std::max(0.0, std::min(x1, c + r) - std::max(x0, c - r));
}

}  // namespace mixpot
