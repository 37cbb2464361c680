#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mixpot/grid.hpp"

namespace mixpot {

/// Node ids whose centres lie in the closed ball; throws when there are none.
inline std::vector<std::size_t> ball_nodes(const GridDomain& g, const Ball& b) {
    std::vector<std::size_t> ids;
    g.for_each_in_ball(b, [&](std::size_t id) { ids.push_back(id); });
    if (ids.empty()) throw DomainError("ball below grid resolution");
    return ids;
}

template <typename F>
double ball_mean_of(const GridDomain& g, const Ball& b, F&& value_at) {
    const auto ids = ball_nodes(g, b);
    std::vector<double> v(ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k) v[k] = value_at(ids[k]);
    return pairwise_sum(v.begin(), v.end()) / static_cast<double>(ids.size());
}

inline double ball_average(const GridFunction& f, const Ball& b) {
    return ball_mean_of(*f.grid, b, [&](std::size_t i) { return f.values[i]; });
}

/// Mean of |f|^q over the ball.
inline double ball_mean_pow(const GridFunction& f, const Ball& b, double q) {
    return ball_mean_of(*f.grid, b, [&](std::size_t i) { return std::pow(std::abs(f.values[i]), q); });
}

inline Vec2 ball_average(const VectorField& f, const Ball& b) {
    Vec2 out{0.0, 0.0};
    for (int k = 0; k < f.dim(); ++k)
        out[static_cast<std::size_t>(k)] =
            ball_mean_of(*f.grid, b, [&](std::size_t i) { return f.values[i][static_cast<std::size_t>(k)]; });
    return out;
}

/// Mean of |f|^q (Euclidean norm) over the ball.
inline double ball_mean_pow(const VectorField& f, const Ball& b, double q) {
    return ball_mean_of(*f.grid, b, [&](std::size_t i) { return std::pow(norm(f.values[i], f.dim()), q); });
}

/// Mean of |f - (f)_B| over B.
inline double excess(const VectorField& f, const Ball& b) {
    const Vec2 m = ball_average(f, b);
    const int d = f.dim();
    return ball_mean_of(*f.grid, b, [&](std::size_t i) {
        return norm(Vec2{f.values[i][0] - m[0], f.values[i][1] - m[1]}, d);
    });
}

inline double excess(const GridFunction& f, const Ball& b) {
    const double m = ball_average(f, b);
    return ball_mean_of(*f.grid, b, [&](std::size_t i) { return std::abs(f.values[i] - m); });
}

inline double oscillation(const GridFunction& f, const Ball& b) {
    const auto ids = ball_nodes(*f.grid, b);
    double lo = kInf, hi = -kInf;
    for (auto i : ids) {
        lo = std::min(lo, f.values[i]);
        hi = std::max(hi, f.values[i]);
    }
    return hi - lo;
}

/// Right-continuous step function f*(t) = values[k] on [k a, (k+1) a),
/// with a the cell measure.
struct Rearrangement {
    double cell_measure = 1.0;
    std::vector<double> values;

    double operator()(double t) const {
        if (t < 0.0) throw DomainError("rearrangement argument must be nonnegative");
        const auto k = static_cast<std::size_t>(std::floor(t / cell_measure));
        return k < values.size() ? values[k] : 0.0;
    }

    /// Measure of {f* > t}.
    double distribution(double t) const {
        const auto it = std::partition_point(values.begin(), values.end(), [t](double v) { return v > t; });
        return static_cast<double>(it - values.begin()) * cell_measure;
    }
};

/// Decreasing rearrangement of |f| over the masked nodes (all nodes when
/// `omega_only` is false).
inline Rearrangement decreasing_rearrangement(const GridFunction& f, bool omega_only = true) {
    const GridDomain& g = *f.grid;
    Rearrangement r;
    r.cell_measure = g.cell_volume();
    std::vector<std::pair<double, std::size_t>> v;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!omega_only || g.interior(i)) v.emplace_back(std::abs(f.values[i]), i);
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    r.values.reserve(v.size());
    for (const auto& e : v) r.values.push_back(e.first);
    return r;
}

/// Lorentz quasinorm of the step function f*, integrated exactly per step.
/// gamma or q may be +infinity.
inline double lorentz_quasinorm(const Rearrangement& fs, double gamma, double q) {
    if (!(gamma > 0.0) || !(q > 0.0)) throw DomainError("Lorentz exponents must be positive");
    const double a = fs.cell_measure;
    const auto& v = fs.values;
    if (std::isinf(gamma) && std::isinf(q)) return v.empty() ? 0.0 : std::max(0.0, v.front());
    if (std::isinf(q)) {
        double best = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k)
            best = std::max(best, std::pow((static_cast<double>(k) + 1.0) * a, 1.0 / gamma) * v[k]);
        return best;
    }
    if (std::isinf(gamma)) {
        // integrand f*(t)^q / t is not integrable at 0 unless f* vanishes
        return (!v.empty() && v.front() > 0.0) ? kInf : 0.0;
    }
    const double e = q / gamma;
    std::vector<double> terms(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double t0 = static_cast<double>(k) * a, t1 = t0 + a;
        terms[k] = std::pow(v[k], q) * (std::pow(t1, e) - std::pow(t0, e)) / e;
    }
    return std::pow(pairwise_sum(terms.begin(), terms.end()), 1.0 / q);
}

inline double lorentz_quasinorm(const GridFunction& f, double gamma, double q) {
    return lorentz_quasinorm(decreasing_rearrangement(f), gamma, q);
}

/// Double sum over node pairs in B of |f(x)-f(y)|^p / |x-y|^{n+sp} h^{2n},
/// diagonal excluded.
inline double gagliardo_seminorm(const GridFunction& f, const Ball& b, double s, double p) {
    if (!(s > 0.0 && s < 1.0)) throw DomainError("requires s in (0,1)");
    if (!(p >= 1.0)) throw DomainError("requires p >= 1");
    const GridDomain& g = *f.grid;
    const auto ids = ball_nodes(g, b);
    const int n = g.dim();
    const double expo = 0.5 * (n + s * p);
    const double w = g.cell_volume() * g.cell_volume();
    std::vector<double> rows(ids.size());
    for (std::size_t a = 0; a < ids.size(); ++a) {
        const Point xa = g.coord(ids[a]);
        const double fa = f.values[ids[a]];
        std::vector<double> row;
        row.reserve(ids.size());
        for (std::size_t c = 0; c < ids.size(); ++c) {
            if (c == a) continue;
            const double d2 = dist2(xa, g.coord(ids[c]), n);
            row.push_back(std::pow(std::abs(fa - f.values[ids[c]]), p) / std::pow(d2, expo));
        }
        rows[a] = pairwise_sum(row.begin(), row.end());
    }
    return pairwise_sum(rows.begin(), rows.end()) * w;
}

/// (sum_Omega |u1-u2|^q h^n)^{1/q} + (sum_Omega |D u1 - D u2|^q h^n)^{1/q}.
inline double discrete_w1q_distance(const GridFunction& u1, const GridFunction& u2, double q) {
    if (!u1.grid->same_geometry(*u2.grid) || u1.grid->mask() != u2.grid->mask())
        throw DomainError("grid functions live on different grids");
    if (!(q >= 1.0)) throw DomainError("requires q >= 1");
    const GridDomain& g = *u1.grid;
    GridFunction diff(u1.grid, 0.0, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) diff.values[i] = u1.values[i] - u2.values[i];
    const VectorField d = gradient(diff);
    std::vector<double> a, b;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.interior(i)) continue;
        a.push_back(std::pow(std::abs(diff.values[i]), q));
        b.push_back(std::pow(norm(d.values[i], g.dim()), q));
    }
    const double hn = g.cell_volume();
    return std::pow(pairwise_sum(a.begin(), a.end()) * hn, 1.0 / q) +
           std::pow(pairwise_sum(b.begin(), b.end()) * hn, 1.0 / q);
}

}  // namespace mixpot
