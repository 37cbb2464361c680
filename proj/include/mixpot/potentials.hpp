#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "mixpot/measure.hpp"

namespace mixpot {

/// |density|(B_rho(x0)) evaluated along a nondecreasing sequence of radii.
/// Cells enter an active set when the sphere reaches them and leave it once
/// they are fully covered, so each call costs O(cells on the sphere).
class DensityMassProfile {
public:
    DensityMassProfile(const Measure& mu, Point x0) : x0_(x0) {
        if (!mu.density()) return;
        density_ = &*mu.density();
        const GridDomain& g = *density_->grid;
        const double hh = 0.5 * g.h();
        const int n = g.dim();
        for (std::size_t id = 0; id < g.size(); ++id) {
            const double v = std::abs(density_->values[id]);
            if (v == 0.0) continue;
            const Point c = g.coord(id);
            double near2 = 0.0, far2 = 0.0;
            for (int k = 0; k < n; ++k) {
                const double lo = c[k] - hh - x0[k], hi = c[k] + hh - x0[k];
                const double nk = lo > 0.0 ? lo : (hi < 0.0 ? -hi : 0.0);
                const double fk = std::max(std::abs(lo), std::abs(hi));
                near2 += nk * nk;
                far2 += fk * fk;
            }
            cells_.push_back({id, std::sqrt(near2), std::sqrt(far2), v});
        }
        std::sort(cells_.begin(), cells_.end(),
                  [](const Cell& a, const Cell& b) { return a.near != b.near ? a.near < b.near : a.id < b.id; });
    }

    double operator()(double rho) {
        if (!density_) return 0.0;
        if (rho < last_) throw DomainError("mass profile radii must be nondecreasing");
        last_ = rho;
        const GridDomain& g = *density_->grid;
        const double hv = g.cell_volume();
        while (next_ < cells_.size() && cells_[next_].near < rho) active_.push_back(next_++);
        double partial = 0.0;
        std::size_t keep = 0;
        for (std::size_t k = 0; k < active_.size(); ++k) {
            const Cell& c = cells_[active_[k]];
            if (c.far <= rho) {
                full_ += c.v * hv;
            } else {
                partial += c.v * Measure::cell_overlap(g, c.id, Ball(x0_, rho));
                active_[keep++] = active_[k];
            }
        }
        active_.resize(keep);
        return full_ + partial;
    }

private:
    struct Cell {
        std::size_t id;
        double near, far, v;
    };
    Point x0_;
    const GridFunction* density_ = nullptr;
    std::vector<Cell> cells_;
    std::vector<std::size_t> active_;
    std::size_t next_ = 0;
    double full_ = 0.0;
    double last_ = 0.0;
};

struct PotentialProfile {
    Point center{0.0, 0.0};
    std::vector<double> radii;
    std::vector<double> values;

    std::string to_csv() const {
        std::ostringstream os;
        os.precision(17);
        os << "rho,value\n";
        for (std::size_t k = 0; k < radii.size(); ++k) os << radii[k] << ',' << values[k] << '\n';
        return os.str();
    }
};

namespace detail {

struct PotentialKind {
    bool wolff = false;
    double beta = 1.0;
    double p = 2.0;
};

/// integral_a^b rho^{e-1} d rho
inline double power_integral(double a, double b, double e) {
    if (e == 0.0) return std::log(b / a);
    return (std::pow(b, e) - std::pow(a, e)) / e;
}

inline std::vector<double> potential_profile(const Measure& mu, const Point& x0, const std::vector<double>& radii,
                                             const PotentialKind& kind) {
    const int n = mu.dim();
    for (std::size_t k = 0; k < radii.size(); ++k) {
        if (!(radii[k] > 0.0)) throw DomainError("truncation radius R must be positive");
        if (k > 0 && radii[k] < radii[k - 1]) throw DomainError("radii must be increasing");
    }
    if (kind.wolff && !(kind.p > 1.0)) throw DomainError("Wolff potential requires p > 1");
    if (kind.wolff && !(kind.beta > 0.0)) throw DomainError("Wolff potential requires beta > 0");
    std::vector<double> out(radii.size(), 0.0);
    if (radii.empty()) return out;
    const double inv = kind.wolff ? 1.0 / (kind.p - 1.0) : 1.0;
    const double e = kind.wolff ? (kind.beta * kind.p - n) / (kind.p - 1.0) : 1.0 - n;

    struct AtomDist {
        double d, w;
    };
    std::vector<AtomDist> atoms;
    double center_mass = 0.0;
    for (const auto& a : mu.atoms()) {
        if (a.w == 0.0) continue;
        const double d = dist(a.x, x0, n);
        if (d == 0.0) center_mass += std::abs(a.w);
        else atoms.push_back({d, std::abs(a.w)});
    }
    std::sort(atoms.begin(), atoms.end(), [](const AtomDist& a, const AtomDist& b) { return a.d < b.d; });
    // an atom at x0 makes the integrand blow up like rho^{e-1} with e <= 0
    if (center_mass > 0.0 && (!kind.wolff || e <= 0.0)) {
        std::fill(out.begin(), out.end(), kInf);
        return out;
    }

    // atoms only, or the linear Riesz case: exact per-interval closed forms
    auto atoms_exact = [&](double R) {
        if (!kind.wolff) {
            std::vector<double> t;
            for (const auto& a : atoms)
                if (a.d < R) t.push_back(a.w * (n == 1 ? std::log(R / a.d) : 1.0 / a.d - 1.0 / R));
            return pairwise_sum(t.begin(), t.end());
        }
        double acc = 0.0, M = center_mass, lo = 0.0;
        if (M > 0.0) {
            const double b = atoms.empty() ? R : std::min(R, atoms.front().d);
            acc += std::pow(M, inv) * std::pow(b, e) / e;
            lo = b;
        }
        for (std::size_t k = 0; k < atoms.size() && atoms[k].d < R; ++k) {
            M += atoms[k].w;
            lo = atoms[k].d;
            const double hi = (k + 1 < atoms.size()) ? std::min(R, atoms[k + 1].d) : R;
            if (hi > lo) acc += std::pow(M, inv) * power_integral(lo, hi, e);
        }
        return acc;
    };

    if (!mu.density() || !kind.wolff) {
        for (std::size_t k = 0; k < radii.size(); ++k) out[k] = atoms_exact(radii[k]);
        if (!mu.density()) return out;
    }

    // density part: Gauss-Legendre in log(rho), >= 64 intervals per decade,
    // pieces split at atom distances and requested radii
    const double h = mu.density()->grid->h();
    double rho_min = 1e-3 * h;
    if (!atoms.empty()) rho_min = std::min(rho_min, 0.5 * atoms.front().d);
    rho_min = std::min(rho_min, 1e-3 * radii.front());

    DensityMassProfile mass(mu, x0);
    auto atom_mass_below = [&](double rho) {
        double m = center_mass;
        for (const auto& a : atoms)
            if (a.d < rho) m += a.w;
        return m;
    };
    auto integrand_log = [&](double rho, double m_dens) {
        if (!kind.wolff) return m_dens * std::pow(rho, 1.0 - n);
        const double m = atom_mass_below(rho) + m_dens;
        return m > 0.0 ? std::pow(m * std::pow(rho, kind.beta * kind.p - n), inv) : 0.0;
    };

    // head [0, rho_min]: |mu|(B_rho) proportional to rho^n there
    const double m0 = mass(rho_min);
    double acc;
    if (!kind.wolff) {
        acc = m0 * std::pow(rho_min, 1.0 - n);
    } else {
        const double c = m0 / std::pow(rho_min, n);
        acc = std::pow(c, inv) * std::pow(rho_min, kind.beta * kind.p * inv) / (kind.beta * kind.p * inv);
        if (center_mass > 0.0) acc += std::pow(center_mass, inv) * std::pow(rho_min, e) / e;
    }

    std::vector<double> breaks{rho_min};
    for (const auto& a : atoms)
        if (a.d > rho_min && a.d < radii.back()) breaks.push_back(a.d);
    for (double r : radii)
        if (r > rho_min) breaks.push_back(r);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    using GL = boost::math::quadrature::gauss<double, 3>;
    const auto& xs = GL::abscissa();
    const auto& ws = GL::weights();
    // abscissae in increasing order on [-1, 1]
    std::array<std::pair<double, double>, 3> nodes{{{-xs[1], ws[1]}, {xs[0], ws[0]}, {xs[1], ws[1]}}};

    std::size_t next_r = 0;
    auto record = [&](double rho, double value) {
        while (next_r < radii.size() && radii[next_r] <= rho) {
            out[next_r] += value;
            ++next_r;
        }
    };
    // radii below rho_min only see the head
    while (next_r < radii.size() && radii[next_r] <= rho_min) {
        out[next_r] += acc;
        ++next_r;
    }
    for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
        const double la = std::log(breaks[b]), lb = std::log(breaks[b + 1]);
        const int pieces = std::max(1, static_cast<int>(std::ceil(64.0 * (lb - la) / std::numbers::ln10)));
        const double step = (lb - la) / pieces;
        std::vector<double> parts;
        parts.reserve(static_cast<std::size_t>(pieces));
        for (int i = 0; i < pieces; ++i) {
            const double mid = la + (i + 0.5) * step;
            double s = 0.0;
            for (const auto& [x, w] : nodes) {
                const double rho = std::exp(mid + 0.5 * step * x);
                s += w * integrand_log(rho, mass(rho));
            }
            parts.push_back(0.5 * step * s);
        }
        acc += pairwise_sum(parts.begin(), parts.end());
        record(breaks[b + 1], acc);
    }
    return out;
}

}  // namespace detail

/// Truncated 1-Riesz potential: integral_0^R |mu|(B_rho(x0)) / rho^{n-1} drho/rho.
inline double riesz_potential(const Measure& mu, const Point& x0, double R) {
    return detail::potential_profile(mu, x0, {R}, {})[0];
}

/// Wolff potential: integral_0^R [|mu|(B_rho(x0)) / rho^{n - beta p}]^{1/(p-1)} drho/rho.
inline double wolff_potential(const Measure& mu, const Point& x0, double R, double beta, double p) {
    return detail::potential_profile(mu, x0, {R}, {true, beta, p})[0];
}

inline PotentialProfile riesz_profile(const Measure& mu, const Point& x0, std::vector<double> radii) {
    PotentialProfile pr{x0, radii, {}};
    pr.values = detail::potential_profile(mu, x0, radii, {});
    return pr;
}

inline PotentialProfile wolff_profile(const Measure& mu, const Point& x0, std::vector<double> radii, double beta,
                                      double p) {
    PotentialProfile pr{x0, radii, {}};
    pr.values = detail::potential_profile(mu, x0, radii, {true, beta, p});
    return pr;
}

/// integral over {outside the cell box} minus B_r(x0) of |x - x0|^{-n-alpha}.
/// x0 must lie inside the cell box.
inline double far_kernel_mass(const GridDomain& g, const Point& x0, double r, double alpha) {
    const Point lo = g.cell_lo(), hi = g.cell_hi();
    for (int k = 0; k < g.dim(); ++k)
        if (x0[k] < lo[k] || x0[k] > hi[k]) throw DomainError("tail centre must lie inside the grid");
    if (g.dim() == 1) {
        const double a = std::max(hi[0] - x0[0], r), b = std::max(x0[0] - lo[0], r);
        return (std::pow(a, -alpha) + std::pow(b, -alpha)) / alpha;
    }
    // polar coordinates about x0: integral_0^{2 pi} max(d(theta), r)^{-alpha} / alpha dtheta,
    // d(theta) = distance to the box boundary along the ray
    struct Face {
        double phi, a;  // outward normal angle, perpendicular distance
    };
    const std::array<Face, 4> faces{{{0.0, hi[0] - x0[0]},
                                     {0.5 * std::numbers::pi, hi[1] - x0[1]},
                                     {std::numbers::pi, x0[0] - lo[0]},
                                     {1.5 * std::numbers::pi, x0[1] - lo[1]}}};
    auto corner_angle = [&](double cx, double cy) {
        double t = std::atan2(cy - x0[1], cx - x0[0]);
        if (t < 0.0) t += 2.0 * std::numbers::pi;
        return t;
    };
    // corners ordered: (hi,hi) separates face 0 and 1, (lo,hi) 1|2, (lo,lo) 2|3, (hi,lo) 3|0
    const double c01 = corner_angle(hi[0], hi[1]);
    const double c12 = corner_angle(lo[0], hi[1]);
    const double c23 = corner_angle(lo[0], lo[1]);
    const double c30 = corner_angle(hi[0], lo[1]);
    const std::array<std::pair<double, double>, 4> spans{{{c30 - 2.0 * std::numbers::pi, c01}, {c01, c12}, {c12, c23}, {c23, c30}}};
    using GL = boost::math::quadrature::gauss<double, 20>;
    double total = 0.0;
    for (std::size_t f = 0; f < 4; ++f) {
        const double a = faces[f].a, phi = faces[f].phi;
        double t0 = spans[f].first, t1 = spans[f].second;
        if (!(t1 > t0)) continue;
        std::vector<double> cuts{t0, t1};
        if (a < r) {
            const double w = std::acos(a / r);
            for (double c : {phi - w, phi + w})
                for (double shift : {-2.0 * std::numbers::pi, 0.0, 2.0 * std::numbers::pi})
                    if (c + shift > t0 && c + shift < t1) cuts.push_back(c + shift);
        }
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            const double u0 = cuts[k], u1 = cuts[k + 1];
            if (!(u1 > u0)) continue;
            const double um = 0.5 * (u0 + u1);
            const double dm = a / std::cos(um - phi);
            if (dm <= r) {
                total += (u1 - u0) * std::pow(r, -alpha) / alpha;
                continue;
            }
            const int sub = 4;
            const double len = (u1 - u0) / sub;
            for (int q = 0; q < sub; ++q) {
                const double v0 = u0 + q * len;
                total += GL::integrate(
                    [&](double th) { return std::pow(std::max(a / std::cos(th - phi), r), -alpha) / alpha; },
                    v0, v0 + len);
            }
        }
    }
    return total;
}

/// integral over R^n \ B_r(x0) of |f - shift|^{p-1} / |x - x0|^{n+sp} dx: midpoint
/// sum over grid cells whose centre lies outside the closed ball, plus the
/// far-field constant over everything beyond the cell box.
inline double tail_integral(const GridFunction& f, const Point& x0, double r, double p, double s, double shift = 0.0) {
    if (!(r > 0.0)) throw DomainError("tail radius must be positive");
    if (!(p > 1.0)) throw DomainError("tail requires p > 1");
    if (!(s > 0.0 && s < 1.0)) throw DomainError("tail requires s in (0,1)");
    const GridDomain& g = *f.grid;
    const int n = g.dim();
    const double expo = 0.5 * (n + s * p);
    const double r2 = r * r * (1.0 + 1e-12);
    std::vector<double> t;
    t.reserve(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double d2 = dist2(g.coord(i), x0, n);
        if (d2 <= r2) continue;
        const double v = std::abs(f.values[i] - shift);
        if (v == 0.0) continue;
        t.push_back(std::pow(v, p - 1.0) / std::pow(d2, expo));
    }
    const double cells = pairwise_sum(t.begin(), t.end()) * g.cell_volume();
    const double gf = std::abs(f.far() - shift);
    const double far = gf == 0.0 ? 0.0 : std::pow(gf, p - 1.0) * far_kernel_mass(g, x0, r, s * p);
    return cells + far;
}

/// Tail(f - shift; x0, r) = (r^p * tail_integral)^{1/(p-1)}.
inline double tail(const GridFunction& f, const Point& x0, double r, double p, double s, double shift = 0.0) {
    return std::pow(std::pow(r, p) * tail_integral(f, x0, r, p, s, shift), 1.0 / (p - 1.0));
}

}  // namespace mixpot
