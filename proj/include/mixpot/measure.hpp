#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "mixpot/area.hpp"
#include "mixpot/grid.hpp"

namespace mixpot {

struct Atom {
    Point x{0.0, 0.0};
    double w = 0.0;
};

/// Signed measure: point masses plus an optional node density, read as
/// piecewise constant on the grid cells.
class Measure {
public:
    Measure() = default;
    explicit Measure(int dim) : dim_(dim) {}
    Measure(int dim, std::vector<Atom> atoms) : dim_(dim), atoms_(std::move(atoms)) { check_atoms(); }

    static Measure dirac(int dim, Point x, double w = 1.0) { return Measure(dim, {Atom{x, w}}); }

    static Measure from_density(GridFunction density) {
        Measure m(density.grid->dim());
        m.density_ = std::move(density);
        return m;
    }

    int dim() const { return dim_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::optional<GridFunction>& density() const { return density_; }
    bool density_only() const { return atoms_.empty(); }
    bool empty() const { return atoms_.empty() && !density_; }

    void add_atom(Point x, double w) {
        atoms_.push_back({x, w});
        check_atoms();
    }

    /// Atoms must sit inside the cell box of the given grid.
    void check_within(const GridDomain& g) const {
        for (const auto& a : atoms_) {
            if (!g.locate(a.x)) throw DomainError("atom lies outside the extended box");
        }
        if (density_ && !density_->grid->same_geometry(g)) throw DomainError("density lives on a different grid");
    }

    Measure scaled(double t) const {
        Measure m = *this;
        for (auto& a : m.atoms_) a.w *= t;
        if (m.density_)
            for (auto& v : m.density_->values) v *= t;
        return m;
    }

    /// |mu|(R^n).
    double total_variation() const {
        std::vector<double> t;
        for (const auto& a : atoms_) t.push_back(std::abs(a.w));
        if (density_) {
            const double hv = density_->grid->cell_volume();
            for (double v : density_->values) t.push_back(std::abs(v) * hv);
        }
        return pairwise_sum(t.begin(), t.end());
    }

    /// mu(R^n), signed.
    double total_mass() const {
        std::vector<double> t;
        for (const auto& a : atoms_) t.push_back(a.w);
        if (density_) {
            const double hv = density_->grid->cell_volume();
            for (double v : density_->values) t.push_back(v * hv);
        }
        return pairwise_sum(t.begin(), t.end());
    }

    double atoms_tv_on_ball(const Ball& b) const {
        double s = 0.0;
        for (const auto& a : atoms_)
            if (b.contains_open(a.x, dim_)) s += std::abs(a.w);
        return s;
    }

    /// |density|(B), with exact cell/ball overlap.
    double density_tv_on_ball(const Ball& b) const {
        if (!density_) return 0.0;
        const GridDomain& g = *density_->grid;
        const double h = g.h();
        double s = 0.0;
        int lo_i[2] = {0, 0}, hi_i[2] = {0, 0};
        for (int k = 0; k < g.dim(); ++k) {
            lo_i[k] = std::max(0, static_cast<int>(std::floor((b.center[k] - b.radius - g.lo()[k]) / h)) - 1);
            hi_i[k] = std::min(g.count(k) - 1, static_cast<int>(std::ceil((b.center[k] + b.radius - g.lo()[k]) / h)) + 1);
        }
        std::vector<double> parts;
        for (int j = lo_i[1]; j <= hi_i[1]; ++j)
            for (int i = lo_i[0]; i <= hi_i[0]; ++i) {
                const std::size_t id = g.index(i, j);
                const double v = std::abs(density_->values[id]);
                if (v == 0.0) continue;
                parts.push_back(v * cell_overlap(g, id, b));
            }
        s = pairwise_sum(parts.begin(), parts.end());
        return s;
    }

    double tv_on_ball(const Ball& b) const { return atoms_tv_on_ball(b) + density_tv_on_ball(b); }

    /// Measure of (cell of node id) intersected with the open ball.
    static double cell_overlap(const GridDomain& g, std::size_t id, const Ball& b) {
        const Point x = g.coord(id);
        const double hh = 0.5 * g.h();
        if (g.dim() == 1) return interval_overlap(b.center[0], b.radius, x[0] - hh, x[0] + hh);
        return disk_rect_area(b.center, b.radius, x[0] - hh, x[0] + hh, x[1] - hh, x[1] + hh);
    }

private:
    void check_atoms() const {
        if (dim_ != 1 && dim_ != 2) throw DomainError("measure dimension must be 1 or 2");
        for (const auto& a : atoms_)
            if (!std::isfinite(a.w) || !std::isfinite(a.x[0]) || !std::isfinite(a.x[1]))
                throw DomainError("atom data must be finite");
    }

    int dim_ = 2;
    std::vector<Atom> atoms_;
    std::optional<GridFunction> density_;
};

enum class BumpShape { Smooth, Polynomial };

inline double bump_profile(double t2, BumpShape shape) {
    if (t2 >= 1.0) return 0.0;
    if (shape == BumpShape::Smooth) return std::exp(-1.0 / (1.0 - t2));
    return (1.0 - t2) * (1.0 - t2);
}

/// Convolve mu with a bump of radius delta sampled on the grid. Each source
/// (atom or density cell) is spread with weights normalised on the grid, so
/// the signed total mass is preserved up to rounding.
inline Measure mollify_measure(const Measure& mu, double delta, const GridPtr& grid,
                               BumpShape shape = BumpShape::Smooth) {
    const GridDomain& g = *grid;
    if (delta < g.h() * (1.0 - 1e-12)) throw DomainError("mollifier width below grid resolution");
    mu.check_within(g);
    const double hv = g.cell_volume();
    std::vector<double> out(g.size(), 0.0);
    std::vector<std::pair<std::size_t, double>> stencil;
    auto spread = [&](const Point& c, double mass) {
        if (mass == 0.0) return;
        stencil.clear();
        double total = 0.0;
        // enlarged ball so nodes at distance < delta are all visited
        g.for_each_in_ball(Ball(c, delta), [&](std::size_t id) {
            const double t2 = dist2(g.coord(id), c, g.dim()) / (delta * delta);
            const double w = bump_profile(t2, shape);
            if (w > 0.0) {
                stencil.emplace_back(id, w);
                total += w;
            }
        });
        if (stencil.empty()) {
            // source closer to no node than delta: deposit into its own cell
            auto id = g.locate(c);
            if (!id) throw DomainError("mollification source outside the grid");
            out[*id] += mass / hv;
            return;
        }
        for (const auto& [id, w] : stencil) out[id] += mass * w / (total * hv);
    };
    for (const auto& a : mu.atoms()) spread(a.x, a.w);
    if (mu.density()) {
        const auto& d = *mu.density();
        for (std::size_t i = 0; i < g.size(); ++i) spread(g.coord(i), d.values[i] * hv);
    }
    return Measure::from_density(GridFunction(grid, std::move(out), 0.0));
}

}  // namespace mixpot
