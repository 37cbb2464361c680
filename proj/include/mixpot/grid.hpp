#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixpot/core.hpp"

namespace mixpot {

/// Open or closed Euclidean ball. Grid functionals treat node membership as
/// closed (|x - c| <= r up to rounding); measures use the open ball.
struct Ball {
    Point center{0.0, 0.0};
    double radius = 1.0;

    Ball() = default;
    Ball(Point c, double r) : center(c), radius(r) {
        if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("ball radius must be positive");
    }

    bool contains_closed(const Point& x, int dim) const {
        return dist2(x, center, dim) <= radius * radius * (1.0 + 1e-12);
    }
    bool contains_open(const Point& x, int dim) const { return dist2(x, center, dim) < radius * radius; }
};

/// Uniform node grid over an axis-aligned box. Node (ix, iy) sits at
/// lo + (ix, iy) * h and owns the cell of side h centred on it, so the union
/// of cells is the box dilated by h/2. The interior mask marks the nodes of
/// Omega; all other nodes form the exterior band where Dirichlet data lives.
class GridDomain {
public:
    static GridDomain make(int dim, Point lo, Point hi, double h,
                           const std::function<bool(const Point&)>& in_omega = {},
                           std::optional<double> ext_radius = std::nullopt) {
        if (dim != 1 && dim != 2) throw DomainError("grid dimension must be 1 or 2");
        if (!(h > 0.0)) throw DomainError("grid spacing h must be positive");
        GridDomain g;
        g.dim_ = dim;
        g.lo_ = lo;
        g.hi_ = hi;
        g.h_ = h;
        if (dim == 1) {
            g.lo_[1] = g.hi_[1] = 0.0;
        }
        for (int k = 0; k < dim; ++k) {
            const double len = hi[k] - lo[k];
            if (!(len > 0.0)) throw DomainError("box edges must have positive length");
            const double cells = len / h;
            const double rounded = std::round(cells);
            if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells))
                throw DomainError("box edge lengths must be integer multiples of h");
            g.n_[k] = static_cast<int>(rounded) + 1;
        }
        if (dim == 1) g.n_[1] = 1;
        const double circ = g.circumscribed_radius();
        g.ext_radius_ = ext_radius.value_or(circ);
        if (g.ext_radius_ < circ * (1.0 - 1e-12)) throw DomainError("ext_radius must be at least the circumscribed radius of the box");
        g.mask_.assign(g.size(), 0);
        if (in_omega) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (in_omega(g.coord(i))) {
                    if (g.on_box_edge(i)) throw DomainError("interior nodes must lie at least one cell inside the box");
                    g.mask_[i] = 1;
                }
            }
        }
        return g;
    }

    /// Omega = every node at least one cell away from the box boundary.
    static GridDomain make_box_interior(int dim, Point lo, Point hi, double h) {
        GridDomain g = make(dim, lo, hi, h);
        for (std::size_t i = 0; i < g.size(); ++i) g.mask_[i] = g.on_box_edge(i) ? 0 : 1;
        return g;
    }

    /// Omega = nodes strictly inside the given ball.
    static GridDomain make_ball_interior(int dim, Point lo, Point hi, double h, const Ball& omega) {
        return make(dim, lo, hi, h, [&](const Point& x) { return omega.contains_open(x, dim); });
    }

    /// Same geometry with a different Omega.
    GridDomain with_mask(const std::function<bool(const Point&)>& in_omega) const {
        GridDomain g = *this;
        for (std::size_t i = 0; i < size(); ++i) {
            const bool in = in_omega(coord(i));
            if (in && on_box_edge(i)) throw DomainError("interior nodes must lie at least one cell inside the box");
            g.mask_[i] = in ? 1 : 0;
        }
        return g;
    }

    int dim() const { return dim_; }
    double h() const { return h_; }
    const Point& lo() const { return lo_; }
    const Point& hi() const { return hi_; }
    double ext_radius() const { return ext_radius_; }
    int nx() const { return n_[0]; }
    int ny() const { return n_[1]; }
    int count(int axis) const { return n_[static_cast<std::size_t>(axis)]; }
    std::size_t size() const { return static_cast<std::size_t>(n_[0]) * static_cast<std::size_t>(n_[1]); }
    double cell_volume() const { return dim_ == 1 ? h_ : h_ * h_; }

    Point center() const { return {0.5 * (lo_[0] + hi_[0]), 0.5 * (lo_[1] + hi_[1])}; }
    double circumscribed_radius() const {
        double r2 = 0.0;
        for (int k = 0; k < dim_; ++k) r2 += 0.25 * (hi_[k] - lo_[k]) * (hi_[k] - lo_[k]);
        return std::sqrt(r2);
    }

    std::size_t index(int ix, int iy = 0) const {
        return static_cast<std::size_t>(iy) * static_cast<std::size_t>(n_[0]) + static_cast<std::size_t>(ix);
    }
    int ix(std::size_t id) const { return static_cast<int>(id % static_cast<std::size_t>(n_[0])); }
    int iy(std::size_t id) const { return static_cast<int>(id / static_cast<std::size_t>(n_[0])); }

    Point coord(std::size_t id) const {
        return {lo_[0] + ix(id) * h_, dim_ == 2 ? lo_[1] + iy(id) * h_ : 0.0};
    }

    bool on_box_edge(std::size_t id) const {
        const int i = ix(id);
        if (i == 0 || i == n_[0] - 1) return true;
        if (dim_ == 2) {
            const int j = iy(id);
            if (j == 0 || j == n_[1] - 1) return true;
        }
        return false;
    }

    bool interior(std::size_t id) const { return mask_[id] != 0; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    std::size_t interior_count() const {
        return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
    }

    /// Lower/upper corners of the union of cells.
    Point cell_lo() const { return {lo_[0] - 0.5 * h_, dim_ == 2 ? lo_[1] - 0.5 * h_ : 0.0}; }
    Point cell_hi() const { return {hi_[0] + 0.5 * h_, dim_ == 2 ? hi_[1] + 0.5 * h_ : 0.0}; }

    /// Node whose cell contains x, or nullopt when x is outside the cell union.
    std::optional<std::size_t> locate(const Point& x) const {
        int idx[2] = {0, 0};
        for (int k = 0; k < dim_; ++k) {
            const double t = (x[k] - lo_[k]) / h_;
            const double r = std::floor(t + 0.5);
            if (r < 0.0 || r > n_[k] - 1) return std::nullopt;
            idx[k] = static_cast<int>(r);
        }
        return index(idx[0], idx[1]);
    }

    /// Visit every node whose centre lies in the closed ball.
    template <typename F>
    void for_each_in_ball(const Ball& b, F&& f) const {
        int lo_i[2] = {0, 0}, hi_i[2] = {0, 0};
        for (int k = 0; k < dim_; ++k) {
            lo_i[k] = std::max(0, static_cast<int>(std::floor((b.center[k] - b.radius - lo_[k]) / h_)) - 1);
            hi_i[k] = std::min(n_[k] - 1, static_cast<int>(std::ceil((b.center[k] + b.radius - lo_[k]) / h_)) + 1);
        }
        for (int j = lo_i[1]; j <= hi_i[1]; ++j)
            for (int i = lo_i[0]; i <= hi_i[0]; ++i) {
                const std::size_t id = index(i, j);
                if (b.contains_closed(coord(id), dim_)) f(id);
            }
    }

    /// Geometry fingerprint (box, spacing, dimension; the mask is excluded).
    std::uint64_t geometry_hash() const {
        double buf[6] = {static_cast<double>(dim_), lo_[0], lo_[1], hi_[0], hi_[1], h_};
        return fnv1a_bytes(buf, sizeof(buf));
    }

    bool same_geometry(const GridDomain& o) const {
        return dim_ == o.dim_ && n_ == o.n_ && lo_ == o.lo_ && h_ == o.h_;
    }

private:
    int dim_ = 1;
    Point lo_{0.0, 0.0}, hi_{1.0, 0.0};
    double h_ = 1.0;
    std::array<int, 2> n_{2, 1};
    double ext_radius_ = 1.0;
    std::vector<std::uint8_t> mask_;
};

using GridPtr = std::shared_ptr<const GridDomain>;

inline GridPtr share(GridDomain g) { return std::make_shared<const GridDomain>(std::move(g)); }

/// Scalar field sampled at the nodes, extended by a constant beyond the cells.
struct GridFunction {
    GridPtr grid;
    std::vector<double> values;
    std::optional<double> far_field;

    GridFunction() = default;
    GridFunction(GridPtr g, double fill = 0.0, std::optional<double> far = 0.0)
        : grid(std::move(g)), values(grid->size(), fill), far_field(far) {}
    GridFunction(GridPtr g, std::vector<double> v, std::optional<double> far = 0.0)
        : grid(std::move(g)), values(std::move(v)), far_field(far) {
        if (values.size() != grid->size()) throw DomainError("value count does not match the grid");
        for (double x : values)
            if (!std::isfinite(x)) throw DomainError("grid function values must be finite");
    }

    template <typename F>
    static GridFunction sample(GridPtr g, F&& f, std::optional<double> far = 0.0) {
        std::vector<double> v(g->size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(g->coord(i));
        return GridFunction(std::move(g), std::move(v), far);
    }

    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
    std::size_t size() const { return values.size(); }

    double far() const {
        if (!far_field) throw DomainError("far-field value is unset");
        return *far_field;
    }

    /// Cell-piecewise-constant evaluation, far field outside the cell union.
    double evaluate(const Point& x) const {
        if (auto id = grid->locate(x)) return values[*id];
        return far();
    }
};

/// n-vector per node.
struct VectorField {
    GridPtr grid;
    std::vector<Vec2> values;

    VectorField() = default;
    explicit VectorField(GridPtr g) : grid(std::move(g)), values(grid->size(), Vec2{0.0, 0.0}) {}
    int dim() const { return grid->dim(); }
};

/// Node gradient: centred differences wherever both axis neighbours exist,
/// one-sided on the box edge.
inline VectorField gradient(const GridFunction& f) {
    const GridDomain& g = *f.grid;
    VectorField out(f.grid);
    const double h = g.h();
    for (std::size_t id = 0; id < g.size(); ++id) {
        const int i = g.ix(id), j = g.iy(id);
        for (int axis = 0; axis < g.dim(); ++axis) {
            const int c = axis == 0 ? i : j;
            const int n = g.count(axis);
            auto at = [&](int off) {
                return axis == 0 ? f.values[g.index(i + off, j)] : f.values[g.index(i, j + off)];
            };
            double d;
            if (n < 2) d = 0.0;
            else if (c == 0) d = (at(1) - at(0)) / h;
            else if (c == n - 1) d = (at(0) - at(-1)) / h;
            else d = (at(1) - at(-1)) / (2.0 * h);
            out.values[id][static_cast<std::size_t>(axis)] = d;
        }
    }
    return out;
}

inline GridFunction gradient_norm(const VectorField& v) {
    GridFunction out(v.grid, 0.0, 0.0);
    for (std::size_t i = 0; i < v.values.size(); ++i) out.values[i] = norm(v.values[i], v.dim());
    return out;
}

}  // namespace mixpot
