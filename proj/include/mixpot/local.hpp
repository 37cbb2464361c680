#pragma once

#include <array>
#include <vector>

#include <Eigen/Sparse>

#include "mixpot/grid.hpp"
#include "mixpot/params.hpp"

namespace mixpot {

namespace detail {

/// Gradient on the edge between node (i,j) and its +axis neighbour: normal
/// difference plus the transverse centred differences averaged over both ends.
/// `nb` lists the node ids the components depend on, `c` their coefficients.
struct EdgeStencil {
    Vec2 D{0.0, 0.0};
    Point mid{0.0, 0.0};
    // D[k] = sum_m c[k][m] * u[nb[m]]
    std::array<std::size_t, 6> nb{};
    std::array<std::array<double, 6>, 2> c{};
    int count = 0;
};

inline EdgeStencil edge_stencil(const GridDomain& g, const std::vector<double>& u, int i, int j, int axis) {
    EdgeStencil e;
    const double h = g.h();
    const int di = axis == 0 ? 1 : 0, dj = axis == 0 ? 0 : 1;
    const std::size_t a = g.index(i, j), b = g.index(i + di, j + dj);
    const Point xa = g.coord(a), xb = g.coord(b);
    e.mid = {0.5 * (xa[0] + xb[0]), 0.5 * (xa[1] + xb[1])};
    e.nb[0] = a;
    e.nb[1] = b;
    e.c[axis][0] = -1.0 / h;
    e.c[axis][1] = 1.0 / h;
    e.count = 2;
    if (g.dim() == 2) {
        const int t = 1 - axis;
        const int ti = axis == 0 ? 0 : 1, tj = axis == 0 ? 1 : 0;
        e.nb[2] = g.index(i + ti, j + tj);
        e.nb[3] = g.index(i - ti, j - tj);
        e.nb[4] = g.index(i + di + ti, j + dj + tj);
        e.nb[5] = g.index(i + di - ti, j + dj - tj);
        const double q = 0.25 / h;
        e.c[t][2] = q;
        e.c[t][3] = -q;
        e.c[t][4] = q;
        e.c[t][5] = -q;
        e.count = 6;
    }
    for (int k = 0; k < g.dim(); ++k) {
        double d = 0.0;
        for (int m = 0; m < e.count; ++m) d += e.c[k][m] * u[e.nb[m]];
        e.D[k] = d;
    }
    return e;
}

inline Vec2 flux(const Vec2& D, const FieldSpec& f, int dim, const Point& x) {
    if (f.variant == FieldVariant::Model && f.p < 2.0) return vector_field_A_ext(D, f, dim, x);
    return vector_field_A(D, f, dim, x);
}

}  // namespace detail

/// -div A(Du) by edge fluxes at the nodes selected by `rows` (others get 0).
/// Every selected node needs its full 3x3 neighbourhood.
inline std::vector<double> local_operator(const GridDomain& g, const std::vector<double>& u, const FieldSpec& f,
                                          const std::vector<std::uint8_t>& rows) {
    std::vector<double> out(g.size(), 0.0);
    const double h = g.h();
    for (std::size_t id = 0; id < g.size(); ++id) {
        if (!rows[id]) continue;
        if (g.on_box_edge(id)) throw DomainError("local operator needs a full stencil");
        const int i = g.ix(id), j = g.iy(id);
        double div = 0.0;
        for (int axis = 0; axis < g.dim(); ++axis) {
            const int di = axis == 0 ? 1 : 0, dj = axis == 0 ? 0 : 1;
            const auto ep = detail::edge_stencil(g, u, i, j, axis);
            const auto em = detail::edge_stencil(g, u, i - di, j - dj, axis);
            div += detail::flux(ep.D, f, g.dim(), ep.mid)[axis] - detail::flux(em.D, f, g.dim(), em.mid)[axis];
        }
        out[id] = -div / h;
    }
    return out;
}

/// Local operator on the grid's interior nodes.
inline GridFunction apply_local_pLaplacian(const GridFunction& u, const FieldSpec& f) {
    const GridDomain& g = *u.grid;
    return GridFunction(u.grid, local_operator(g, u.values, f, g.mask()), u.far_field);
}

enum class Linearization { Newton, Picard };

/// Jacobian (Newton) or frozen-coefficient matrix (Picard) of the local
/// operator, restricted to unknown rows/columns given by `index` (-1 = fixed).
inline Eigen::SparseMatrix<double> local_jacobian(const GridDomain& g, const std::vector<double>& u, const FieldSpec& f,
                                                  const std::vector<int>& index, int n_unknown,
                                                  Linearization mode = Linearization::Newton) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n_unknown) * (g.dim() == 2 ? 9 : 3));
    const double h = g.h();
    const int dim = g.dim();
    for (std::size_t id = 0; id < g.size(); ++id) {
        const int row = index[id];
        if (row < 0) continue;
        const int i = g.ix(id), j = g.iy(id);
        for (int axis = 0; axis < dim; ++axis) {
            const int di = axis == 0 ? 1 : 0, dj = axis == 0 ? 0 : 1;
            for (int side = 0; side < 2; ++side) {
                const auto e = side == 0 ? detail::edge_stencil(g, u, i, j, axis)
                                         : detail::edge_stencil(g, u, i - di, j - dj, axis);
                const double sign = side == 0 ? -1.0 / h : 1.0 / h;
                std::array<double, 2> dF{};  // d flux_axis / d D_c
                if (mode == Linearization::Newton) {
                    const Mat2 J = jacobian_A(e.D, f, dim, e.mid);
                    dF = {J[axis][0], J[axis][1]};
                } else {
                    const double a = f.factor(dot(e.D, e.D, dim), e.mid);
                    dF[axis] = a;
                }
                for (int m = 0; m < e.count; ++m) {
                    const int col = index[e.nb[m]];
                    if (col < 0) continue;
                    double v = 0.0;
                    for (int c = 0; c < dim; ++c) v += dF[c] * e.c[c][m];
                    if (v != 0.0) trip.emplace_back(row, col, sign * v);
                }
            }
        }
    }
    Eigen::SparseMatrix<double> M(n_unknown, n_unknown);
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

}  // namespace mixpot
