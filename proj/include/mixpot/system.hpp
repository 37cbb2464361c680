#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mixpot/local.hpp"
#include "mixpot/measure.hpp"
#include "mixpot/nonlocal.hpp"

namespace mixpot {

/// Discrete mixed problem -div A(Du) + L u = f on a set of unknown nodes;
/// every other node carries fixed data, and the far field beyond the grid is
/// the constant data.far(). Vectors passed in and out are indexed by the
/// unknowns in node order.
class MixedProblem {
public:
    MixedProblem(const KernelWeights& W, FieldSpec field, GridFunction data, std::vector<std::uint8_t> unknown,
                 std::vector<double> rhs)
        : W_(&W), field_(std::move(field)), data_(std::move(data)), unknown_(std::move(unknown)),
          nl_(W, data_, unknown_) {
        const GridDomain& g = grid();
        if (!W.disabled() && W.p() != field_.p) throw DomainError("kernel weights were assembled for a different p");
        if (unknown_.size() != g.size() || rhs.size() != g.size()) throw DomainError("problem arrays do not match the grid");
        for (std::size_t id = 0; id < g.size(); ++id)
            if (unknown_[id] && g.on_box_edge(id)) throw DomainError("unknown nodes need a full local stencil");
        rhs_.reserve(nl_.size());
        for (auto id : nl_.nodes()) rhs_.push_back(rhs[id]);
    }

    const GridDomain& grid() const { return *data_.grid; }
    const GridPtr& grid_ptr() const { return data_.grid; }
    std::size_t size() const { return nl_.size(); }
    double p() const { return field_.p; }
    const FieldSpec& field() const { return field_; }
    const GridFunction& data() const { return data_; }
    const std::vector<std::uint8_t>& unknown() const { return unknown_; }
    const NonlocalSystem& nonlocal() const { return nl_; }
    const std::vector<double>& rhs() const { return rhs_; }
    const std::vector<int>& index() const { return nl_.index(); }

    /// Field and pair law at regularisation eps (a gradient scale); eps = 0
    /// gives the model operator.
    FieldSpec field_at(double eps) const { return p() == 2.0 ? field_ : field_.with_eps(eps); }
    PairLaw law_at(double eps) const {
        const double e = p() == 2.0 ? 0.0 : eps * grid().h();
        return {p(), e * e};
    }

    std::vector<double> expand(const std::vector<double>& u) const {
        std::vector<double> full = data_.values;
        const auto& nodes = nl_.nodes();
        for (std::size_t a = 0; a < nodes.size(); ++a) full[nodes[a]] = u[a];
        return full;
    }

    std::vector<double> restrict_to_unknowns(const std::vector<double>& full) const {
        std::vector<double> u;
        u.reserve(size());
        for (auto id : nl_.nodes()) u.push_back(full[id]);
        return u;
    }

    /// Operator part (no right-hand side) at the unknowns.
    std::vector<double> operator_values(const std::vector<double>& u, double eps) const {
        const auto full = expand(u);
        const auto loc = local_operator(grid(), full, field_at(eps), unknown_);
        auto out = nl_.apply(u, law_at(eps));
        const auto& nodes = nl_.nodes();
        for (std::size_t a = 0; a < nodes.size(); ++a) out[a] += loc[nodes[a]];
        return out;
    }

    std::vector<double> residual(const std::vector<double>& u, double eps) const {
        auto r = operator_values(u, eps);
        for (std::size_t a = 0; a < r.size(); ++a) r[a] -= rhs_[a];
        return r;
    }

    GridFunction to_grid_function(const std::vector<double>& u) const {
        return GridFunction(data_.grid, expand(u), data_.far_field);
    }

private:
    const KernelWeights* W_;
    FieldSpec field_;
    GridFunction data_;
    std::vector<std::uint8_t> unknown_;
    NonlocalSystem nl_;
    std::vector<double> rhs_;
};

/// Node values of a density-only measure on the given grid.
inline std::vector<double> density_values(const Measure& mu, const GridDomain& g) {
    if (!mu.density_only()) throw DomainError("measure must be density-only (mollify atoms first)");
    if (!mu.density()) return std::vector<double>(g.size(), 0.0);
    if (!mu.density()->grid->same_geometry(g)) throw DomainError("density lives on a different grid");
    return mu.density()->values;
}

/// Collocation residual -div A(Du) + L u - mu at the interior nodes, zero
/// elsewhere. Requires u = g on every exterior node and a common far field.
inline GridFunction residual(const GridFunction& u, const Measure& mu, const GridFunction& g, const FieldSpec& field,
                             const KernelWeights& W) {
    const GridDomain& grid = *u.grid;
    if (!grid.same_geometry(*g.grid)) throw DomainError("u and g live on different grids");
    for (std::size_t id = 0; id < grid.size(); ++id)
        if (!grid.interior(id) && u.values[id] != g.values[id]) throw DomainError("Dirichlet complement violated");
    if (u.far() != g.far()) throw DomainError("Dirichlet complement violated");
    MixedProblem prob(W, field, u, grid.mask(), density_values(mu, grid));
    const auto r = prob.residual(prob.restrict_to_unknowns(u.values), 0.0);
    GridFunction out(u.grid, 0.0, 0.0);
    const auto& nodes = prob.nonlocal().nodes();
    for (std::size_t a = 0; a < nodes.size(); ++a) out.values[nodes[a]] = r[a];
    return out;
}

/// Right-hand side that makes u an exact discrete solution: the operator
/// applied to u at the interior nodes.
inline GridFunction manufactured_rhs(const GridFunction& u, const FieldSpec& field, const KernelWeights& W) {
    const GridDomain& grid = *u.grid;
    MixedProblem prob(W, field, u, grid.mask(), std::vector<double>(grid.size(), 0.0));
    const auto r = prob.operator_values(prob.restrict_to_unknowns(u.values), 0.0);
    GridFunction out(u.grid, 0.0, 0.0);
    const auto& nodes = prob.nonlocal().nodes();
    for (std::size_t a = 0; a < nodes.size(); ++a) out.values[nodes[a]] = r[a];
    return out;
}

}  // namespace mixpot
