#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include "mixpot/functionals.hpp"
#include "mixpot/system.hpp"

namespace mixpot {

struct SolveConfig {
    double tol_rel = 1e-10;
    int max_newton = 200;
    double armijo_slope = 1e-4;
    double backtrack = 0.5;
    double min_step = std::ldexp(1.0, -20);
    /// regularisation continuation, relative to the typical gradient size
    double eps_start = 1e-4;
    double eps_end = 1e-8;
    bool picard_fallback = true;
    double forcing = 1e-2;
    int gmres_restart = 60;
    int gmres_max_iters = 2000;

    void validate() const {
        if (!(tol_rel > 0.0)) throw DomainError("tol_rel must be positive");
        if (max_newton <= 0 || gmres_restart <= 0 || gmres_max_iters <= 0) throw DomainError("iteration caps must be positive");
        if (!(backtrack > 0.0 && backtrack < 1.0)) throw DomainError("backtrack factor must be in (0,1)");
        if (!(eps_start >= eps_end && eps_end > 0.0)) throw DomainError("eps schedule must satisfy eps_start >= eps_end > 0");
    }
};

struct IterLog {
    int iter = 0;
    double residual = 0.0;  // relative
    double step = 0.0;
    double eps = 0.0;
    std::string kind;  // "newton", "picard" or "init"
};

struct SolveReport {
    std::vector<IterLog> log;
    double residual_rel = 0.0;
    double eps = 0.0;
    double scale = 1.0;
    int iterations = 0;
    bool converged = false;
};

class SolveError : public Error {
public:
    SolveError(const std::string& what, GridFunction best, SolveReport report)
        : Error(what), best_(std::move(best)), report_(std::move(report)) {}
    const GridFunction& best() const { return best_; }
    const SolveReport& report() const { return report_; }

private:
    GridFunction best_;
    SolveReport report_;
};

struct SolveResult {
    GridFunction u;
    SolveReport report;
};

namespace detail {

inline double l2(const std::vector<double>& v) {
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = v[i] * v[i];
    return std::sqrt(pairwise_sum(sq.begin(), sq.end()));
}

/// Local sparse part plus matrix-free nonlocal tangent.
struct TangentOperator {
    const Eigen::SparseMatrix<double>* local = nullptr;
    const NonlocalSystem::Tangent* nonlocal = nullptr;

    Eigen::Index rows() const { return local->rows(); }
    Eigen::Index cols() const { return local->cols(); }

    template <typename D>
    Eigen::VectorXd operator*(const Eigen::MatrixBase<D>& x) const {
        Eigen::VectorXd v = x;
        Eigen::VectorXd out = (*local) * v;
        const std::vector<double> vv(v.data(), v.data() + v.size());
        const auto nl = nonlocal->apply(vv);
        for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += nl[static_cast<std::size_t>(i)];
        return out;
    }
};

/// Sparse LU of the local part plus the nonlocal diagonal.
struct LuPreconditioner {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;

    void compute(const Eigen::SparseMatrix<double>& M) {
        lu.analyzePattern(M);
        lu.factorize(M);
        if (lu.info() != Eigen::Success) throw Error("preconditioner factorisation failed");
    }
    template <typename D>
    Eigen::VectorXd solve(const Eigen::MatrixBase<D>& b) const {
        return lu.solve(Eigen::VectorXd(b));
    }
};

}  // namespace detail

/// Damped inexact Newton with regularisation continuation and a Picard
/// (frozen-coefficient) fallback direction.
class NewtonSolver {
public:
    NewtonSolver(const MixedProblem& prob, SolveConfig cfg) : prob_(prob), cfg_(std::move(cfg)) { cfg_.validate(); }

    /// Solve the linearised system at u: (J_loc + J_nl) x = b.
    std::vector<double> linear_solve(const std::vector<double>& u, const std::vector<double>& b, double eps,
                                     Linearization mode, double tol) const {
        const auto full = prob_.expand(u);
        const int n = static_cast<int>(prob_.size());
        const Eigen::SparseMatrix<double> J =
            local_jacobian(prob_.grid(), full, prob_.field_at(eps), prob_.index(), n, mode);
        const auto T = prob_.nonlocal().tangent(u, prob_.law_at(eps), mode);
        Eigen::SparseMatrix<double> P = J;
        const auto diag = T.diagonal();
        for (int i = 0; i < n; ++i) P.coeffRef(i, i) += diag[static_cast<std::size_t>(i)];
        P.makeCompressed();
        detail::LuPreconditioner pre;
        pre.compute(P);
        detail::TangentOperator op{&J, &T};
        Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b.data(), n);
        Eigen::VectorXd x = pre.solve(rhs);
        Eigen::Index iters = cfg_.gmres_max_iters;
        double err = tol;
        Eigen::internal::gmres(op, rhs, x, pre, iters, static_cast<Eigen::Index>(cfg_.gmres_restart), err);
        return std::vector<double>(x.data(), x.data() + n);
    }

    /// Typical gradient size used to scale the regularisation.
    double gradient_scale(const std::vector<double>& u) const {
        const GridFunction f = prob_.to_grid_function(u);
        const VectorField d = gradient(f);
        std::vector<double> sq;
        for (auto id : prob_.nonlocal().nodes()) sq.push_back(dot(d.values[id], d.values[id], d.dim()));
        if (sq.empty()) return 1.0;
        const double rms = std::sqrt(pairwise_sum(sq.begin(), sq.end()) / static_cast<double>(sq.size()));
        return rms > 0.0 ? rms : 1.0;
    }

    /// Linear (p = 2 law) solve for a correction to the data values, used as
    /// the starting point. Constant data is returned unchanged.
    std::vector<double> linear_guess() const {
        FieldSpec f2 = prob_.field();
        f2.p = 2.0;
        f2.variant = f2.variant == FieldVariant::Coefficient ? FieldVariant::Coefficient : FieldVariant::Model;
        const std::vector<double> u0 = prob_.restrict_to_unknowns(prob_.data().values);
        // residual of the linear operator at u0
        const auto zero_full = prob_.expand(u0);
        const auto loc = local_operator(prob_.grid(), zero_full, f2, prob_.unknown());
        auto r = prob_.nonlocal().apply(u0, PairLaw{2.0, 0.0});
        const auto& nodes = prob_.nonlocal().nodes();
        for (std::size_t a = 0; a < nodes.size(); ++a) r[a] = -(r[a] + loc[nodes[a]] - prob_.rhs()[a]);
        const int n = static_cast<int>(prob_.size());
        const Eigen::SparseMatrix<double> J =
            local_jacobian(prob_.grid(), zero_full, f2, prob_.index(), n, Linearization::Newton);
        const auto T = prob_.nonlocal().tangent(u0, PairLaw{2.0, 0.0}, Linearization::Newton);
        Eigen::SparseMatrix<double> P = J;
        const auto diag = T.diagonal();
        for (int i = 0; i < n; ++i) P.coeffRef(i, i) += diag[static_cast<std::size_t>(i)];
        P.makeCompressed();
        detail::LuPreconditioner pre;
        pre.compute(P);
        detail::TangentOperator op{&J, &T};
        Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(r.data(), n);
        Eigen::VectorXd x = pre.solve(rhs);
        Eigen::Index iters = cfg_.gmres_max_iters;
        double err = 1e-12;
        if (rhs.squaredNorm() == 0.0) return u0;
        Eigen::internal::gmres(op, rhs, x, pre, iters, static_cast<Eigen::Index>(cfg_.gmres_restart), err);
        std::vector<double> u = u0;
        for (int i = 0; i < n; ++i) u[static_cast<std::size_t>(i)] += x(i);
        return u;
    }

    SolveResult solve(const std::vector<double>* guess = nullptr) const {
        SolveReport rep;
        const std::size_t n = prob_.size();
        if (n == 0) {
            rep.converged = true;
            return {prob_.data(), rep};
        }
        const bool linear = prob_.p() == 2.0;
        std::vector<double> u = guess ? *guess : (linear ? prob_.restrict_to_unknowns(prob_.data().values) : linear_guess());
        if (u.size() != n) throw DomainError("initial guess has the wrong size");

        const double gscale = linear ? 1.0 : gradient_scale(u);
        double eps = linear ? 0.0 : cfg_.eps_start * gscale;
        const double eps_end = linear ? 0.0 : cfg_.eps_end * gscale;

        const double s_mu = detail::l2(prob_.rhs());
        const double s_zero = detail::l2(prob_.operator_values(std::vector<double>(n, 0.0), 0.0));
        const double s_init = detail::l2(prob_.operator_values(u, 0.0));
        rep.scale = std::max({s_mu, s_zero, s_init});
        if (!(rep.scale > 0.0)) rep.scale = 1.0;

        auto res = prob_.residual(u, eps);
        double rnorm = detail::l2(res);
        rep.log.push_back({0, rnorm / rep.scale, 0.0, eps, "init"});
        std::vector<double> best = u;
        double best_r = rnorm;

        for (int it = 1; it <= cfg_.max_newton; ++it) {
            if (rnorm <= cfg_.tol_rel * rep.scale) {
                if (eps <= eps_end) {
                    rep.converged = true;
                    break;
                }
                // already solved at this eps: only tighten the regularisation
                eps = std::max(eps_end, 0.5 * eps);
                res = prob_.residual(u, eps);
                rnorm = detail::l2(res);
                rep.log.push_back({it, rnorm / rep.scale, 0.0, eps, "continuation"});
                rep.iterations = it;
                best = u;
                best_r = rnorm;
                continue;
            }
            bool accepted = false;
            double step = 1.0;
            std::string kind;
            for (Linearization mode : {Linearization::Newton, Linearization::Picard}) {
                if (mode == Linearization::Picard && (!cfg_.picard_fallback || linear)) break;
                std::vector<double> minus_r(n);
                for (std::size_t a = 0; a < n; ++a) minus_r[a] = -res[a];
                const auto dir = linear_solve(u, minus_r, eps, mode, cfg_.forcing);
                step = 1.0;
                while (step >= cfg_.min_step) {
                    std::vector<double> trial(n);
                    for (std::size_t a = 0; a < n; ++a) trial[a] = u[a] + step * dir[a];
                    const auto rt = prob_.residual(trial, eps);
                    const double nt = detail::l2(rt);
                    if (std::isfinite(nt) && nt <= (1.0 - cfg_.armijo_slope * step) * rnorm) {
                        u = std::move(trial);
                        accepted = true;
                        break;
                    }
                    step *= cfg_.backtrack;
                }
                if (accepted) {
                    kind = mode == Linearization::Newton ? "newton" : "picard";
                    break;
                }
            }
            if (!accepted) {
                rep.iterations = it;
                rep.residual_rel = best_r / rep.scale;
                rep.eps = eps;
                throw SolveError("line search failed to reduce the residual", prob_.to_grid_function(best), rep);
            }
            if (eps > eps_end) eps = std::max(eps_end, 0.5 * eps);
            res = prob_.residual(u, eps);
            rnorm = detail::l2(res);
            rep.log.push_back({it, rnorm / rep.scale, step, eps, kind});
            rep.iterations = it;
            if (rnorm <= best_r || eps > eps_end) {
                best = u;
                best_r = rnorm;
            }
        }
        rep.residual_rel = rnorm / rep.scale;
        rep.eps = eps;
        if (!rep.converged) {
            if (eps <= eps_end && rnorm <= cfg_.tol_rel * rep.scale) {
                rep.converged = true;
            } else {
                throw SolveError("Newton iteration cap reached", prob_.to_grid_function(best), rep);
            }
        }
        return {prob_.to_grid_function(u), rep};
    }

private:
    const MixedProblem& prob_;
    SolveConfig cfg_;
};

/// Dirichlet problem -div A(Du) + L u = mu in Omega, u = g outside, for a
/// density-only measure.
inline SolveResult solve_dirichlet(const Measure& mu, const GridFunction& g, const FieldSpec& field,
                                   const KernelWeights& W, const SolveConfig& cfg = {},
                                   const std::vector<double>* guess = nullptr) {
    const GridDomain& grid = *g.grid;
    MixedProblem prob(W, field, g, grid.mask(), density_values(mu, grid));
    return NewtonSolver(prob, cfg).solve(guess);
}

/// v with v = exterior outside the open ball and the mu = 0 mixed equation
/// inside.
inline SolveResult solve_homogeneous_mixed(const GridFunction& exterior, const Ball& B, const FieldSpec& field,
                                           const KernelWeights& W, const SolveConfig& cfg = {}) {
    const GridDomain& g = *exterior.grid;
    std::vector<std::uint8_t> unk(g.size(), 0);
    for (std::size_t id = 0; id < g.size(); ++id) {
        if (!B.contains_open(g.coord(id), g.dim())) continue;
        if (!g.interior(id)) throw DomainError("ball must lie inside the grid interior");
        unk[id] = 1;
    }
    MixedProblem prob(W, field, exterior, unk, std::vector<double>(g.size(), 0.0));
    return NewtonSolver(prob, cfg).solve();
}

/// Nodes more than one cell inside the sphere; the rest of the ball's
/// neighbourhood is the discrete boundary layer.
inline std::vector<std::uint8_t> ball_core_mask(const GridDomain& g, const Ball& B) {
    std::vector<std::uint8_t> unk(g.size(), 0);
    const double rc = B.radius - g.h();
    if (rc <= 0.0) throw DomainError("ball below grid resolution");
    for (std::size_t id = 0; id < g.size(); ++id)
        if (dist2(g.coord(id), B.center, g.dim()) < rc * rc) {
            if (g.on_box_edge(id)) throw DomainError("ball must lie inside the grid");
            unk[id] = 1;
        }
    return unk;
}

/// w solving -div A(Dw) = 0 in the ball core with w = source on the layer.
inline SolveResult solve_homogeneous_local(const GridFunction& source, const Ball& B, const FieldSpec& field,
                                           const SolveConfig& cfg = {}) {
    const GridDomain& g = *source.grid;
    ParamSet prm;
    prm.n = g.dim();
    prm.p = field.p;
    const KernelWeights none = KernelWeights::assemble(source.grid, prm, KernelSpec::none(), true);
    GridFunction data = source;
    if (!data.far_field) data.far_field = 0.0;
    MixedProblem prob(none, field, data, ball_core_mask(g, B), std::vector<double>(g.size(), 0.0));
    return NewtonSolver(prob, cfg).solve();
}

struct SolaResult {
    std::vector<GridFunction> iterates;
    std::vector<double> deltas;
    std::vector<double> distances;  // between consecutive iterates
    GridFunction limit;
    double q_used = 1.0;
    bool converged = false;
    bool h_floor_reached = false;
    std::vector<SolveReport> reports;
};

/// Solutions for mu mollified at widths delta_j = max(h, delta0 2^{-j}),
/// j = 0..j_max, with W^{1,q} distances between consecutive iterates.
inline SolaResult sola_solve(const Measure& mu, const GridFunction& g, const ParamSet& prm, const FieldSpec& field,
                             const KernelWeights& W, const SolveConfig& cfg, int j_max,
                             std::optional<double> delta0 = std::nullopt, std::optional<double> q = std::nullopt,
                             BumpShape shape = BumpShape::Smooth) {
    const GridDomain& grid = *g.grid;
    const double h = grid.h();
    SolaResult out;
    out.q_used = q.value_or(prm.q_default());
    if (!(out.q_used >= prm.q0() && (out.q_used < prm.q_upper() || (prm.n == 1 && out.q_used <= prm.p))))
        throw DomainError("q must lie in [max(p-1,1), min(n(p-1)/(n-1), p))");
    const double d0 = delta0.value_or(8.0 * h);
    std::vector<double> warm;
    double prev_delta = -1.0;
    for (int j = 0; j <= j_max; ++j) {
        const double delta = std::max(h, d0 * std::ldexp(1.0, -j));
        if (delta == prev_delta) {
            out.h_floor_reached = true;
            out.iterates.push_back(out.iterates.back());
            out.reports.push_back(out.reports.back());
        } else {
            const Measure mj = mollify_measure(mu, delta, g.grid, shape);
            MixedProblem prob(W, field, g, grid.mask(), density_values(mj, grid));
            NewtonSolver solver(prob, cfg);
            auto res = solver.solve(warm.empty() ? nullptr : &warm);
            warm = prob.restrict_to_unknowns(res.u.values);
            out.iterates.push_back(std::move(res.u));
            out.reports.push_back(std::move(res.report));
        }
        if (delta <= h) out.h_floor_reached = true;
        out.deltas.push_back(delta);
        prev_delta = delta;
        if (out.iterates.size() >= 2)
            out.distances.push_back(
                discrete_w1q_distance(out.iterates[out.iterates.size() - 1], out.iterates[out.iterates.size() - 2], out.q_used));
    }
    out.limit = out.iterates.back();
    const auto& d = out.distances;
    out.converged = d.size() >= 3 ? (d[d.size() - 1] <= d[d.size() - 2] && d[d.size() - 2] <= d[d.size() - 3])
                                  : (d.size() < 2 || d.back() <= d.front());
    return out;
}

}  // namespace mixpot
