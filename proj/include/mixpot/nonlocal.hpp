#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mixpot/kernel.hpp"
#include "mixpot/local.hpp"

namespace mixpot {

/// Pairwise nonlinearity phi(d) = (e2 + d^2)^{(p-2)/2} d, with e2 = 0 giving
/// the unregularised |d|^{p-2} d. `deriv` is phi', `secant` is phi(d)/d.
struct PairLaw {
    double p = 2.0;
    double e2 = 0.0;

    double value(double d) const {
        if (p == 2.0) return d;
        const double t = e2 + d * d;
        if (t == 0.0) return 0.0;
        if (p == 3.0) return std::sqrt(t) * d;
        if (p == 2.5) return std::sqrt(std::sqrt(t)) * d;
        return std::pow(t, 0.5 * (p - 2.0)) * d;
    }
    double deriv(double d) const {
        if (p == 2.0) return 1.0;
        const double t = e2 + d * d;
        if (t == 0.0) return p > 2.0 ? 0.0 : 1e300;
        if (p == 3.0) return ((p - 1.0) * d * d + e2) / std::sqrt(t);
        if (p == 2.5) return ((p - 1.0) * d * d + e2) / (std::sqrt(std::sqrt(t)) * std::sqrt(t));
        return std::pow(t, 0.5 * (p - 4.0)) * ((p - 1.0) * d * d + e2);
    }
    double secant(double d) const {
        if (p == 2.0) return 1.0;
        const double t = e2 + d * d;
        if (t == 0.0) return p > 2.0 ? 0.0 : 1e300;
        if (p == 3.0) return std::sqrt(t);
        if (p == 2.5) return std::sqrt(std::sqrt(t));
        return std::pow(t, 0.5 * (p - 2.0));
    }
};

/// Nonlocal operator restricted to a set of unknown nodes, with every other
/// node held at fixed data. Fixed nodes equal to the far-field value are
/// folded into one aggregated kernel mass per unknown; the rest are kept
/// explicitly. Interactions are traversed over row runs of the Toeplitz table.
class NonlocalSystem {
public:
    NonlocalSystem(const KernelWeights& W, const GridFunction& data, const std::vector<std::uint8_t>& unknown)
        : W_(&W), grid_(W.grid()) {
        const GridDomain& g = *grid_;
        if (!g.same_geometry(*data.grid)) throw DomainError("data and kernel weights live on different grids");
        ginf_ = data.far();
        index_.assign(g.size(), -1);
        for (std::size_t id = 0; id < g.size(); ++id) {
            if (!unknown[id]) continue;
            index_[id] = static_cast<int>(nodes_.size());
            nodes_.push_back(id);
        }
        runs_ = make_runs(g, [&](std::size_t id) { return unknown[id] != 0; });
        run_of_.assign(nodes_.size(), 0);
        for (std::size_t r = 0; r < runs_.size(); ++r)
            for (int x = runs_[r].x0; x <= runs_[r].x1; ++x) run_of_[runs_[r].off + static_cast<std::size_t>(x - runs_[r].x0)] = r;
        fixed_runs_ = make_runs(g, [&](std::size_t id) { return !unknown[id] && data.values[id] != ginf_; });
        for (const auto& r : fixed_runs_)
            for (int x = r.x0; x <= r.x1; ++x) fixed_vals_.push_back(data.values[g.index(x, r.y)]);
        folded_.assign(nodes_.size(), 0.0);
        if (W.disabled()) return;
        const auto folded_runs = make_runs(g, [&](std::size_t id) { return !unknown[id] && data.values[id] == ginf_; });
        for (std::size_t a = 0; a < nodes_.size(); ++a) {
            const std::size_t id = nodes_[a];
            const int ix = g.ix(id), iy = g.iy(id);
            double acc = 0.0;
            for (const auto& r : folded_runs) {
                const double* row = W.table_row(r.y - iy);
                for (int x = r.x0; x <= r.x1; ++x) acc += row[std::abs(x - ix)];
            }
            folded_[a] = acc + W.far(id);
        }
    }

    std::size_t size() const { return nodes_.size(); }
    const std::vector<std::size_t>& nodes() const { return nodes_; }
    const std::vector<int>& index() const { return index_; }
    double far_value() const { return ginf_; }

    /// Nonlocal operator at the unknowns for unknown values u.
    std::vector<double> apply(const std::vector<double>& u, const PairLaw& law) const {
        std::vector<double> out(nodes_.size(), 0.0);
        if (W_->disabled()) return out;
        for_pairs(u, [&](double d) { return law.value(d); }, out);
        for (std::size_t a = 0; a < nodes_.size(); ++a) {
            out[a] += fixed_sum(a, u[a], [&](double d) { return law.value(d); });
            out[a] += folded_[a] * law.value(u[a] - ginf_);
        }
        return out;
    }

    /// Linearisation at u: pair coefficients are law.deriv (Newton) or
    /// law.secant (Picard). Stores the diagonal of the fixed/folded part.
    struct Tangent {
        const NonlocalSystem* sys = nullptr;
        std::vector<double> u;
        PairLaw law;
        Linearization mode = Linearization::Newton;
        std::vector<double> fixed_diag;  // fixed and folded contributions
        std::vector<double> pair_diag;   // sum_b c_ab over unknown partners

        double coef(double d) const { return mode == Linearization::Newton ? law.deriv(d) : law.secant(d); }

        std::vector<double> diagonal() const {
            std::vector<double> d(fixed_diag.size());
            for (std::size_t a = 0; a < d.size(); ++a) d[a] = fixed_diag[a] + pair_diag[a];
            return d;
        }

        std::vector<double> apply(const std::vector<double>& v) const {
            std::vector<double> out(v.size(), 0.0);
            if (sys->W_->disabled()) return out;
            sys->for_pairs_linear(u, v, [&](double d) { return coef(d); }, out);
            for (std::size_t a = 0; a < v.size(); ++a) out[a] += fixed_diag[a] * v[a];
            return out;
        }
    };

    Tangent tangent(const std::vector<double>& u, const PairLaw& law, Linearization mode) const {
        Tangent T;
        T.sys = this;
        T.u = u;
        T.law = law;
        T.mode = mode;
        T.fixed_diag.assign(nodes_.size(), 0.0);
        T.pair_diag.assign(nodes_.size(), 0.0);
        if (W_->disabled()) return T;
        auto c = [&](double d) { return T.coef(d); };
        for (std::size_t a = 0; a < nodes_.size(); ++a)
            T.fixed_diag[a] = fixed_sum(a, u[a], c) + folded_[a] * c(u[a] - ginf_);
        // pair diagonal: sum_b w_ab c(u_a - u_b); c is even in d
        for_pairs(u, c, T.pair_diag, /*even=*/true);
        return T;
    }

private:
    struct Run {
        int y, x0, x1;
        std::size_t off;
    };

    template <typename Pred>
    static std::vector<Run> make_runs(const GridDomain& g, Pred&& pred) {
        std::vector<Run> runs;
        std::size_t off = 0;
        for (int y = 0; y < g.ny(); ++y) {
            int x = 0;
            while (x < g.nx()) {
                if (!pred(g.index(x, y))) {
                    ++x;
                    continue;
                }
                const int x0 = x;
                while (x < g.nx() && pred(g.index(x, y))) ++x;
                runs.push_back({y, x0, x - 1, off});
                off += static_cast<std::size_t>(x - x0);
            }
        }
        return runs;
    }

    /// out_a += sum_{b != a} w_ab f(u_a - u_b) over unknown pairs, each
    /// unordered pair visited once. For odd f the partner receives -t,
    /// for even f (`even`) it receives +t.
    template <typename F>
    void for_pairs(const std::vector<double>& u, F&& f, std::vector<double>& out, bool even = false) const {
        const GridDomain& g = *grid_;
        const double sgn = even ? 1.0 : -1.0;
        for (std::size_t a = 0; a < nodes_.size(); ++a) {
            const std::size_t id = nodes_[a];
            const int ix = g.ix(id), iy = g.iy(id);
            const double ua = u[a];
            double acc = 0.0;
            for (std::size_t r = run_of_[a]; r < runs_.size(); ++r) {
                const Run& R = runs_[r];
                const double* row = W_->table_row(R.y - iy);
                const int xs = (r == run_of_[a]) ? ix + 1 : R.x0;
                const std::size_t base = R.off - static_cast<std::size_t>(R.x0);
                if (xs <= ix) {
                    const int xe = std::min(R.x1, ix);
                    for (int x = xs; x <= xe; ++x) {
                        const double t = row[ix - x] * f(ua - u[base + static_cast<std::size_t>(x)]);
                        acc += t;
                        out[base + static_cast<std::size_t>(x)] += sgn * t;
                    }
                }
                for (int x = std::max(xs, ix + 1); x <= R.x1; ++x) {
                    const double t = row[x - ix] * f(ua - u[base + static_cast<std::size_t>(x)]);
                    acc += t;
                    out[base + static_cast<std::size_t>(x)] += sgn * t;
                }
            }
            out[a] += acc;
        }
    }

    /// out_a += sum_b w_ab c(u_a - u_b) (v_a - v_b), pairs visited once.
    template <typename C>
    void for_pairs_linear(const std::vector<double>& u, const std::vector<double>& v, C&& c,
                          std::vector<double>& out) const {
        const GridDomain& g = *grid_;
        for (std::size_t a = 0; a < nodes_.size(); ++a) {
            const std::size_t id = nodes_[a];
            const int ix = g.ix(id), iy = g.iy(id);
            const double ua = u[a], va = v[a];
            double acc = 0.0;
            for (std::size_t r = run_of_[a]; r < runs_.size(); ++r) {
                const Run& R = runs_[r];
                const double* row = W_->table_row(R.y - iy);
                const int xs = (r == run_of_[a]) ? ix + 1 : R.x0;
                const std::size_t base = R.off - static_cast<std::size_t>(R.x0);
                if (xs <= ix) {
                    const int xe = std::min(R.x1, ix);
                    for (int x = xs; x <= xe; ++x) {
                        const std::size_t b = base + static_cast<std::size_t>(x);
                        const double t = row[ix - x] * c(ua - u[b]) * (va - v[b]);
                        acc += t;
                        out[b] -= t;
                    }
                }
                for (int x = std::max(xs, ix + 1); x <= R.x1; ++x) {
                    const std::size_t b = base + static_cast<std::size_t>(x);
                    const double t = row[x - ix] * c(ua - u[b]) * (va - v[b]);
                    acc += t;
                    out[b] -= t;
                }
            }
            out[a] += acc;
        }
    }

    template <typename F>
    double fixed_sum(std::size_t a, double ua, F&& f) const {
        const GridDomain& g = *grid_;
        const std::size_t id = nodes_[a];
        const int ix = g.ix(id), iy = g.iy(id);
        double acc = 0.0;
        for (const auto& R : fixed_runs_) {
            const double* row = W_->table_row(R.y - iy);
            for (int x = R.x0; x <= R.x1; ++x)
                acc += row[std::abs(x - ix)] * f(ua - fixed_vals_[R.off + static_cast<std::size_t>(x - R.x0)]);
        }
        return acc;
    }

    const KernelWeights* W_;
    GridPtr grid_;
    double ginf_ = 0.0;
    std::vector<int> index_;
    std::vector<std::size_t> nodes_;
    std::vector<Run> runs_;
    std::vector<std::size_t> run_of_;
    std::vector<Run> fixed_runs_;
    std::vector<double> fixed_vals_;
    std::vector<double> folded_;
};

}  // namespace mixpot
