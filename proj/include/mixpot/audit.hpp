#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mixpot/functionals.hpp"
#include "mixpot/params.hpp"
#include "mixpot/potentials.hpp"

namespace mixpot {

/// Bracket primitives through the library's composed functionals.
struct ComposedOps {
    static VectorField grad(const GridFunction& f) { return gradient(f); }
    static VectorField field(const VectorField& z, const FieldSpec& A) {
        VectorField out(z.grid);
        for (std::size_t i = 0; i < z.values.size(); ++i)
            out.values[i] = vector_field_A_ext(z.values[i], A, z.dim(), z.grid->coord(i));
        return out;
    }
    static double mean(const GridFunction& f, const Ball& B) { return ball_average(f, B); }
    static double mean_abs_dev(const GridFunction& f, const Ball& B, double k) {
        return ball_mean_of(*f.grid, B, [&](std::size_t i) { return std::abs(f.values[i] - k); });
    }
    static Vec2 mean(const VectorField& F, const Ball& B) { return ball_average(F, B); }
    static double mean_pow(const VectorField& F, const Ball& B, double q) { return ball_mean_pow(F, B, q); }
    static double mean_diff_pow(const VectorField& F, const VectorField& G, const Ball& B, double q) {
        const int d = F.dim();
        return ball_mean_of(*F.grid, B, [&](std::size_t i) {
            return std::pow(norm(Vec2{F.values[i][0] - G.values[i][0], F.values[i][1] - G.values[i][1]}, d), q);
        });
    }
    static double excess(const VectorField& F, const Ball& B) { return mixpot::excess(F, B); }
    static double tail(const GridFunction& f, const Point& x0, double r, double p, double s, double shift) {
        return mixpot::tail(f, x0, r, p, s, shift);
    }
    static double tail_integral(const GridFunction& f, const Point& x0, double r, double p, double s, double shift) {
        return mixpot::tail_integral(f, x0, r, p, s, shift);
    }
    static double sup_abs_dev(const GridFunction& f, const Ball& B, double k) {
        double m = 0.0;
        for (auto i : ball_nodes(*f.grid, B)) m = std::max(m, std::abs(f.values[i] - k));
        return m;
    }
    static double osc(const GridFunction& f, const Ball& B) { return oscillation(f, B); }
    /// integral over B of the mean over B of |f(x)-f(y)|^p / |x-y|^{n+sp}
    static double gagliardo_mean(const GridFunction& f, const Ball& B, double s, double p) {
        const double vol = static_cast<double>(ball_nodes(*f.grid, B).size()) * f.grid->cell_volume();
        return gagliardo_seminorm(f, B, s, p) / vol;
    }
    static double riesz(const Measure& mu, const Point& x0, double R) { return riesz_potential(mu, x0, R); }
    static double mass(const Measure& mu, const Ball& B) { return mu.tv_on_ball(B); }
    static double vnorm_at(const VectorField& F, std::size_t i) { return norm(F.values[i], F.dim()); }
    static double vnorm2(double a, double b, int dim) { return norm(Vec2{a, b}, dim); }
};

/// The same primitives recomputed by straight loops over all nodes, with
/// sequential long-double accumulation and an adaptive far-field quadrature.
struct StraightOps {
    using acc_t = long double;

    static bool in_ball(const GridDomain& g, std::size_t i, const Ball& B) {
        const Point x = g.coord(i);
        double d2 = 0.0;
        for (int k = 0; k < g.dim(); ++k) d2 += (x[k] - B.center[k]) * (x[k] - B.center[k]);
        return d2 <= B.radius * B.radius * (1.0 + 1e-12);
    }

    static VectorField grad(const GridFunction& f) {
        const GridDomain& g = *f.grid;
        VectorField out(f.grid);
        const double h = g.h();
        const int nx = g.nx(), ny = g.ny();
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::size_t id = g.index(i, j);
                auto v = [&](int a, int b) { return f.values[g.index(a, b)]; };
                double dx = 0.0, dy = 0.0;
                if (nx > 1) {
                    if (i == 0) dx = (v(1, j) - v(0, j)) / h;
                    else if (i == nx - 1) dx = (v(i, j) - v(i - 1, j)) / h;
                    else dx = (v(i + 1, j) - v(i - 1, j)) / (2.0 * h);
                }
                if (g.dim() == 2 && ny > 1) {
                    if (j == 0) dy = (v(i, 1) - v(i, 0)) / h;
                    else if (j == ny - 1) dy = (v(i, j) - v(i, j - 1)) / h;
                    else dy = (v(i, j + 1) - v(i, j - 1)) / (2.0 * h);
                }
                out.values[id] = {dx, dy};
            }
        return out;
    }

    static VectorField field(const VectorField& z, const FieldSpec& A) {
        VectorField out(z.grid);
        const double p = A.p;
        for (std::size_t i = 0; i < z.values.size(); ++i) {
            const double zx = z.values[i][0], zy = z.grid->dim() == 2 ? z.values[i][1] : 0.0;
            const double m2 = zx * zx + zy * zy;
            double a;
            if (A.variant == FieldVariant::Regularized) a = std::pow(A.eps * A.eps + m2, 0.5 * (p - 2.0));
            else if (m2 == 0.0) a = p == 2.0 ? 1.0 : 0.0;
            else a = std::pow(std::sqrt(m2), p - 2.0);
            if (A.variant == FieldVariant::Coefficient) a *= A.coeff(z.grid->coord(i));
            out.values[i] = {a * zx, a * zy};
        }
        return out;
    }

    template <typename F>
    static double ball_mean(const GridDomain& g, const Ball& B, F&& at) {
        acc_t s = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (in_ball(g, i, B)) {
                s += at(i);
                ++n;
            }
        if (n == 0) throw DomainError("ball below grid resolution");
        return static_cast<double>(s / static_cast<acc_t>(n));
    }

    static double mean(const GridFunction& f, const Ball& B) {
        return ball_mean(*f.grid, B, [&](std::size_t i) { return f.values[i]; });
    }
    static double mean_abs_dev(const GridFunction& f, const Ball& B, double k) {
        return ball_mean(*f.grid, B, [&](std::size_t i) { return std::abs(f.values[i] - k); });
    }
    static Vec2 mean(const VectorField& F, const Ball& B) {
        return {ball_mean(*F.grid, B, [&](std::size_t i) { return F.values[i][0]; }),
                ball_mean(*F.grid, B, [&](std::size_t i) { return F.values[i][1]; })};
    }
    static double vnorm(double a, double b, int dim) { return dim == 1 ? std::abs(a) : std::hypot(a, b); }
    static double vnorm2(double a, double b, int dim) { return vnorm(a, b, dim); }
    static double vnorm_at(const VectorField& F, std::size_t i) { return vnorm(F.values[i][0], F.values[i][1], F.dim()); }
    static double mean_pow(const VectorField& F, const Ball& B, double q) {
        return ball_mean(*F.grid, B, [&](std::size_t i) {
            return std::pow(vnorm(F.values[i][0], F.values[i][1], F.dim()), q);
        });
    }
    static double mean_diff_pow(const VectorField& F, const VectorField& G, const Ball& B, double q) {
        return ball_mean(*F.grid, B, [&](std::size_t i) {
            return std::pow(vnorm(F.values[i][0] - G.values[i][0], F.values[i][1] - G.values[i][1], F.dim()), q);
        });
    }
    static double excess(const VectorField& F, const Ball& B) {
        const Vec2 m = mean(F, B);
        return ball_mean(*F.grid, B, [&](std::size_t i) {
            return vnorm(F.values[i][0] - m[0], F.values[i][1] - m[1], F.dim());
        });
    }

    /// integral of |x - x0|^{-n-alpha} over the complement of (cell box union B_r)
    static double far_mass(const GridDomain& g, const Point& x0, double r, double alpha) {
        const Point lo = g.cell_lo(), hi = g.cell_hi();
        if (g.dim() == 1) {
            const double right = std::max(hi[0] - x0[0], r);
            const double left = std::max(x0[0] - lo[0], r);
            return std::pow(right, -alpha) / alpha + std::pow(left, -alpha) / alpha;
        }
        // exit distance of the ray at angle t from x0 through the box
        auto exit_dist = [&](double t) {
            const double c = std::cos(t), s = std::sin(t);
            double d = kInf;
            if (c > 0.0) d = std::min(d, (hi[0] - x0[0]) / c);
            if (c < 0.0) d = std::min(d, (lo[0] - x0[0]) / c);
            if (s > 0.0) d = std::min(d, (hi[1] - x0[1]) / s);
            if (s < 0.0) d = std::min(d, (lo[1] - x0[1]) / s);
            return d;
        };
        auto integrand = [&](double t) { return std::pow(std::max(exit_dist(t), r), -alpha) / alpha; };
        // breakpoints: corners and the angles where the exit distance crosses r (by bisection)
        std::vector<double> br;
        const double two_pi = 2.0 * std::numbers::pi;
        for (double cx : {lo[0], hi[0]})
            for (double cy : {lo[1], hi[1]}) {
                double t = std::atan2(cy - x0[1], cx - x0[0]);
                if (t < 0.0) t += two_pi;
                br.push_back(t);
            }
        br.push_back(0.0);
        br.push_back(two_pi);
        std::sort(br.begin(), br.end());
        std::vector<double> cuts = br;
        for (std::size_t k = 0; k + 1 < br.size(); ++k) {
            // within a face the exit distance is unimodal; scan and bisect sign changes
            const int scan = 64;
            double a = br[k];
            double fa = exit_dist(a) - r;
            for (int q = 1; q <= scan; ++q) {
                const double b = br[k] + (br[k + 1] - br[k]) * q / scan;
                const double fb = exit_dist(b) - r;
                if ((fa < 0.0) != (fb < 0.0)) {
                    double x = a, y = b;
                    for (int it = 0; it < 200 && y - x > 1e-16; ++it) {
                        const double m = 0.5 * (x + y);
                        if ((exit_dist(m) - r < 0.0) == (fa < 0.0)) x = m;
                        else y = m;
                    }
                    cuts.push_back(0.5 * (x + y));
                }
                a = b;
                fa = fb;
            }
        }
        std::sort(cuts.begin(), cuts.end());
        using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
        acc_t total = 0.0;
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
            if (cuts[k + 1] > cuts[k]) total += GK::integrate(integrand, cuts[k], cuts[k + 1], 12, 1e-15);
        return static_cast<double>(total);
    }

    static double tail_integral(const GridFunction& f, const Point& x0, double r, double p, double s, double shift) {
        const GridDomain& g = *f.grid;
        const int n = g.dim();
        acc_t sum = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Point x = g.coord(i);
            double d2 = 0.0;
            for (int k = 0; k < n; ++k) d2 += (x[k] - x0[k]) * (x[k] - x0[k]);
            if (d2 <= r * r * (1.0 + 1e-12)) continue;
            const double v = std::abs(f.values[i] - shift);
            if (v == 0.0) continue;
            sum += std::pow(v, p - 1.0) * std::pow(std::sqrt(d2), -(n + s * p));
        }
        const double gf = std::abs(f.far() - shift);
        const double far = gf == 0.0 ? 0.0 : std::pow(gf, p - 1.0) * far_mass(g, x0, r, s * p);
        return static_cast<double>(sum) * g.cell_volume() + far;
    }
    static double tail(const GridFunction& f, const Point& x0, double r, double p, double s, double shift) {
        return std::pow(std::pow(r, p) * tail_integral(f, x0, r, p, s, shift), 1.0 / (p - 1.0));
    }

    static double sup_abs_dev(const GridFunction& f, const Ball& B, double k) {
        double m = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i)
            if (in_ball(*f.grid, i, B)) m = std::max(m, std::abs(f.values[i] - k));
        return m;
    }
    static double osc(const GridFunction& f, const Ball& B) {
        double lo = kInf, hi = -kInf;
        for (std::size_t i = 0; i < f.size(); ++i)
            if (in_ball(*f.grid, i, B)) {
                lo = std::min(lo, f.values[i]);
                hi = std::max(hi, f.values[i]);
            }
        return hi - lo;
    }
    static double gagliardo_mean(const GridFunction& f, const Ball& B, double s, double p) {
        const GridDomain& g = *f.grid;
        std::vector<std::size_t> ids;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (in_ball(g, i, B)) ids.push_back(i);
        const int n = g.dim();
        acc_t sum = 0.0;
        for (auto a : ids)
            for (auto b : ids) {
                if (a == b) continue;
                const double d = dist(g.coord(a), g.coord(b), n);
                sum += std::pow(std::abs(f.values[a] - f.values[b]), p) / std::pow(d, n + s * p);
            }
        const double hv = g.cell_volume();
        return static_cast<double>(sum) * hv * hv / (static_cast<double>(ids.size()) * hv);
    }

    /// |mu|(B) with cell overlaps summed over every cell.
    static double mass(const Measure& mu, const Ball& B) {
        acc_t s = 0.0;
        for (const auto& a : mu.atoms())
            if (dist2(a.x, B.center, mu.dim()) < B.radius * B.radius) s += std::abs(a.w);
        if (mu.density()) {
            const GridFunction& d = *mu.density();
            for (std::size_t i = 0; i < d.size(); ++i)
                if (d.values[i] != 0.0) s += std::abs(d.values[i]) * Measure::cell_overlap(*d.grid, i, B);
        }
        return static_cast<double>(s);
    }

    /// Riesz potential: closed form per atom; for a density the same
    /// log-radius Gauss rule as the library, with |mu|(B_rho) summed over all
    /// cells at every node. Atoms and density together are not supported.
    static double riesz(const Measure& mu, const Point& x0, double R) {
        const int n = mu.dim();
        if (!mu.density()) {
            acc_t s = 0.0;
            for (const auto& a : mu.atoms()) {
                const double d = dist(a.x, x0, n);
                if (a.w == 0.0 || d >= R) continue;
                if (d == 0.0) return kInf;
                s += std::abs(a.w) * (n == 1 ? std::log(R / d) : 1.0 / d - 1.0 / R);
            }
            return static_cast<double>(s);
        }
        if (!mu.atoms().empty()) throw DomainError("straight Riesz path needs atoms or a density, not both");
        const double h = mu.density()->grid->h();
        const double rho_min = std::min(1e-3 * h, 1e-3 * R);
        acc_t acc = mass(mu, Ball(x0, rho_min)) * std::pow(rho_min, 1.0 - n);
        using GL = boost::math::quadrature::gauss<double, 3>;
        const double la = std::log(rho_min), lb = std::log(R);
        const int pieces = std::max(1, static_cast<int>(std::ceil(64.0 * (lb - la) / std::numbers::ln10)));
        const double step = (lb - la) / pieces;
        const double xs[3] = {-GL::abscissa()[1], GL::abscissa()[0], GL::abscissa()[1]};
        const double ws[3] = {GL::weights()[1], GL::weights()[0], GL::weights()[1]};
        for (int i = 0; i < pieces; ++i) {
            const double mid = la + (i + 0.5) * step;
            for (int q = 0; q < 3; ++q) {
                const double rho = std::exp(mid + 0.5 * step * xs[q]);
                acc += 0.5 * step * ws[q] * mass(mu, Ball(x0, rho)) * std::pow(rho, 1.0 - n);
            }
        }
        return static_cast<double>(acc);
    }
};

/// Largest relative disagreement between two equally shaped term lists.
/// Terms below floor_rel times the largest magnitude are compared on that
/// absolute scale.
inline double audit_discrepancy(const std::vector<double>& a, const std::vector<double>& b, double floor_rel = 1e-6) {
    if (a.size() != b.size()) throw Error("audit term lists differ in length");
    double big = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::isfinite(a[i])) big = std::max(big, std::abs(a[i]));
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::isinf(a[i]) || std::isinf(b[i])) {
            if (a[i] != b[i]) return kInf;
            continue;
        }
        if (std::isnan(a[i]) || std::isnan(b[i])) {
            if (std::isnan(a[i]) != std::isnan(b[i])) return kInf;
            continue;
        }
        const double den = std::max({std::abs(a[i]), std::abs(b[i]), floor_rel * big, 1e-300});
        worst = std::max(worst, std::abs(a[i] - b[i]) / den);
    }
    return worst;
}

}  // namespace mixpot
