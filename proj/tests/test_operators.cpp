#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <filesystem>
#include <fstream>
#include <random>

#include "mixpot/system.hpp"

using namespace mixpot;

namespace {

GridPtr box2(double half, double h) { return share(GridDomain::make_box_interior(2, {-half, -half}, {half, half}, h)); }
GridPtr box1(double half, double h) { return share(GridDomain::make_box_interior(1, {-half, 0.0}, {half, 0.0}, h)); }

ParamSet params(int n, double s, double p) {
    ParamSet P;
    P.n = n;
    P.s = s;
    P.p = p;
    return P;
}

Vec2 random_vec(std::mt19937_64& rng, double scale = 3.0) {
    std::uniform_real_distribution<double> U(-scale, scale);
    return {U(rng), U(rng)};
}

double norm2(const Vec2& z) { return std::hypot(z[0], z[1]); }

std::vector<double> masked(const GridDomain& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<double> v(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.interior(i)) v[i] = U(rng);
    return v;
}

}  // namespace

TEST(VectorField, ClosedForms) {
    const auto A2 = vector_field_A({1.5, -2.0}, FieldSpec::model(2.0));
    EXPECT_EQ(A2[0], 1.5);
    EXPECT_EQ(A2[1], -2.0);
    const auto A3 = vector_field_A({2.0, 0.0}, FieldSpec::model(3.0));
    EXPECT_DOUBLE_EQ(A3[0], 4.0);
    EXPECT_EQ(A3[1], 0.0);
    const auto A0 = vector_field_A({0.0, 0.0}, FieldSpec::model(3.0));
    EXPECT_EQ(A0[0], 0.0);
}

TEST(VectorField, DegenerateEvaluationBelowTwo) {
    EXPECT_THROW(vector_field_A({0.0, 0.0}, FieldSpec::model(1.7)), DomainError);
    EXPECT_THROW(jacobian_A({0.0, 0.0}, FieldSpec::model(1.7)), DomainError);
    const auto r = vector_field_A({0.0, 0.0}, FieldSpec::regularized(1.7, 0.1));
    EXPECT_EQ(r[0], 0.0);
    EXPECT_THROW(FieldSpec::regularized(1.7, 0.0), DomainError);
}

TEST(VectorField, GrowthBoundOnRandomSamples) {
    std::mt19937_64 rng(11);
    for (double p : {1.6, 2.0, 2.5, 3.0}) {
        const auto f = FieldSpec::model(p);
        for (int k = 0; k < 100000; ++k) {
            const Vec2 z = random_vec(rng);
            const double bound = std::pow(norm2(z), p - 1.0);
            ASSERT_LE(norm2(vector_field_A(z, f)), bound * (1.0 + 1e-13)) << "p=" << p;
        }
    }
}

TEST(VectorField, CoefficientVariantStaysInBounds) {
    const auto f = FieldSpec::coefficient(3.0, [](const Point& x) { return 1.5 + 0.5 * std::sin(x[0]); });
    std::mt19937_64 rng(12);
    for (int k = 0; k < 1000; ++k) {
        const Vec2 z = random_vec(rng);
        const Point x = random_vec(rng, 5.0);
        const double m = norm2(vector_field_A(z, f, 2, x)) / std::pow(norm2(z), 2.0);
        EXPECT_GE(m, 1.0 - 1e-12);
        EXPECT_LE(m, 2.0 + 1e-12);
    }
}

TEST(Jacobian, IdentityAtPTwo) {
    const auto J = jacobian_A({0.3, -4.0}, FieldSpec::model(2.0));
    EXPECT_EQ(J[0][0], 1.0);
    EXPECT_EQ(J[1][1], 1.0);
    EXPECT_EQ(J[0][1], 0.0);
}

TEST(Jacobian, MatchesCentralDifferences) {
    std::mt19937_64 rng(13);
    for (double p : {1.6, 2.5, 3.0, 4.0})
        for (const auto& f : {FieldSpec::model(p), FieldSpec::regularized(p, 0.3)}) {
            for (int k = 0; k < 200; ++k) {
                Vec2 z = random_vec(rng);
                if (norm2(z) < 0.2) continue;
                const auto J = jacobian_A(z, f);
                const double step = 1e-5;
                for (int c = 0; c < 2; ++c) {
                    Vec2 zp = z, zm = z;
                    zp[c] += step;
                    zm[c] -= step;
                    const auto Ap = vector_field_A(zp, f), Am = vector_field_A(zm, f);
                    for (int r = 0; r < 2; ++r) {
                        const double fd = (Ap[r] - Am[r]) / (2.0 * step);
                        EXPECT_NEAR(J[r][c], fd, 1e-6 * std::max(1.0, std::abs(fd))) << "p=" << p;
                    }
                }
                EXPECT_NEAR(J[0][1], J[1][0], 1e-14 * std::max(1.0, std::abs(J[0][1])));
            }
        }
}

TEST(Jacobian, EllipticityOnRandomPairs) {
    std::mt19937_64 rng(14);
    for (double p : {1.6, 2.0, 2.5, 3.0}) {
        const auto f = FieldSpec::model(p);
        const double nu = std::min(1.0, p - 1.0);
        for (int k = 0; k < 20000; ++k) {
            const Vec2 z = random_vec(rng), xi = random_vec(rng);
            if (norm2(z) == 0.0) continue;
            const auto J = jacobian_A(z, f);
            const double q = xi[0] * (J[0][0] * xi[0] + J[0][1] * xi[1]) + xi[1] * (J[1][0] * xi[0] + J[1][1] * xi[1]);
            const double lower = nu * std::pow(norm2(z), p - 2.0) * (xi[0] * xi[0] + xi[1] * xi[1]);
            ASSERT_GE(q, lower * (1.0 - 1e-12)) << "p=" << p;
        }
    }
}

TEST(VMap, ClosedForms) {
    const auto v2 = v_map({0.7, -1.1}, 2.0);
    EXPECT_EQ(v2[0], 0.7);
    EXPECT_EQ(v2[1], -1.1);
    const auto v4 = v_map({1.0, 0.0}, 4.0);
    EXPECT_DOUBLE_EQ(v4[0], 1.0);
    EXPECT_EQ(v4[1], 0.0);
    EXPECT_EQ(v_map({0.0, 0.0}, 3.0)[0], 0.0);
    // |V(z)|^2 = |z|^p
    const auto v = v_map({3.0, 4.0}, 3.0);
    EXPECT_NEAR(v[0] * v[0] + v[1] * v[1], std::pow(5.0, 3.0), 1e-12);
}

// (A(z1)-A(z2)).(z1-z2) is comparable to |V(z1)-V(z2)|^2; the constant fitted
// on 1e5 pairs per p should not drift with p.
TEST(VMap, MonotonicityConstantStableAcrossP) {
    std::mt19937_64 rng(15);
    std::vector<double> fitted;
    for (double p : {2.0, 2.5, 3.0}) {
        const auto f = FieldSpec::model(p);
        double lo = kInf, hi = 0.0;
        for (int k = 0; k < 100000; ++k) {
            const Vec2 z1 = random_vec(rng), z2 = random_vec(rng);
            const auto a1 = vector_field_A(z1, f), a2 = vector_field_A(z2, f);
            const auto v1 = v_map(z1, p), v2 = v_map(z2, p);
            const double lhs = (a1[0] - a2[0]) * (z1[0] - z2[0]) + (a1[1] - a2[1]) * (z1[1] - z2[1]);
            const double dv = (v1[0] - v2[0]) * (v1[0] - v2[0]) + (v1[1] - v2[1]) * (v1[1] - v2[1]);
            if (dv < 1e-20) continue;
            ASSERT_GT(lhs, 0.0);
            lo = std::min(lo, lhs / dv);
            hi = std::max(hi, lhs / dv);
        }
        fitted.push_back(std::max(hi, 1.0 / lo));
    }
    const auto [a, b] = std::minmax_element(fitted.begin(), fitted.end());
    EXPECT_LT(*b / *a, 5.0);
}

TEST(InverseA, ClosedFormsAndRoundTrip) {
    const auto i2 = inverse_A({1.25, -3.0}, FieldSpec::model(2.0));
    EXPECT_DOUBLE_EQ(i2[0], 1.25);
    EXPECT_DOUBLE_EQ(i2[1], -3.0);
    const auto i3 = inverse_A({4.0, 0.0}, FieldSpec::model(3.0));
    EXPECT_NEAR(i3[0], 2.0, 1e-15);
    EXPECT_THROW(inverse_A({1.0, 0.0}, FieldSpec::regularized(3.0, 0.1)), DomainError);
    std::mt19937_64 rng(16);
    for (double p : {1.6, 2.5, 3.0})
        for (int k = 0; k < 10000; ++k) {
            const Vec2 w = random_vec(rng, 10.0);
            const auto back = vector_field_A(inverse_A(w, FieldSpec::model(p)), FieldSpec::model(p));
            ASSERT_NEAR(back[0], w[0], 1e-12 * norm2(w));
            ASSERT_NEAR(back[1], w[1], 1e-12 * norm2(w));
        }
}

TEST(KernelWeights, AdjacentCellMatchesAntiderivative) {
    // s p = 1/2 in 1D: integral of |y|^{-3/2} over [h/2, 3h/2]
    const double h = 1.0 / 64.0;
    const auto g = box1(0.5, h);
    const auto W = KernelWeights::assemble(g, params(1, 0.25, 2.0), KernelSpec::model());
    const double exact = 2.0 / std::sqrt(0.5 * h) - 2.0 / std::sqrt(1.5 * h);
    EXPECT_NEAR(W.offset_weight(1, 0), exact, 1e-10 * exact);
    const double exact5 = 2.0 / std::sqrt(4.5 * h) - 2.0 / std::sqrt(5.5 * h);
    EXPECT_NEAR(W.offset_weight(5, 0), exact5, 1e-10 * exact5);
    EXPECT_EQ(W.offset_weight(0, 0), 0.0);
}

TEST(KernelWeights, PlanarCellAgainstAdaptiveQuadrature) {
    const double h = 1.0 / 16.0, alpha = 0.5 * 2.5;
    const auto g = box2(0.5, h);
    const auto W = KernelWeights::assemble(g, params(2, 0.5, 2.5), KernelSpec::model());
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    for (auto [kx, ky] : std::vector<std::pair<int, int>>{{1, 0}, {1, 1}, {2, 1}, {6, 3}}) {
        const double oracle = GK::integrate(
            [&](double x) {
                return GK::integrate([&](double y) { return std::pow(x * x + y * y, -0.5 * (2.0 + alpha)); },
                                     (ky - 0.5) * h, (ky + 0.5) * h, 10, 1e-12);
            },
            (kx - 0.5) * h, (kx + 0.5) * h, 10, 1e-11);
        EXPECT_NEAR(W.offset_weight(kx, ky), oracle, 1e-6 * oracle) << kx << "," << ky;
    }
}

TEST(KernelWeights, PositiveAndSymmetric) {
    const auto g = share(GridDomain::make_ball_interior(2, {-0.5, -0.5}, {0.5, 0.5}, 1.0 / 16.0, {{0.0, 0.0}, 0.4}));
    const auto W = KernelWeights::assemble(g, params(2, 0.4, 3.0), KernelSpec::model());
    for (std::size_t i = 0; i < g->size(); i += 7)
        for (std::size_t j = 0; j < g->size(); ++j) {
            if (i == j) {
                EXPECT_EQ(W.weight(i, j), 0.0);
                continue;
            }
            ASSERT_GT(W.weight(i, j), 0.0);
            ASSERT_EQ(W.weight(i, j), W.weight(j, i));
        }
    for (double m : W.far_masses()) EXPECT_GT(m, 0.0);
}

TEST(KernelWeights, ModulatedKernelWithinBounds) {
    for (int dim : {1, 2}) {
        const auto g = dim == 1 ? box1(0.5, 1.0 / 64.0) : box2(0.5, 1.0 / 16.0);
        const auto P = params(dim, 0.5, 2.0);
        const auto M = KernelWeights::assemble(g, P, KernelSpec::model());
        const auto B = KernelWeights::assemble(g, P, KernelSpec::modulated(0.5, 2.0, 9.0));
        for (std::size_t k = 1; k < M.table().size(); ++k) {
            ASSERT_GE(B.table()[k], 0.5 * M.table()[k] * (1.0 - 1e-12));
            ASSERT_LE(B.table()[k], 2.0 * M.table()[k] * (1.0 + 1e-12));
        }
    }
}

TEST(KernelWeights, MemoryGuard) {
    const auto g = box2(0.5, 1.0 / 144.0);
    ASSERT_GT(g->size(), kDenseNodeLimit);
    EXPECT_THROW(KernelWeights::assemble(g, params(2, 0.5, 2.0), KernelSpec::model()), DomainError);
}

TEST(KernelWeights, CacheRoundTripAndCorruption) {
    const auto dir = std::filesystem::temp_directory_path() / "mixpot_test_kernel_cache";
    std::filesystem::remove_all(dir);
    const auto g = box2(0.5, 1.0 / 16.0);
    const auto P = params(2, 0.5, 2.5);
    const auto A = KernelWeights::cached(dir, g, P, KernelSpec::model());
    const auto B = KernelWeights::cached(dir, g, P, KernelSpec::model());
    EXPECT_EQ(A.table(), B.table());
    EXPECT_EQ(A.far_masses(), B.far_masses());
    const auto file = dir / (A.cache_key() + ".kw");
    ASSERT_TRUE(std::filesystem::exists(file));
    EXPECT_NE(A.cache_key(), KernelWeights::cache_key_for(*g, 0.4, 2.5, KernelSpec::model()));
    EXPECT_THROW(KernelWeights::load(file, g, params(2, 0.4, 2.5), KernelSpec::model()), Error);
    {
        std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(-3, std::ios::end);
        f.put('\x5a');
    }
    try {
        KernelWeights::cached(dir, g, P, KernelSpec::model());
        FAIL() << "corrupted cache accepted";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("checksum mismatch"), std::string::npos);
    }
    std::filesystem::remove_all(dir);
}

TEST(FractionalOperator, ConstantsAndOddness) {
    const auto g = box2(0.5, 1.0 / 16.0);
    for (double p : {1.6, 2.0, 3.0}) {
        const auto W = KernelWeights::assemble(g, params(2, 0.5, p), KernelSpec::model());
        const auto c = apply_fractional_pLaplacian(GridFunction(g, 2.5, 2.5), W, p);
        for (double v : c.values) EXPECT_EQ(v, 0.0);
        const auto u = GridFunction::sample(g, [](const Point& x) { return std::sin(3 * x[0]) + x[1] * x[1]; }, 0.3);
        GridFunction r = u;  // 2c - u about c = 0.7
        for (auto& v : r.values) v = 1.4 - v;
        r.far_field = 1.4 - *u.far_field;
        const auto Lu = apply_fractional_pLaplacian(u, W, p), Lr = apply_fractional_pLaplacian(r, W, p);
        for (std::size_t i = 0; i < g->size(); ++i) EXPECT_NEAR(Lu.values[i], -Lr.values[i], 1e-10 * (1.0 + std::abs(Lu.values[i])));
    }
}

// Fourier symbol of the 1D fractional Laplacian: (-Delta)^s sin(kx) = |k|^{2s} sin(kx).
// The far term against a zero far field stands in for the periodic extension.
TEST(FractionalOperator, SymbolOfSineMidGrid) {
    const double s = 0.5, k = 2.0 * std::numbers::pi;
    const auto g = box1(4.0, 8.0 / 512.0);
    const auto W = KernelWeights::assemble(g, params(1, s, 2.0), KernelSpec::scaled(fractional_laplacian_constant_1d(s)));
    const auto u = GridFunction::sample(g, [&](const Point& x) { return std::sin(k * x[0]); }, 0.0);
    const auto L = apply_fractional_pLaplacian(u, W, 2.0);
    int checked = 0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double x = g->coord(i)[0], e = std::sin(k * x);
        if (std::abs(x) > 1.0 || std::abs(e) < 0.5) continue;
        EXPECT_NEAR(L.values[i] / e, std::pow(k, 2.0 * s), 0.05 * std::pow(k, 2.0 * s)) << "x=" << x;
        ++checked;
    }
    EXPECT_GT(checked, 50);
}

// With the self-cell weight dropped the symbol error is O(h^{2-sp}); at
// s p = 3/2 halving h should shrink it by about 2^{1/2}.
TEST(FractionalOperator, ConsistencyOrderUnderRefinement) {
    const double s = 0.75, k = 2.0 * std::numbers::pi;
    std::vector<double> err;
    for (int N : {256, 512, 1024}) {
        const auto g = box1(4.0, 8.0 / N);
        const auto W = KernelWeights::assemble(g, params(1, s, 2.0), KernelSpec::scaled(fractional_laplacian_constant_1d(s)));
        const auto u = GridFunction::sample(g, [&](const Point& x) { return std::sin(k * x[0]); }, 0.0);
        const auto L = apply_fractional_pLaplacian(u, W, 2.0);
        double worst = 0.0;
        for (std::size_t i = 0; i < g->size(); ++i) {
            const double x = g->coord(i)[0], e = std::sin(k * x);
            if (std::abs(x) > 1.0 || std::abs(e) < 0.5) continue;
            worst = std::max(worst, std::abs(L.values[i] / e / std::pow(k, 2.0 * s) - 1.0));
        }
        err.push_back(worst);
    }
    for (std::size_t m = 1; m < err.size(); ++m) {
        const double ratio = err[m - 1] / err[m];
        EXPECT_GT(ratio, 1.2);
        EXPECT_LT(ratio, 1.7);
    }
}

TEST(FractionalOperator, FastSystemMatchesPlainSum) {
    const auto g = share(GridDomain::make_ball_interior(2, {-0.5, -0.5}, {0.5, 0.5}, 1.0 / 16.0, {{0.0, 0.0}, 0.4}));
    std::mt19937_64 rng(17);
    for (double p : {1.6, 2.0, 2.5}) {
        const auto W = KernelWeights::assemble(g, params(2, 0.6, p), KernelSpec::model());
        std::vector<double> data(g->size());
        for (std::size_t i = 0; i < g->size(); ++i) data[i] = g->interior(i) ? 0.0 : (i % 3 == 0 ? 0.2 : std::cos(double(i)));
        const GridFunction d(g, data, 0.2);
        const NonlocalSystem sys(W, d, g->mask());
        std::vector<double> u(sys.size());
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (auto& v : u) v = U(rng);
        const auto fast = sys.apply(u, PairLaw{p, 0.0});
        GridFunction full = d;
        for (std::size_t a = 0; a < u.size(); ++a) full.values[sys.nodes()[a]] = u[a];
        const auto plain = apply_fractional_pLaplacian(full, W, p);
        for (std::size_t a = 0; a < u.size(); ++a)
            ASSERT_NEAR(fast[a], plain.values[sys.nodes()[a]], 1e-10 * (1.0 + std::abs(fast[a])));
    }
}

TEST(FractionalOperator, MonotoneOnCommonExteriorData) {
    const auto g = share(GridDomain::make_ball_interior(2, {-0.5, -0.5}, {0.5, 0.5}, 1.0 / 16.0, {{0.0, 0.0}, 0.4}));
    std::mt19937_64 rng(18);
    for (double p : {1.6, 2.0, 3.0}) {
        const auto W = KernelWeights::assemble(g, params(2, 0.5, p), KernelSpec::model());
        for (int trial = 0; trial < 20; ++trial) {
            auto ext = GridFunction::sample(g, [](const Point& x) { return x[0] - 0.5 * x[1]; }, 0.1);
            auto u = ext, w = ext;
            const auto du = masked(*g, rng), dw = masked(*g, rng);
            for (std::size_t i = 0; i < g->size(); ++i) {
                u.values[i] += du[i];
                w.values[i] += dw[i];
            }
            const auto Lu = apply_fractional_pLaplacian(u, W, p), Lw = apply_fractional_pLaplacian(w, W, p);
            double acc = 0.0;
            for (std::size_t i = 0; i < g->size(); ++i) acc += (Lu.values[i] - Lw.values[i]) * (u.values[i] - w.values[i]);
            EXPECT_GE(acc, -1e-10);
        }
    }
}

TEST(FractionalOperator, DisabledKernelGivesZero) {
    const auto g = box2(0.5, 1.0 / 8.0);
    const auto W = KernelWeights::assemble(g, params(2, 0.5, 2.0), KernelSpec::none());
    const auto u = GridFunction::sample(g, [](const Point& x) { return x[0] * x[0]; }, 1.0);
    for (double v : apply_fractional_pLaplacian(u, W, 2.0).values) EXPECT_EQ(v, 0.0);
}

TEST(LocalOperator, AffineIsAnnihilated) {
    const auto g = box2(0.5, 1.0 / 16.0);
    const auto u = GridFunction::sample(g, [](const Point& x) { return 0.3 + 2.0 * x[0] - 1.5 * x[1]; });
    for (double p : {1.6, 2.0, 3.0})
        for (double v : apply_local_pLaplacian(u, FieldSpec::model(p)).values) EXPECT_NEAR(v, 0.0, 1e-10);
}

TEST(LocalOperator, LaplacianOfSquaredNorm) {
    for (int dim : {1, 2}) {
        const auto g = dim == 1 ? box1(0.5, 1.0 / 32.0) : box2(0.5, 1.0 / 32.0);
        const auto u = GridFunction::sample(g, [&](const Point& x) { return x[0] * x[0] + (dim == 2 ? x[1] * x[1] : 0.0); });
        const auto L = apply_local_pLaplacian(u, FieldSpec::model(2.0));
        for (std::size_t i = 0; i < g->size(); ++i) {
            if (!g->interior(i)) continue;
            EXPECT_NEAR(L.values[i], -2.0 * dim, 1e-9);
        }
    }
}

// -div(|Du|Du) for u = |x|^2 in the plane is -12|x|; the error should fall
// like h^2 away from the origin.
TEST(LocalOperator, PThreeTaylorOrder) {
    std::vector<double> err;
    for (double h : {1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0}) {
        const auto g = box2(0.5, h);
        const auto u = GridFunction::sample(g, [](const Point& x) { return x[0] * x[0] + x[1] * x[1]; });
        const auto L = apply_local_pLaplacian(u, FieldSpec::model(3.0));
        double worst = 0.0;
        for (std::size_t i = 0; i < g->size(); ++i) {
            const double r = std::hypot(g->coord(i)[0], g->coord(i)[1]);
            if (!g->interior(i) || r < 0.2) continue;
            worst = std::max(worst, std::abs(L.values[i] + 12.0 * r));
        }
        err.push_back(worst);
    }
    EXPECT_GT(err[0] / err[1], 3.0);
    EXPECT_GT(err[1] / err[2], 3.0);
}

TEST(LocalOperator, NonnegativeAtStrictInteriorMax) {
    const auto g = box2(0.5, 1.0 / 32.0);
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> U(-0.25, 0.25), S(0.05, 0.2);
    for (double p : {1.6, 2.0, 3.0})
        for (int trial = 0; trial < 30; ++trial) {
            const Point c{U(rng), U(rng)};
            const double w = S(rng);
            const auto u = GridFunction::sample(g, [&](const Point& x) {
                return std::exp(-(dist2(x, c, 2)) / (w * w)) + 0.1 * std::sin(5 * x[0]);
            });
            std::size_t best = 0;
            for (std::size_t i = 0; i < g->size(); ++i)
                if (u.values[i] > u.values[best]) best = i;
            if (!g->interior(best)) continue;
            const auto L = apply_local_pLaplacian(u, FieldSpec::model(p));
            EXPECT_GE(L.values[best], 0.0);
        }
}

TEST(LocalOperator, OddAboutConstants) {
    const auto g = box2(0.5, 1.0 / 16.0);
    const auto u = GridFunction::sample(g, [](const Point& x) { return std::sin(2 * x[0]) * std::cos(3 * x[1]) + x[0]; });
    GridFunction r = u;
    for (auto& v : r.values) v = -0.6 - v;
    for (double p : {1.6, 2.5, 3.0}) {
        const auto a = apply_local_pLaplacian(u, FieldSpec::model(p)), b = apply_local_pLaplacian(r, FieldSpec::model(p));
        for (std::size_t i = 0; i < g->size(); ++i) EXPECT_NEAR(a.values[i], -b.values[i], 1e-10 * (1.0 + std::abs(a.values[i])));
    }
}

TEST(Residual, ConstantsSolveTheHomogeneousProblem) {
    const auto g = share(GridDomain::make_ball_interior(2, {-0.5, -0.5}, {0.5, 0.5}, 1.0 / 16.0, {{0.0, 0.0}, 0.4}));
    for (double p : {2.0, 3.0}) {
        const auto W = KernelWeights::assemble(g, params(2, 0.5, p), KernelSpec::model());
        const GridFunction c(g, 1.25, 1.25);
        const auto r = residual(c, Measure(2), c, FieldSpec::model(p), W);
        for (double v : r.values) EXPECT_EQ(v, 0.0);
    }
}

TEST(Residual, LinearAtPTwo) {
    const auto g = share(GridDomain::make_ball_interior(2, {-0.5, -0.5}, {0.5, 0.5}, 1.0 / 16.0, {{0.0, 0.0}, 0.4}));
    const auto W = KernelWeights::assemble(g, params(2, 0.5, 2.0), KernelSpec::model());
    const auto mu = Measure::from_density(GridFunction::sample(g, [](const Point& x) { return 1.0 + x[0]; }));
    const auto u1 = GridFunction::sample(g, [](const Point& x) { return std::sin(4 * x[0]) + x[1]; }, 0.5);
    const auto u2 = GridFunction::sample(g, [](const Point& x) { return x[0] * x[1] - x[1] * x[1]; }, -0.2);
    GridFunction sum = u1;
    for (std::size_t i = 0; i < g->size(); ++i) sum.values[i] += u2.values[i];
    sum.far_field = 0.3;
    const auto f = FieldSpec::model(2.0);
    const auto r1 = residual(u1, mu, u1, f, W), r2 = residual(u2, mu, u2, f, W), rs = residual(sum, mu, sum, f, W);
    for (std::size_t i = 0; i < g->size(); ++i) {
        if (!g->interior(i)) continue;
        EXPECT_NEAR(rs.values[i], r1.values[i] + r2.values[i] + mu.density()->values[i], 1e-10 * (1.0 + std::abs(rs.values[i])));
    }
}

TEST(Residual, ManufacturedSolutionIsExact) {
    const auto g = share(GridDomain::make_ball_interior(2, {-0.5, -0.5}, {0.5, 0.5}, 1.0 / 24.0, {{0.0, 0.0}, 0.4}));
    for (double p : {1.75, 2.0, 2.5, 3.0}) {
        const auto W = KernelWeights::assemble(g, params(2, 0.5, p), KernelSpec::model());
        const auto f = FieldSpec::model(p);
        const auto u = GridFunction::sample(g, [](const Point& x) { return std::cos(3 * x[0]) + 0.5 * x[1] + x[0] * x[1]; }, 0.4);
        const auto rhs = manufactured_rhs(u, f, W);
        const auto r = residual(u, Measure::from_density(rhs), u, f, W);
        double scale = 0.0;
        for (double v : rhs.values) scale = std::max(scale, std::abs(v));
        for (double v : r.values) EXPECT_LE(std::abs(v), 1e-12 * scale) << "p=" << p;
    }
}

TEST(Residual, RejectsViolatedExteriorData) {
    const auto g = share(GridDomain::make_ball_interior(2, {-0.5, -0.5}, {0.5, 0.5}, 1.0 / 8.0, {{0.0, 0.0}, 0.4}));
    const auto W = KernelWeights::assemble(g, params(2, 0.5, 2.0), KernelSpec::model());
    const GridFunction data(g, 0.0, 0.0);
    GridFunction u = data;
    u.values[0] = 1.0;
    try {
        residual(u, Measure(2), data, FieldSpec::model(2.0), W);
        FAIL() << "exterior mismatch accepted";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("Dirichlet complement violated"), std::string::npos);
    }
    GridFunction far = data;
    far.far_field = 1.0;
    EXPECT_THROW(residual(far, Measure(2), data, FieldSpec::model(2.0), W), DomainError);
}

TEST(ParamSet, RangeChecks) {
    EXPECT_NO_THROW(params(2, 0.5, 1.6).validate());
    EXPECT_THROW(params(2, 0.5, 1.4).validate(), ParamError);
    EXPECT_NO_THROW(params(1, 0.5, 1.1).validate());
    EXPECT_THROW(params(2, 1.2, 2.0).validate(), ParamError);
    auto P = params(2, 0.5, 2.0);
    P.nu_A = 2.0;
    P.L_A = 1.0;
    EXPECT_THROW(P.validate(), ParamError);
    for (double p : {1.6, 2.0, 3.0}) EXPECT_LT(params(2, 0.5, p).abar1(), params(2, 0.5, p).abar2());
    EXPECT_EQ(params(2, 0.5, 1.6).q0(), 1.0);
    EXPECT_EQ(params(2, 0.5, 3.0).q0(), 2.0);
}
