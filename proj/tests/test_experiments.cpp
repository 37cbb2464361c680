#include <gtest/gtest.h>

#include "mixpot/experiments.hpp"

using namespace mixpot;

namespace {

// Desk scenes shrunk to unit-test size.
ExperimentSetup quick(const std::string& name) {
    ExperimentSetup S = defaults_for(name);
    if (name == "dirac_gradient") {
        S.h = 0.1 / 64.0;
        S.delta0 = 4.0 * S.h;
    } else if (S.dim == 1) {
        S.h = 1.0 / 64.0;
    } else {
        S.h = 1.0 / 24.0;
    }
    if (name == "A_excess_decay_measure") S.levels = 4;
    return S;
}

bool all_zero(const std::vector<double>& v) {
    for (double x : v)
        if (x != 0.0) return false;
    return true;
}

}  // namespace

TEST(FitUtilities, LogLogFitRecoversPowerLaw) {
    std::vector<double> x, y;
    for (double t : {0.5, 0.25, 0.125, 0.0625}) {
        x.push_back(t);
        y.push_back(3.0 * std::pow(t, 1.7));
    }
    const LogFit f = loglog_fit(x, y);
    EXPECT_NEAR(f.slope, 1.7, 1e-12);
    EXPECT_NEAR(f.intercept, std::log10(3.0), 1e-12);
    EXPECT_NEAR(f.residual, 0.0, 1e-12);
    EXPECT_EQ(f.points, 4u);
    x.push_back(0.01);
    y.push_back(0.0);  // skipped
    EXPECT_EQ(loglog_fit(x, y).points, 4u);
    EXPECT_TRUE(std::isnan(loglog_fit({1.0}, {1.0}).slope));
    EXPECT_THROW(loglog_fit({1.0, 2.0}, {1.0}), DomainError);
}

TEST(FitUtilities, ResidualMeasuresScatter) {
    // alternating +-0.1 in log10 about a line: RMS residual 0.1
    std::vector<double> x{1, 2, 4, 8}, y;
    for (std::size_t i = 0; i < x.size(); ++i) y.push_back(x[i] * std::pow(10.0, i % 2 ? -0.1 : 0.1));
    const LogFit f = loglog_fit(x, y);
    EXPECT_GT(f.residual, 0.05);
    EXPECT_LT(f.residual, 0.1 + 1e-12);
}

TEST(FitUtilities, RatioSpreadAndSafeRatio) {
    EXPECT_EQ(ratio_spread({}), 1.0);
    EXPECT_EQ(ratio_spread({0.0, 0.0}), 1.0);
    EXPECT_EQ(ratio_spread({2.0, 8.0, 4.0}), 4.0);
    EXPECT_EQ(ratio_spread({0.0, 1.0}), kInf);
    EXPECT_EQ(ratio_spread({1.0, kInf}), kInf);
    EXPECT_EQ(ratio_spread({-1.0, 1.0}), kInf);
    EXPECT_EQ(safe_ratio(1.0, 4.0), 0.25);
    EXPECT_EQ(safe_ratio(0.0, 0.0), 0.0);
    EXPECT_EQ(safe_ratio(1.0, 0.0), kInf);
    EXPECT_NEAR(max_relative_change({1.0, 2.0}, {1.1, 1.9}), 0.1, 1e-12);
    EXPECT_EQ(max_relative_change({0.0}, {0.0}), 0.0);
    EXPECT_EQ(max_relative_change({0.0}, {1.0}), kInf);
    EXPECT_THROW(max_relative_change({1.0}, {1.0, 2.0}), DomainError);
    const auto d = detail::dyadic(0.8, 3);
    EXPECT_EQ(d, (std::vector<double>{0.8, 0.4, 0.2}));
}

TEST(DecayExponents, DefaultsAndRanges) {
    const auto d3 = DecayExponents::defaults(0.5, 3.0);
    EXPECT_DOUBLE_EQ(d3.eps1, 0.1 / 12.0);
    EXPECT_NO_THROW(d3.validate(0.5, 3.0));
    const auto d175 = DecayExponents::defaults(0.5, 1.75);
    EXPECT_DOUBLE_EQ(d175.m, 0.025 * 0.5);
    EXPECT_DOUBLE_EQ(d175.eps1, 0.5 * d175.m);
    ParamSet P;
    P.p = 1.75;
    EXPECT_DOUBLE_EQ(P.abar1(), d175.m);
    EXPECT_DOUBLE_EQ(P.abar2(), (1.0 - d175.m * 0.25) / 0.75);
    DecayExponents bad = d3;
    bad.sigma = 1.0;
    EXPECT_THROW(bad.validate(0.5, 3.0), ParamError);
    bad = d3;
    bad.eps1 = 0.5 / 3.0;
    EXPECT_THROW(bad.validate(0.5, 3.0), ParamError);
    ExperimentSetup S;
    S.eps1 = 0.01;
    EXPECT_EQ(S.exponents().eps1, 0.01);
}

TEST(Report, CsvAndMetrics) {
    ExperimentReport R;
    R.scale_label = "rho";
    R.scales = {0.4, 0.2};
    R.lhs = {1.0, 0.5};
    R.rhs = {2.0, 2.0};
    R.ratios = {0.5, 0.25};
    R.series.emplace_back("extra", std::vector<double>{7.0, 8.0});
    R.series.emplace_back("other_length", std::vector<double>{1.0});
    EXPECT_EQ(R.to_csv(), "rho,lhs,rhs,ratio,extra\n0.40000000000000002,1,2,0.5,7\n0.20000000000000001,0.5,2,0.25,8\n");
    R.set("a", 1.0);
    R.set("a", 2.0);
    EXPECT_EQ(R.metric("a"), 2.0);
    EXPECT_EQ(R.metrics.size(), 1u);
    EXPECT_FALSE(R.has_metric("b"));
    EXPECT_THROW(R.metric("b"), Error);
    EXPECT_THROW(R.column("b"), Error);
}

TEST(Registry, NamesAndDispatch) {
    EXPECT_EQ(experiment_names().size(), 8u);
    for (const auto& n : experiment_names()) EXPECT_NO_THROW(defaults_for(n));
    EXPECT_THROW(defaults_for("nope"), DomainError);
    EXPECT_THROW(run_experiment("nope", ExperimentSetup{}), DomainError);
}

TEST(ExcessDecayHomogeneous, AffineDataWithoutNonlocalPartHasNoExcess) {
    ExperimentSetup S = quick("excess_decay_homogeneous");
    S.exterior = "affine(0,1,0.5)";
    S.kernel = KernelSpec::none();
    const auto R = run_experiment("excess_decay_homogeneous", S);
    EXPECT_TRUE(R.verdict);
    EXPECT_EQ(R.metric("zero_excess"), 1.0);
    EXPECT_TRUE(std::isnan(R.fitted_exponent));
    for (double e : R.lhs) EXPECT_LE(e, 1e-12);
}

TEST(ExcessDecayHomogeneous, ExcessesScaleLinearlyAtPTwo) {
    ExperimentSetup S = quick("excess_decay_homogeneous");
    S.exterior = "affine(0,1,0.5)+sinusoid(0.2,3,2,0.3)";
    const auto a = run_experiment("excess_decay_homogeneous", S);
    S.exterior = "affine(0,3,1.5)+sinusoid(0.6,3,2,0.3)";
    const auto b = run_experiment("excess_decay_homogeneous", S);
    ASSERT_EQ(a.lhs.size(), b.lhs.size());
    for (std::size_t k = 0; k < a.lhs.size(); ++k) EXPECT_NEAR(b.lhs[k], 3.0 * a.lhs[k], 1e-7 * b.lhs[k]);
}

TEST(ComparisonMixedLocal, VanishesWithoutNonlocalPart) {
    ExperimentSetup S = quick("comparison_mixed_local");
    S.kernel = KernelSpec::none();
    const auto R = run_experiment("comparison_mixed_local", S);
    double scale = 0.0;
    for (double v : R.rhs) scale = std::max(scale, v);
    for (double v : R.lhs) EXPECT_LE(v, 1e-12 * scale);
}

TEST(ComparisonMixedLocal, ConstantDataGivesZero) {
    ExperimentSetup S = quick("comparison_mixed_local");
    S.exterior = "const(0.4)";
    const auto R = run_experiment("comparison_mixed_local", S);
    EXPECT_TRUE(R.verdict);
    for (double v : R.lhs) EXPECT_LE(v, 1e-20);
}

TEST(ComparisonMeasure, ZeroMassGivesZero) {
    ExperimentSetup S = quick("comparison_measure");
    S.scales = {0.0};
    const auto R = run_experiment("comparison_measure", S);
    EXPECT_TRUE(R.verdict);
    EXPECT_TRUE(all_zero(R.lhs));
}

TEST(ComparisonMeasure, ExactLinearityAtPTwo) {
    ExperimentSetup S = quick("comparison_measure");
    S.q = 1.0;
    const auto R = run_experiment("comparison_measure", S);
    EXPECT_NEAR(R.fitted_exponent, 1.0, 1e-6);
    EXPECT_TRUE(R.verdict);
    EXPECT_THROW(
        [&] {
            ExperimentSetup T = S;
            T.q = 2.0;  // q must stay below min{n(p-1)/(n-1), p} = 2
            run_experiment("comparison_measure", T);
        }(),
        DomainError);
}

TEST(DiracGradient, ZeroMeasureDegenerates) {
    ExperimentSetup S = quick("dirac_gradient");
    S.atoms.clear();
    const auto R = run_experiment("dirac_gradient", S);
    EXPECT_TRUE(R.verdict);
    EXPECT_TRUE(all_zero(R.lhs));
    ASSERT_FALSE(R.notes.empty());
}

TEST(DiracGradient, RejectsOffGridCentre) {
    ExperimentSetup S = quick("dirac_gradient");
    S.center = {0.3 * S.h, 0.0};
    EXPECT_THROW(run_experiment("dirac_gradient", S), DomainError);
}

TEST(TailDecay, ConstantDataHasNoTail) {
    ExperimentSetup S = quick("tail_decay");
    S.exterior = "const(1.5)";
    const auto R = run_experiment("tail_decay", S);
    EXPECT_TRUE(all_zero(R.lhs));
    EXPECT_TRUE(R.verdict);
}

// rho = r: the left side reappears in the tail term with a factor >= 1.
TEST(TailDecay, SameScaleRatioAtMostOne) {
    for (bool measure : {false, true}) {
        ExperimentSetup S = quick("tail_decay");
        S.levels = 1;
        if (measure) {
            S.atoms = {{{0.1, 0.0}, 1.0}};
            S.source_width = 0.1;
        }
        const auto R = run_experiment("tail_decay", S);
        EXPECT_EQ(R.metric("measure_data"), measure ? 1.0 : 0.0);
        ASSERT_EQ(R.ratios.size(), 1u);
        EXPECT_GT(R.ratios[0], 0.0);
        EXPECT_LE(R.ratios[0], 1.0);
    }
}

TEST(EnergyInequalities, ConstantSolutionVanishes) {
    ExperimentSetup S = quick("energy_inequalities");
    S.exterior = "const(-0.3)";
    const auto R = run_experiment("energy_inequalities", S);
    EXPECT_TRUE(R.verdict);
    EXPECT_TRUE(all_zero(R.lhs));
}

// Scaling the data by 2 at p = 2: sup, oscillation and Sobolev sides are
// degree 1, the Caccioppoli sides degree p = 2.
TEST(EnergyInequalities, HomogeneityOfEachSide) {
    ExperimentSetup S = quick("energy_inequalities");
    S.exterior = "affine(0,1,0.5)+sinusoid(0.2,3,2,0.3)";
    const auto a = run_experiment("energy_inequalities", S);
    S.exterior = "affine(0,2,1)+sinusoid(0.4,3,2,0.3)";
    const auto b = run_experiment("energy_inequalities", S);
    auto check = [&](const std::vector<double>& x, const std::vector<double>& y, double factor) {
        ASSERT_EQ(x.size(), y.size());
        for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], factor * x[i], 1e-7 * std::abs(y[i]));
    };
    check(a.lhs, b.lhs, 2.0);
    check(a.rhs, b.rhs, 2.0);
    for (const char* k : {"hol_lhs", "hol_rhs", "sob_lhs", "sob_rhs"}) check(a.column(k), b.column(k), 2.0);
    for (const char* k : {"ccp_lhs", "ccp_rhs"}) check(a.column(k), b.column(k), 4.0);
}

TEST(AExcessDecay, AffineLocalSceneHasNoExcess) {
    ExperimentSetup S = quick("A_excess_decay_measure");
    S.atoms.clear();
    S.exterior = "affine(0.2,1,-0.5)";
    S.kernel = KernelSpec::none();
    const auto R = run_experiment("A_excess_decay_measure", S);
    EXPECT_TRUE(R.verdict);
    for (double v : R.lhs) EXPECT_LE(v, 1e-10);
}

TEST(AExcessDecay, MeasureTermLinearInMass) {
    ExperimentSetup S = quick("A_excess_decay_measure");
    const auto a = run_experiment("A_excess_decay_measure", S);
    S.atoms[0].w *= 2.0;
    const auto b = run_experiment("A_excess_decay_measure", S);
    const auto& ma = a.column("measure_term");
    const auto& mb = b.column("measure_term");
    for (std::size_t k = 0; k < ma.size(); ++k) EXPECT_NEAR(mb[k], 2.0 * ma[k], 1e-12 * mb[k]);
    S.params.p = 1.75;
    EXPECT_THROW(run_experiment("A_excess_decay_measure", S), DomainError);
}

TEST(PointwiseBound, FamilyNeedsFiveConfigurations) {
    ExperimentSetup S = quick("pointwise_bound");
    S.configs = 4;
    EXPECT_THROW(run_experiment("pointwise_bound", S), DomainError);
}

TEST(PointwiseBound, SubquadraticTermsPresentBelowTwo) {
    ExperimentSetup S = quick("pointwise_bound");
    S.h = 1.0 / 16.0;
    S.params.p = 1.95;
    const auto R = run_experiment("pointwise_bound", S);
    EXPECT_TRUE(std::isfinite(R.metric("sup_ratio")));
    double extra = 0.0;
    for (double v : R.column("potential_mean_term")) extra = std::max(extra, v);
    EXPECT_GT(extra, 0.0);
}

// Every experiment on a small scene: reruns agree bit for bit and the
// straight-line recomputation of every bracket term agrees with the composed one.
TEST(AllExperiments, DeterministicAndAudited) {
    for (const auto& name : experiment_names()) {
        ExperimentSetup S = quick(name);
        S.audit = true;
        const auto a = run_experiment(name, S);
        const auto b = run_experiment(name, S);
        EXPECT_EQ(a.lhs, b.lhs) << name;
        EXPECT_EQ(a.rhs, b.rhs) << name;
        EXPECT_EQ(a.to_csv(), b.to_csv()) << name;
        ASSERT_TRUE(a.audit_discrepancy.has_value()) << name;
        EXPECT_LT(*a.audit_discrepancy, 1e-10) << name;
        for (double r : a.ratios) EXPECT_FALSE(std::isnan(r)) << name;
    }
}
