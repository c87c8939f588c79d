#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "henon/asymptotics.hpp"

using namespace henon;

namespace {

const BasisSpec& basis(std::size_t m)
{
    static const BasisSpec b64 = make_basis(ProblemConfig::make(0.3, 0.0, 64));
    static const BasisSpec b256 = make_basis(ProblemConfig::make(0.3, 0.0, 256));
    static const BasisSpec b512 = make_basis(ProblemConfig::make(0.3, 0.0, 512));
    if (m == 256) {
        return b256;
    }
    return m == 64 ? b64 : b512;
}

// plateau |d| <= 1/2 covers the whole fit window d_eps/2 of a bubble at the origin
double wide_cutoff(double d)
{
    return cutoff(d, 1.0);
}

// Projected pair (M U((x-x0)/lambda), M U((x-x0)/lambda) / amp_ratio) under a wide
// smooth cutoff, with lambda = M^{-2/(N-2s)}.
GroundState bubble_state(const BasisSpec& b, double m1, double x0, double amp_ratio, double p, double q)
{
    const double lambda = std::pow(m1, -2.0 / 0.4);
    Vector f(static_cast<Eigen::Index>(b.grid_size()));
    for (Eigen::Index j = 0; j < f.size(); ++j) {
        const double d = b.nodes()[j] - x0;
        f[j] = wide_cutoff(d) * m1 * bubble_U(d / lambda, 1, 0.3);
    }
    GroundState st;
    st.u = to_coefficients(f, b);
    st.v = SpectralField(st.u.coeffs() / amp_ratio);
    st.p = p;
    st.q = q;
    st.alpha = 0.0;
    st.s = 0.3;
    st.converged = true;
    return st;
}

SweepRecord exact_record(const GroundState& st, const BasisSpec& b, double m1, double x0, double amp_ratio)
{
    SweepRecord r = diagnostics(st, b);
    r.M1 = m1;
    r.M2 = m1 / amp_ratio;
    r.x_max = x0;
    r.d_eps = 1.0 - std::abs(x0);
    r.lambda_eps = std::pow(m1, -2.0 / 0.4);
    r.d_over_lambda = r.d_eps / r.lambda_eps;
    return r;
}

} // namespace

TEST(Diagnostics, ScaleFromPeak)
{
    GroundState st;
    st.u = SpectralField::mode(64, 1) * 10.0;
    st.v = SpectralField::mode(64, 1) * 5.0;
    st.p = 2.0;
    st.q = 2.0;
    st.s = 0.3;
    const SweepRecord r = diagnostics(st, basis(64));
    EXPECT_NEAR(r.M1, 10.0, 1e-5);
    EXPECT_NEAR(std::pow(10.0, -2.0 / 0.4), 1e-5, 1e-20);
    EXPECT_NEAR(std::pow(r.lambda_eps, 0.2) * r.M1, 1.0, 1e-12);
    // symmetric state: the peak sits at the origin
    EXPECT_NEAR(r.x_max, 0.0, 1e-12);
    EXPECT_NEAR(r.d_eps, 1.0, 1e-12);
    EXPECT_NEAR(r.ratio, 2.0, 1e-12);
}

TEST(Diagnostics, RecordAlgebra)
{
    const GroundState raw = minimize_system(basis(64), {2.5, 2.0}, 1.0, {});
    const GroundState st = lagrange_rescale(raw, basis(64));
    const ExtensionProfile prof(0.3);
    const SweepRecord r = diagnostics(st, basis(64), &prof);
    EXPECT_EQ(r.lambda_eps, std::pow(r.M1, -2.0 / 0.4));
    EXPECT_EQ(r.h_eps, std::pow(r.lambda_eps, 1.0 - 0.4 * (2.5 + 2.0) / 2.0));
    EXPECT_EQ(r.ratio, r.M1 / r.M2);
    EXPECT_EQ(r.d_over_lambda, r.d_eps / r.lambda_eps);
    EXPECT_NEAR(std::pow(r.lambda_eps, 0.2) * r.M1, 1.0, 1e-12);
    EXPECT_GT(r.h_eps, 0.0);
    EXPECT_LE(r.h_eps, 1.0);
    EXPECT_GE(r.d_eps, 0.0);
    EXPECT_GT(r.ratio, 0.0);
    // the trace maximum dominates the extension
    EXPECT_LE(r.extension_ratio, 1.0 + 1e-8);
}

TEST(MassFraction, LimitsAndBubble)
{
    const auto& b = basis(512);
    const GroundState st = bubble_state(b, 2.5, 0.0, 1.0, 2.5, 2.5);
    EXPECT_NEAR(mass_fraction(st, b, 0.0, 2.5), 1.0, 1e-15);
    EXPECT_EQ(mass_fraction(st, b, 0.0, 1e-9), 0.0);
    EXPECT_THROW(mass_fraction(st, b, 0.0, 0.0), ConfigError);

    // oracle: Simpson on the exact cutoff bubble, density U^{p+q}
    const double lambda = std::pow(2.5, -5.0);
    auto density = [&](double x) {
        const double d = x;
        return std::pow(wide_cutoff(d) * 2.5 * bubble_U(d / lambda, 1, 0.3), 5.0);
    };
    auto simpson = [&](double lo, double hi) {
        const int n = 200000;
        const double h = (hi - lo) / n;
        double acc = density(lo) + density(hi);
        for (int i = 1; i < n; ++i) {
            acc += (i % 2 ? 4.0 : 2.0) * density(lo + i * h);
        }
        return acc * h / 3.0;
    };
    const double total = simpson(-1.0, 1.0);
    for (double radius : {10 * lambda, 100 * lambda}) {
        const double want = simpson(-radius, radius) / total;
        EXPECT_NEAR(mass_fraction(st, b, 0.0, radius), want, 1e-3);
    }
    // the critical density (1+xi^2)^{-1} has a 2/(pi R) tail, so 0.99 needs R of order 100
    EXPECT_LT(mass_fraction(st, b, 0.0, 10 * lambda), 0.95);
    EXPECT_GT(mass_fraction(st, b, 0.0, 100 * lambda), 0.99);
}

TEST(Remainder, ExactBubbleIsTiny)
{
    const auto& b = basis(512);
    const double m1 = 2.0;
    const double ratio = std::sqrt(2.5 / 2.0);
    const GroundState st = bubble_state(b, m1, 0.0, ratio, 2.5, 2.0);
    const SweepRecord measured = diagnostics(st, b);
    EXPECT_NEAR(measured.M1, m1, 1e-3 * m1);
    EXPECT_NEAR(measured.x_max, 0.0, 1e-3);

    const SweepRecord r = exact_record(st, b, m1, 0.0, ratio);
    const RemainderReport rep = bubble_remainder(st, r, b, ratio);
    EXPECT_LT(rep.relative, 1e-6);
    EXPECT_FALSE(rep.shrunk);
    EXPECT_EQ(rep.radius, 0.2);

    // wrong v amplitude is visible
    EXPECT_GT(bubble_remainder(st, r, b, 1.0).relative, 1e-2);

    SweepRecord edge = r;
    edge.d_eps = 0.05;
    EXPECT_TRUE(bubble_remainder(st, edge, b, ratio).shrunk);
    edge.d_eps = 0.0;
    EXPECT_THROW(bubble_remainder(st, edge, b, ratio), CutoffEscapesDomain);
}

TEST(Remainder, MildSolveIsOrderOne)
{
    const GroundState st = lagrange_rescale(minimize_system(basis(64), {2.0, 2.0}, 1.0, {}), basis(64));
    const SweepRecord r = diagnostics(st, basis(64));
    const RemainderReport rep = bubble_remainder(st, r, basis(64));
    EXPECT_GT(rep.relative, 0.1);
}

TEST(Profile, SyntheticPairAndWindow)
{
    const auto& b = basis(512);
    const double m1 = 2.0;
    const double ratio = std::sqrt(2.5 / 2.0);
    const GroundState st = bubble_state(b, m1, 0.0, ratio, 2.5, 2.0);
    const SweepRecord r = exact_record(st, b, m1, 0.0, ratio);
    const ProfileReport rep = profile_convergence(st, r, b);
    EXPECT_LT(rep.fit.residual, 1e-8);
    EXPECT_NEAR(rep.amp_ratio, ratio, 1e-8);
    EXPECT_NEAR(rep.target_ratio, ratio, 1e-15);
    EXPECT_NEAR(rep.fit.scale, 1.0, 1e-6);
    EXPECT_LT(rep.symmetry_defect, 1e-8);

    SweepRecord narrow = r;
    narrow.d_eps = 3.0 * r.lambda_eps;
    narrow.d_over_lambda = 3.0;
    EXPECT_THROW(profile_convergence(st, narrow, b), WindowTooSmall);
}

TEST(Criticality, ConstantInputs)
{
    SweepRecord r;
    r.p_eps = 2.5;
    r.q = 2.0;
    r.quotient = 3.0;
    r.converged = true;
    const std::vector<SweepRecord> recs(5, r);
    const CriticalityReport rep = criticality_limit_check(recs, 1.2);
    ASSERT_EQ(rep.gaps.size(), 5u);
    for (double g : rep.gaps) {
        EXPECT_EQ(g, rep.gaps.front());
    }
    EXPECT_NEAR(rep.gaps.front(), std::abs(3.0 - cpq(2.5, 2.0) * 1.2), 1e-15);
    EXPECT_FALSE(rep.shrinking);

    std::vector<SweepRecord> closing = recs;
    for (std::size_t i = 0; i < closing.size(); ++i) {
        closing[i].quotient = cpq(2.5, 2.0) * 1.2 * (1.0 + 0.5 / (1.0 + i));
    }
    const CriticalityReport c2 = criticality_limit_check(closing, 1.2);
    EXPECT_TRUE(c2.shrinking);
    EXPECT_NEAR(c2.final_rel_gap, 0.1, 1e-12);
}

TEST(Sweep, PlanValidation)
{
    SweepPlan plan;
    plan.config = ProblemConfig::make(0.3, 1.0, 64);
    plan.q = 2.0;
    plan.p_values = {2.0, 2.2};
    EXPECT_NO_THROW(plan.validate());
    plan.p_values = {2.2, 2.0};
    EXPECT_THROW(plan.validate(), ConfigError);
    plan.p_values = {2.0, 3.0};
    EXPECT_THROW(plan.validate(), ConfigError);
    plan.p_values = {0.9};
    EXPECT_THROW(plan.validate(), ConfigError);
}

TEST(Sweep, SinglePointEqualsDirectCall)
{
    SweepPlan plan;
    plan.config = ProblemConfig::make(0.3, 1.0, 64);
    plan.q = 2.0;
    plan.p_values = {2.3};
    const SweepResult res = run_sweep(plan, basis(64));
    ASSERT_EQ(res.records.size(), 1u);
    const GroundState direct = lagrange_rescale(minimize_system(basis(64), {2.3, 2.0}, 1.0, {}), basis(64));
    const SweepRecord r = diagnostics(direct, basis(64));
    EXPECT_EQ(res.records[0].quotient, direct.quotient);
    EXPECT_EQ(res.records[0].M1, r.M1);
    EXPECT_EQ(res.records[0].x_max, r.x_max);
    EXPECT_EQ(res.warnings, 0);
}

TEST(Sweep, WarmAndColdAgree)
{
    // at M = 64 the alpha = 1 problem has several discrete local minima and the
    // two paths can settle in different ones; M = 256 resolves the state
    SweepPlan plan;
    plan.config = ProblemConfig::make(0.3, 1.0, 256);
    plan.q = 2.0;
    plan.p_values = {2.0, 2.1, 2.2, 2.3};
    const SweepResult warm = run_sweep(plan, basis(256));
    plan.warm_start = false;
    plan.threads = 2;
    const SweepResult cold = run_sweep(plan, basis(256));
    ASSERT_EQ(warm.records.size(), cold.records.size());
    for (std::size_t i = 0; i < warm.records.size(); ++i) {
        EXPECT_EQ(cold.records[i].p_eps, plan.p_values[i]);
        EXPECT_NEAR(warm.records[i].quotient, cold.records[i].quotient, 1e-6 * cold.records[i].quotient);
    }
}

TEST(Identity, CouplingConstant)
{
    const IdentityReport eq = identity_check(basis(64), 2.0, 2.0, 0.0, {});
    EXPECT_NEAR(eq.s_sys / eq.s_scal, 2.0, 2e-3);
    EXPECT_LT(eq.rel_dev, 1e-3);
    const IdentityReport un = identity_check(basis(64), 2.5, 1.5, 1.0, {});
    EXPECT_LT(un.rel_dev, 1e-3);
    EXPECT_LT(un.ratio_dev, 1e-2);
    EXPECT_NEAR(un.c_pq, cpq(2.5, 1.5), 0.0);
}
