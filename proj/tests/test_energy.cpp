#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "henon/energy.hpp"

using namespace henon;

namespace {

const BasisSpec& basis()
{
    static const BasisSpec b = make_basis(ProblemConfig::make(0.3, 0.0, 48));
    return b;
}

// Nonnegative random field: |sin(k t)| <= k sin(t), so
// c_1 >= sum_{k>=2} k |c_k| keeps the samples nonnegative.
SpectralField positive_field(unsigned seed)
{
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    Vector c = Vector::Zero(48);
    double bound = 0.0;
    for (Eigen::Index k = 1; k < 12; ++k) {
        c[k] = nd(rng) / ((1.0 + k) * (1.0 + k));
        bound += (k + 1.0) * std::abs(c[k]);
    }
    c[0] = 1.0 + bound / 0.9;
    return SpectralField(c);
}

double brute_power(const SpectralField& w, double r, double alpha)
{
    // independent oracle: midpoint rule on 200000 cells with direct summation
    const int n = 200000;
    const double h = 2.0 / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = -1.0 + (i + 0.5) * h;
        double v = 0.0;
        for (int k = 1; k <= 2; ++k) {
            v += w.coeffs()[k - 1] * BasisSpec::eigenfunction(k, x);
        }
        acc += std::pow(std::abs(x), alpha) * std::pow(std::abs(v), r);
    }
    return acc * h;
}

} // namespace

TEST(Cpq, Values)
{
    EXPECT_DOUBLE_EQ(cpq(2.0, 2.0), 2.0);
    EXPECT_NEAR(cpq(3.0, 1.0), std::pow(3.0, 0.25) + std::pow(3.0, -0.75), 1e-15);
    EXPECT_NEAR(cpq(3.0, 1.0), 1.7547654, 1e-7);
    EXPECT_NEAR(cpq(2.5, 1.5), cpq(1.5, 2.5), 1e-15);
}

// With t = p/q, C_pq = t^{q/(p+q)} + t^{-p/(p+q)} is a weighted mean bounded
// by 2 (C_{3,1} = 1.7547... < 2), with equality iff p = q.
TEST(Cpq, AmGmBound)
{
    for (double p = 1.1; p < 4.0; p += 0.17) {
        for (double q = 1.1; q < 4.0; q += 0.23) {
            const double c = cpq(p, q);
            EXPECT_LE(c, 2.0 + 1e-14);
            if (std::abs(p - q) > 1e-3) {
                EXPECT_LT(c, 2.0);
            }
        }
        EXPECT_NEAR(cpq(p, p), 2.0, 1e-14);
    }
}

TEST(ExponentConfig, Criticality)
{
    const ExponentConfig sub{2.0, 2.0};
    EXPECT_EQ(sub.criticality(5.0), Criticality::subcritical);
    EXPECT_EQ((ExponentConfig{3.0, 2.0}).criticality(5.0), Criticality::critical);
    EXPECT_EQ((ExponentConfig{3.5, 2.0}).criticality(5.0), Criticality::supercritical);
    EXPECT_THROW((ExponentConfig{1.0, 2.0}).validate(), ConfigError);
}

TEST(MixedTerm, Examples)
{
    const auto& b = basis();
    const auto z = SpectralField::zero(48);
    EXPECT_EQ(mixed_term(z, z, b, {2.0, 2.0}, 0.0), 0.0);
    const auto phi = SpectralField::mode(48, 1);
    EXPECT_NEAR(mixed_term(phi, phi, b, {2.0, 2.0}, 0.0), 0.75, 1e-13);

    // v = 1 reduces to the scalar integral: use a sample-level check
    const SpectralField w = positive_field(3);
    const HenonFunctional f(b, 1.0, 0.3);
    const Vector ws = to_physical(w, b);
    const Vector ones = Vector::Ones(ws.size());
    const Vector wp = ws.array().abs().pow(2.5);
    EXPECT_NEAR(f.mixed(ws, ones, 2.5, 3.0), weighted_integral(wp, 1.0, b), 1e-13);
}

TEST(MixedTerm, MonotoneInAlpha)
{
    const auto& b = basis();
    const SpectralField u = positive_field(5);
    const SpectralField v = positive_field(6);
    double prev = mixed_term(u, v, b, {2.0, 1.5}, 0.0);
    for (double a = 0.5; a <= 4.0; a += 0.5) {
        const double cur = mixed_term(u, v, b, {2.0, 1.5}, a);
        EXPECT_LT(cur, prev);
        prev = cur;
    }
}

TEST(Quotients, ExamplesAndHomogeneity)
{
    const auto& b = basis();
    const double s = 0.3;
    const auto phi = SpectralField::mode(48, 1);
    const double l1s = std::pow(b.eigenvalue(1), s);
    EXPECT_NEAR(quotient_system(phi, phi, b, {2.0, 2.0}, 0.0, s), 2.0 * l1s / std::sqrt(0.75), 1e-12);
    EXPECT_NEAR(quotient_scalar(phi, b, 2.0, 0.0, s), l1s, 1e-13);

    const SpectralField u = positive_field(8);
    const SpectralField v = positive_field(9);
    const ExponentConfig e{2.5, 1.5};
    const double q1 = quotient_system(u, v, b, e, 1.0, s);
    EXPECT_NEAR(quotient_system(u * 7.0, v * 7.0, b, e, 1.0, s), q1, 1e-12 * q1);
    const double q2 = quotient_scalar(u, b, 3.0, 1.0, s);
    EXPECT_NEAR(quotient_scalar(u * 7.0, b, 3.0, 1.0, s), q2, 1e-12 * q2);
    const auto z = SpectralField::zero(48);
    EXPECT_THROW(quotient_system(z, z, b, e, 1.0, s), ZeroDenominator);
    EXPECT_THROW(quotient_scalar(z, b, 3.0, 1.0, s), ZeroDenominator);
}

TEST(Quotients, ScalarAgainstBruteForce)
{
    const auto& b = basis();
    const auto w = SpectralField::mode(48, 1) + SpectralField::mode(48, 2);
    const double s = 0.3;
    const double energy = std::pow(b.eigenvalue(1), s) + std::pow(b.eigenvalue(2), s);
    const double expect = energy / std::pow(brute_power(w, 3.0, 1.0), 2.0 / 3.0);
    EXPECT_NEAR(quotient_scalar(w, b, 3.0, 1.0, s), expect, 1e-8 * expect);
}

TEST(Quotients, SystemReducesToScalar)
{
    // (B w, C w) with B = sqrt(p/q) C: quotient = C_pq * scalar quotient
    const auto& b = basis();
    const SpectralField w = positive_field(12);
    for (auto [p, q] : {std::pair{2.5, 1.5}, std::pair{3.0, 1.0}, std::pair{2.0, 2.0}}) {
        const double c = 1.3;
        const double bb = std::sqrt(p / q) * c;
        const double sys = quotient_system(w * bb, w * c, b, {p, q}, 1.0, 0.3);
        const double scal = quotient_scalar(w, b, p + q, 1.0, 0.3);
        EXPECT_NEAR(sys / scal, cpq(p, q), 1e-12);
    }
}

TEST(Gradient, TrivialCases)
{
    const auto& b = basis();
    const auto z = SpectralField::zero(48);
    const auto [gu, gv] = gradient_pair(z, z, b, {2.0, 2.0}, 1.0, 0.3);
    EXPECT_EQ(gu.coeffs().norm(), 0.0);
    EXPECT_EQ(gv.coeffs().norm(), 0.0);
    const SpectralField u = positive_field(21);
    const auto [au, av] = gradient_pair(u, u, b, {2.0, 2.0}, 1.0, 0.3);
    EXPECT_EQ(au.coeffs(), av.coeffs());
    EXPECT_THROW(gradient_pair(u, u, b, {0.5, 2.0}, 1.0, 0.3), NonIntegrablePower);
    EXPECT_THROW(scalar_gradient(u, b, 0.5, 1.0, 0.3), NonIntegrablePower);
}

TEST(Gradient, CentralDifferencesOnRandomFields)
{
    const auto& b = basis();
    const double s = 0.3;
    const double step = 1e-5;
    for (unsigned seed = 0; seed < 20; ++seed) {
        const SpectralField u = positive_field(100 + seed);
        const SpectralField v = positive_field(200 + seed);
        const ExponentConfig e{2.0 + 0.05 * seed, 1.5 + 0.03 * seed};
        const double alpha = 0.25 * (seed % 5);
        const SpectralField h = positive_field(300 + seed);
        const SpectralField k = positive_field(400 + seed);
        const auto [gu, gv] = gradient_pair(u, v, b, e, alpha, s);
        const double analytic = gu.coeffs().dot(h.coeffs()) + gv.coeffs().dot(k.coeffs());
        const double fp = energy_functional(u + h * step, v + k * step, b, e, alpha, s);
        const double fm = energy_functional(u - h * step, v - k * step, b, e, alpha, s);
        const double fd = (fp - fm) / (2.0 * step);
        EXPECT_LT(std::abs(fd - analytic) / std::abs(analytic), 1e-6) << "seed " << seed;

        const double r = 2.2 + 0.1 * seed;
        const SpectralField g = scalar_gradient(u, b, r, alpha, s);
        const double an2 = g.coeffs().dot(h.coeffs());
        const double fd2 = (scalar_energy_functional(u + h * step, b, r, alpha, s)
                            - scalar_energy_functional(u - h * step, b, r, alpha, s))
                           / (2.0 * step);
        EXPECT_LT(std::abs(fd2 - an2) / std::abs(an2), 1e-6) << "seed " << seed;
    }
}
