#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "henon/spectral.hpp"

using namespace henon;

namespace {

const BasisSpec& basis64()
{
    static const BasisSpec b = make_basis(ProblemConfig::make(0.3, 0.0, 64));
    return b;
}

SpectralField random_field(std::size_t m, unsigned seed, double decay = 1.0)
{
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    Vector c(static_cast<Eigen::Index>(m));
    for (Eigen::Index k = 0; k < c.size(); ++k) {
        c[k] = nd(rng) / std::pow(1.0 + k, decay);
    }
    return SpectralField(c);
}

// independent oracle: composite Simpson with many panels
template <class F>
double simpson(F&& f, double a, double b, int n = 20000)
{
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) {
        acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    }
    return acc * h / 3.0;
}

} // namespace

TEST(Config, CriticalExponentAndValidation)
{
    const auto c = ProblemConfig::make(0.3, 1.0, 32);
    EXPECT_DOUBLE_EQ(c.crit_exp(), 2.0 / 0.4);
    EXPECT_GT(c.crit_exp(), 2.0);
    EXPECT_EQ(c.grid, 128u);
    EXPECT_THROW(ProblemConfig::make(0.0, 0.0, 32), ConfigError);
    EXPECT_THROW(ProblemConfig::make(0.5, 0.0, 32), ConfigError);  // N = 2s
    EXPECT_THROW(ProblemConfig::make(0.3, -1.0, 32), ConfigError);
    EXPECT_THROW(ProblemConfig::make(0.3, 0.0, 4), ConfigError);
    EXPECT_THROW(ProblemConfig::make(0.3, 0.0, 32, 64), ConfigError);
    ProblemConfig two = ProblemConfig::make(0.3, 0.0, 32);
    two.dim = 2;
    EXPECT_THROW(make_basis(two), ConfigError);
}

TEST(Basis, EigenvaluesAndEigenfunctions)
{
    const auto& b = basis64();
    EXPECT_NEAR(b.eigenvalue(1), 2.4674011002723395, 1e-15);
    EXPECT_DOUBLE_EQ(BasisSpec::eigenfunction(1, 0.0), 1.0);
    for (int k = 1; k < 64; ++k) {
        EXPECT_LT(b.eigenvalue(k), b.eigenvalue(k + 1));
        EXPECT_NEAR(b.eigenvalue(k), std::pow(k * std::numbers::pi / 2, 2), 1e-12 * b.eigenvalue(k));
    }
    const double norm3 = simpson([](double x) { return std::pow(BasisSpec::eigenfunction(3, x), 2); }, -1.0, 1.0);
    EXPECT_NEAR(norm3, 1.0, 1e-12);
}

TEST(Basis, OrthonormalUnderQuadrature)
{
    const auto& b = basis64();
    const Matrix gram = b.analysis() * b.synthesis().transpose();
    const Matrix err = gram - Matrix::Identity(64, 64);
    EXPECT_LT(err.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Transforms, RoundTripAndAdjoint)
{
    const auto& b = basis64();
    EXPECT_LT((to_physical(SpectralField::mode(64, 1), b)
               - b.nodes().unaryExpr([](double x) { return BasisSpec::eigenfunction(1, x); }))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-14);
    EXPECT_EQ(to_physical(SpectralField::zero(64), b).cwiseAbs().maxCoeff(), 0.0);

    const SpectralField u = random_field(64, 3);
    const Vector samples = to_physical(u, b);
    // direct summation oracle
    double worst = 0.0;
    for (Eigen::Index j = 0; j < samples.size(); j += 7) {
        double acc = 0.0;
        for (int k = 1; k <= 64; ++k) {
            acc += u.coeffs()[k - 1] * BasisSpec::eigenfunction(k, b.nodes()[j]);
        }
        worst = std::max(worst, std::abs(acc - samples[j]));
    }
    EXPECT_LT(worst, 1e-12);
    const SpectralField back = to_coefficients(samples, b);
    EXPECT_LT((back.coeffs() - u.coeffs()).cwiseAbs().maxCoeff() / u.coeffs().cwiseAbs().maxCoeff(), 1e-10);

    // <to_physical(u), f>_grid = <u, to_coefficients(f)>
    std::mt19937 rng(5);
    std::normal_distribution<double> nd;
    Vector f(samples.size());
    for (auto& x : f) {
        x = nd(rng);
    }
    const double lhs = (samples.array() * b.weights().array() * f.array()).sum();
    const double rhs = u.coeffs().dot(to_coefficients(f, b).coeffs());
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs));

    EXPECT_THROW(to_physical(SpectralField::zero(10), b), DimensionMismatch);
    EXPECT_THROW(to_coefficients(Vector::Zero(10), b), DimensionMismatch);
}

TEST(Transforms, SampleCache)
{
    const auto& b = basis64();
    SpectralField u = random_field(64, 7);
    EXPECT_FALSE(u.has_samples());
    const Vector first = u.refresh(b);
    EXPECT_TRUE(u.has_samples());
    EXPECT_EQ(to_physical(u, b), first);
    u.mutable_coeffs()[0] += 1.0;
    EXPECT_FALSE(u.has_samples());
    EXPECT_NE(u.refresh(b), first);
}

TEST(FracLaplacian, SpectralMapping)
{
    const auto& b = basis64();
    for (double s : {0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45}) {
        for (int k = 1; k <= 64; ++k) {
            const SpectralField out = frac_laplacian(SpectralField::mode(64, k), b, s);
            const double expect = std::pow(b.eigenvalue(k), s);
            EXPECT_NEAR(out.coeffs()[k - 1], expect, 1e-12 * expect);
            EXPECT_EQ(out.coeffs().cwiseAbs().sum() - std::abs(out.coeffs()[k - 1]), 0.0);
        }
    }
    const SpectralField u = random_field(64, 11);
    EXPECT_EQ(frac_laplacian(u, b, 0.0).coeffs(), u.coeffs());
    const auto one = frac_laplacian(SpectralField::mode(64, 1), b, 0.3);
    EXPECT_NEAR(one.coeffs()[0], std::pow(std::numbers::pi * std::numbers::pi / 4, 0.3), 1e-14);
}

TEST(FracLaplacian, Semigroup)
{
    const auto& b = basis64();
    const SpectralField u = random_field(64, 13);
    const auto ab = frac_laplacian(frac_laplacian(u, b, 0.2), b, 0.15);
    const auto direct = frac_laplacian(u, b, 0.35);
    for (Eigen::Index k = 0; k < 64; ++k) {
        EXPECT_NEAR(ab.coeffs()[k], direct.coeffs()[k], 1e-13 * std::abs(direct.coeffs()[k]) + 1e-300);
    }
}

TEST(FracLaplacian, OrderOneMatchesSecondDifference)
{
    // smooth band-limited input: first 6 modes
    const auto& b = basis64();
    Vector c = Vector::Zero(64);
    c.head(6) << 1.0, -0.5, 0.25, 0.1, -0.05, 0.02;
    const SpectralField u(c);
    const SpectralField lap = frac_laplacian(u, b, 1.0);
    auto eval = [&](const SpectralField& f, double x) {
        double acc = 0.0;
        for (int k = 1; k <= 64; ++k) {
            acc += f.coeffs()[k - 1] * BasisSpec::eigenfunction(k, x);
        }
        return acc;
    };
    const double h = 1e-3;
    double worst = 0.0;
    double scale = 0.0;
    for (double x = -0.9; x <= 0.9; x += 0.05) {
        // fourth-order central second difference
        const double fd = -(-eval(u, x + 2 * h) + 16 * eval(u, x + h) - 30 * eval(u, x) + 16 * eval(u, x - h)
                            - eval(u, x - 2 * h))
                          / (12 * h * h);
        worst = std::max(worst, std::abs(fd - eval(lap, x)));
        scale = std::max(scale, std::abs(eval(lap, x)));
    }
    EXPECT_LT(worst / scale, 1e-6);
}

TEST(Norms, HsNormAndParseval)
{
    const auto& b = basis64();
    const double s = 0.3;
    EXPECT_NEAR(hs_norm(SpectralField::mode(64, 1), b, s), std::pow(b.eigenvalue(1), s / 2), 1e-15);
    const SpectralField sum = SpectralField::mode(64, 1) + SpectralField::mode(64, 2);
    EXPECT_NEAR(hs_norm(sum, b, s), std::sqrt(std::pow(b.eigenvalue(1), s) + std::pow(b.eigenvalue(2), s)), 1e-14);

    const SpectralField u = random_field(64, 17);
    const Vector us = to_physical(u, b);
    const Vector lus = to_physical(frac_laplacian(u, b, s), b);
    const double quad = (b.weights().array() * us.array() * lus.array()).sum();
    EXPECT_NEAR(hs_norm_squared(u, b, s), quad, 1e-10 * quad);
    const double l2 = (b.weights().array() * us.array().square()).sum();
    EXPECT_NEAR(u.coeffs().squaredNorm(), l2, 1e-10 * l2);
}

TEST(WeightedIntegral, Examples)
{
    const auto& b = basis64();
    const Vector ones = Vector::Ones(static_cast<Eigen::Index>(b.grid_size()));
    EXPECT_NEAR(weighted_integral(ones, 0.0, b), 2.0, 1e-14);
    EXPECT_NEAR(weighted_integral(ones, 1.0, b), 1.0, 1e-14);
    const Vector x2 = b.nodes().array().square();
    EXPECT_NEAR(weighted_integral(x2, 2.0, b), 0.4, 1e-14);
    // |x|^{1/2} is not smooth at the panel end, so only algebraic accuracy
    EXPECT_NEAR(weighted_integral(ones, 0.5, b), 2.0 / 1.5, 1e-6);
    EXPECT_THROW(weighted_integral(ones, -1.0, b), ConfigError);
}

TEST(WeightedIntegral, QuadratureOrder)
{
    // |x|^alpha times a degree-14 polynomial; with Gauss panels of n nodes the
    // error falls off at the rule's design rate, i.e. it is exact once
    // 2n - 1 >= degree and geometric before that.
    auto poly = [](double x) { return 1.0 + x + 3 * std::pow(x, 6) - 2 * std::pow(x, 11) + std::pow(x, 14); };
    for (double alpha : {1.0, 2.0}) {
        const double exact = 2.0 / (alpha + 1) + 6.0 / (alpha + 7) + 2.0 / (alpha + 15);
        std::vector<double> errs;
        for (std::size_t n : {2u, 4u, 8u, 16u}) {
            const QuadratureRule rule = split_gauss_rule(1, n);
            errs.push_back(std::abs(weighted_integral(rule, alpha, poly) - exact));
        }
        EXPECT_GT(errs[0], 1e-6);
        EXPECT_LT(errs[1], errs[0] / 10.0);
        EXPECT_LT(errs[2], errs[1] / 1000.0);
        EXPECT_LT(errs[3], 1e-13);
    }
}

TEST(Basis, TailFraction)
{
    Vector c = Vector::Zero(20);
    c[0] = 1.0;
    c[19] = 1.0;
    EXPECT_NEAR(tail_energy_fraction(SpectralField(c)), 0.5, 1e-15);
    EXPECT_EQ(tail_energy_fraction(SpectralField::zero(20)), 0.0);
}
