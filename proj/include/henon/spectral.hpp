#ifndef HENON_SPECTRAL_HPP
#define HENON_SPECTRAL_HPP

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "henon/config.hpp"
#include "henon/errors.hpp"
#include "henon/quadrature.hpp"

namespace henon {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dirichlet eigenbasis of the interval (-1, 1) together with the physical
/// sampling rule used for every nonlinear evaluation.
///
/// phi_k(x) = sin(k pi (x+1)/2), lambda_k = (k pi / 2)^2, k = 1..M. The
/// samples live on a split Gauss rule (one Gauss-Legendre panel per half by
/// default) so that products of two band-limited fields integrate exactly
/// to rounding and |x|^alpha stays smooth on each panel.
class BasisSpec {
public:
    BasisSpec(ProblemConfig config, QuadratureRule rule)
        : config_(config), rule_(std::move(rule))
    {
        const auto m = static_cast<Eigen::Index>(config_.modes);
        const auto g = static_cast<Eigen::Index>(rule_.size());
        eigenvalues_.resize(m);
        for (Eigen::Index k = 0; k < m; ++k) {
            const double w = static_cast<double>(k + 1) * std::numbers::pi / 2.0;
            eigenvalues_[k] = w * w;
        }
        nodes_ = Eigen::Map<const Vector>(rule_.nodes.data(), g);
        weights_ = Eigen::Map<const Vector>(rule_.weights.data(), g);
        synth_.resize(m, g);
        for (Eigen::Index j = 0; j < g; ++j) {
            for (Eigen::Index k = 0; k < m; ++k) {
                synth_(k, j) = eigenfunction(static_cast<int>(k + 1), nodes_[j]);
            }
        }
        analysis_ = synth_ * weights_.asDiagonal();
    }

    const ProblemConfig& config() const { return config_; }
    std::size_t modes() const { return config_.modes; }
    std::size_t grid_size() const { return rule_.size(); }

    const Vector& eigenvalues() const { return eigenvalues_; }
    double eigenvalue(int k) const { return eigenvalues_[k - 1]; }

    static double eigenfunction(int k, double x)
    {
        return std::sin(static_cast<double>(k) * std::numbers::pi * (x + 1.0) / 2.0);
    }

    /// Sample nodes and quadrature weights on (-1, 1).
    const Vector& nodes() const { return nodes_; }
    const Vector& weights() const { return weights_; }
    const QuadratureRule& rule() const { return rule_; }

    /// M x G matrix of phi_k(x_j).
    const Matrix& synthesis() const { return synth_; }
    /// M x G matrix of w_j phi_k(x_j); the discrete L2 projection.
    const Matrix& analysis() const { return analysis_; }

    /// Quadrature weights multiplied by |x|^alpha.
    Vector weighted(double alpha) const
    {
        Vector w = weights_;
        if (alpha != 0.0) {
            for (Eigen::Index j = 0; j < w.size(); ++j) {
                w[j] *= std::pow(std::abs(nodes_[j]), alpha);
            }
        }
        return w;
    }

private:
    ProblemConfig config_;
    QuadratureRule rule_;
    Vector eigenvalues_;
    Vector nodes_;
    Vector weights_;
    Matrix synth_;
    Matrix analysis_;
};

/// Builds the sine basis for `config`. Only N = 1 is supported.
inline BasisSpec make_basis(const ProblemConfig& config)
{
    config.validate();
    if (config.dim != 1) {
        throw ConfigError("make_basis: only the one-dimensional ball is implemented (N="
                          + std::to_string(config.dim) + ")");
    }
    return BasisSpec(config, split_gauss_rule(1, config.grid / 2));
}

/// A function on the ball held by its eigen-coefficients.
///
/// Physical samples are cached only through non-const access (`refresh`);
/// const readers never mutate the object, so shared read-only use is safe.
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(Vector coeffs) : coeffs_(std::move(coeffs)) {}

    static SpectralField zero(std::size_t modes) { return SpectralField(Vector::Zero(static_cast<Eigen::Index>(modes))); }
    static SpectralField mode(std::size_t modes, int k)
    {
        SpectralField f = zero(modes);
        f.coeffs_[k - 1] = 1.0;
        return f;
    }

    const Vector& coeffs() const { return coeffs_; }
    Vector& mutable_coeffs()
    {
        dirty_ = true;
        return coeffs_;
    }
    std::size_t size() const { return static_cast<std::size_t>(coeffs_.size()); }

    bool has_samples() const { return !dirty_; }
    const Vector& cached_samples() const { return samples_; }

    /// Recomputes the sample cache when stale and returns it.
    const Vector& refresh(const BasisSpec& basis);

    SpectralField operator*(double t) const { return SpectralField(coeffs_ * t); }
    SpectralField operator+(const SpectralField& o) const { return SpectralField(coeffs_ + o.coeffs_); }
    SpectralField operator-(const SpectralField& o) const { return SpectralField(coeffs_ - o.coeffs_); }

private:
    Vector coeffs_;
    Vector samples_;
    bool dirty_ = true;
};

inline void check_basis(const SpectralField& field, const BasisSpec& basis)
{
    if (field.size() != basis.modes()) {
        throw DimensionMismatch("field has " + std::to_string(field.size()) + " coefficients, basis has "
                                + std::to_string(basis.modes()) + " modes");
    }
}

/// Sine synthesis onto the sample nodes.
inline Vector to_physical(const SpectralField& field, const BasisSpec& basis)
{
    check_basis(field, basis);
    if (field.has_samples()) {
        return field.cached_samples();
    }
    return basis.synthesis().transpose() * field.coeffs();
}

/// Discrete L2 projection of samples onto the eigenbasis.
inline SpectralField to_coefficients(const Vector& samples, const BasisSpec& basis)
{
    if (static_cast<std::size_t>(samples.size()) != basis.grid_size()) {
        throw DimensionMismatch("sample vector has " + std::to_string(samples.size()) + " entries, grid has "
                                + std::to_string(basis.grid_size()));
    }
    return SpectralField(basis.analysis() * samples);
}

inline const Vector& SpectralField::refresh(const BasisSpec& basis)
{
    check_basis(*this, basis);
    if (dirty_) {
        samples_ = basis.synthesis().transpose() * coeffs_;
        dirty_ = false;
    }
    return samples_;
}

/// Coefficient-wise multiplication by lambda_k^s.
inline SpectralField frac_laplacian(const SpectralField& field, const BasisSpec& basis, double s)
{
    check_basis(field, basis);
    if (s == 0.0) {
        return SpectralField(field.coeffs());
    }
    return SpectralField(field.coeffs().cwiseProduct(basis.eigenvalues().array().pow(s).matrix()));
}

inline double hs_norm_squared(const SpectralField& field, const BasisSpec& basis, double s)
{
    check_basis(field, basis);
    const auto& c = field.coeffs();
    return (c.array().square() * basis.eigenvalues().array().pow(s)).sum();
}

/// (sum u_k^2 lambda_k^s)^(1/2).
inline double hs_norm(const SpectralField& field, const BasisSpec& basis, double s)
{
    return std::sqrt(hs_norm_squared(field, basis, s));
}

/// Integral over (-1,1) of |x|^alpha f(x) for f given at the sample nodes.
inline double weighted_integral(const Vector& samples, double alpha, const BasisSpec& basis)
{
    if (static_cast<std::size_t>(samples.size()) != basis.grid_size()) {
        throw DimensionMismatch("weighted_integral: sample count does not match grid");
    }
    if (alpha < 0.0) {
        throw ConfigError("weighted_integral: alpha must be nonnegative");
    }
    return basis.weighted(alpha).dot(samples);
}

/// Same integral on an arbitrary rule; used for quadrature-order studies.
inline double weighted_integral(const QuadratureRule& rule, double alpha, auto&& f)
{
    double acc = 0.0;
    for (std::size_t j = 0; j < rule.size(); ++j) {
        const double x = rule.nodes[j];
        acc += rule.weights[j] * std::pow(std::abs(x), alpha) * f(x);
    }
    return acc;
}

/// Fraction of the coefficient energy carried by the top 10% of modes.
inline double tail_energy_fraction(const SpectralField& field)
{
    const auto& c = field.coeffs();
    const Eigen::Index m = c.size();
    const Eigen::Index start = m - std::max<Eigen::Index>(1, m / 10);
    const double total = c.squaredNorm();
    if (total == 0.0) {
        return 0.0;
    }
    return c.tail(m - start).squaredNorm() / total;
}

} // namespace henon

#endif // HENON_SPECTRAL_HPP
