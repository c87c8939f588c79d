#ifndef HENON_EXTENSION_HPP
#define HENON_EXTENSION_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "henon/bessel.hpp"
#include "henon/errors.hpp"
#include "henon/spectral.hpp"

namespace henon {

/// k_s = 2^{1-2s} Gamma(1-s) / Gamma(s).
inline double ks_constant(double s)
{
    return std::pow(2.0, 1.0 - 2.0 * s) * std::tgamma(1.0 - s) / std::tgamma(s);
}

/// Constant multiplying both the weighted Dirichlet energy and the weighted
/// Neumann trace of the s-harmonic extension so that they reproduce the
/// H^s norm and (-Delta)^s exactly. For the profile normalized by
/// theta(0) = 1 this is 1/k_s (both equal 1 at s = 1/2).
inline double dtn_constant(double s)
{
    return 1.0 / ks_constant(s);
}

/// theta_s(z) = 2^{1-s}/Gamma(s) z^s K_s(z), the decaying solution of
/// theta'' + (1-2s)/z theta' - theta = 0 with theta(0) = 1.
inline double theta_exact(double s, double z)
{
    if (z <= 0.0) {
        return 1.0;
    }
    const double c = std::pow(2.0, 1.0 - s) / std::tgamma(s);
    return c * std::pow(z, s) * std::exp(-z) * bessel_k_scaled(s, z);
}

/// theta_s'(z) = -2^{1-s}/Gamma(s) z^s K_{1-s}(z).
inline double theta_prime_exact(double s, double z)
{
    const double c = std::pow(2.0, 1.0 - s) / std::tgamma(s);
    return -c * std::pow(z, s) * std::exp(-z) * bessel_k_scaled(1.0 - s, z);
}

/// Tabulated extension profile theta_s on a geometric grid.
///
/// Values and derivatives are stored at every node. Higher derivatives come
/// from the ODE itself, so theta and theta' are each interpolated by quintic
/// Hermite; theta' is never obtained by differencing theta. Below the table
/// the two-term small-z expansion 1 - k_s z^{2s}/(2s) is used, above it
/// theta is continued by its exponential asymptotics.
class ExtensionProfile {
public:
    static constexpr double z_min = 1e-6;
    static constexpr double z_max = 40.0;

    explicit ExtensionProfile(double s, std::size_t points = 4000) : s_(s), ks_(ks_constant(s))
    {
        if (!(s > 0.0 && s < 1.0)) {
            throw ConfigError("extension profile needs s in (0,1)");
        }
        z_.resize(points);
        theta_.resize(points);
        dtheta_.resize(points);
        log_ratio_ = std::log(z_max / z_min) / static_cast<double>(points - 1);
        for (std::size_t i = 0; i < points; ++i) {
            const double z = i + 1 == points ? z_max : z_min * std::exp(log_ratio_ * static_cast<double>(i));
            z_[i] = z;
            theta_[i] = theta_exact(s, z);
            dtheta_[i] = theta_prime_exact(s, z);
        }
    }

    double s() const { return s_; }
    double ks() const { return ks_; }
    std::size_t size() const { return z_.size(); }
    const std::vector<double>& nodes() const { return z_; }
    const std::vector<double>& values() const { return theta_; }
    const std::vector<double>& derivatives() const { return dtheta_; }

    double operator()(double z) const { return eval(z).first; }
    double derivative(double z) const { return eval(z).second; }

    /// (theta(z), theta'(z)).
    std::pair<double, double> eval(double z) const
    {
        if (z <= 0.0) {
            return {1.0, z == 0.0 ? -std::numeric_limits<double>::infinity() : 0.0};
        }
        if (z < z_min) {
            const double zs = std::pow(z, 2.0 * s_);
            return {1.0 - ks_ * zs / (2.0 * s_), -ks_ * zs / z};
        }
        if (z >= z_max) {
            // theta ~ A z^{s-1/2} e^{-z}; match the last node.
            const double a = theta_.back() / (std::pow(z_max, s_ - 0.5) * std::exp(-z_max));
            const double val = a * std::pow(z, s_ - 0.5) * std::exp(-z);
            return {val, val * ((s_ - 0.5) / z - 1.0)};
        }
        const double pos = std::log(z / z_min) / log_ratio_;
        auto i = static_cast<std::size_t>(pos);
        i = std::min(i, z_.size() - 2);
        const double h = z_[i + 1] - z_[i];
        const double t = (z - z_[i]) / h;
        const double b = 1.0 - 2.0 * s_;
        // from the ODE: theta'' = theta - b theta'/z, theta''' = theta' - b (theta''/z - theta'/z^2)
        auto second = [&](std::size_t j) { return theta_[j] - b / z_[j] * dtheta_[j]; };
        auto third = [&](std::size_t j) {
            return dtheta_[j] - b * (second(j) / z_[j] - dtheta_[j] / (z_[j] * z_[j]));
        };
        const double t3 = t * t * t;
        const double t4 = t3 * t;
        const double t5 = t4 * t;
        const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
        const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
        const double h2 = 0.5 * (t * t - 3 * t3 + 3 * t4 - t5);
        const double h3 = 0.5 * (t3 - 2 * t4 + t5);
        const double h4 = -4 * t3 + 7 * t4 - 3 * t5;
        const double h5 = 10 * t3 - 15 * t4 + 6 * t5;
        auto quintic = [&](double f0, double d0, double e0, double f1, double d1, double e1) {
            return h0 * f0 + h1 * h * d0 + h2 * h * h * e0 + h3 * h * h * e1 + h4 * h * d1 + h5 * f1;
        };
        const double val = quintic(theta_[i], dtheta_[i], second(i), theta_[i + 1], dtheta_[i + 1], second(i + 1));
        const double der = quintic(dtheta_[i], second(i), third(i), dtheta_[i + 1], second(i + 1), third(i + 1));
        return {val, der};
    }

private:
    double s_;
    double ks_;
    double log_ratio_ = 0.0;
    std::vector<double> z_;
    std::vector<double> theta_;
    std::vector<double> dtheta_;
};

inline ExtensionProfile theta_profile(double s)
{
    return ExtensionProfile(s);
}

/// int_0^inf z^{1-2s} (theta^2 + theta'^2) dz from the exact profile.
///
/// Trapezoid in t = log z on [log 1e-12, log 60]; the piece below 1e-12 is
/// added from the leading small-z behaviour. The identity
/// dtn_constant(s) * result = 1 is the per-mode energy isometry.
inline double profile_energy_integral(double s, double step = 0.01)
{
    const double lo = std::log(1e-12);
    const double hi = std::log(60.0);
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step));
    const double h = (hi - lo) / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double z = std::exp(lo + h * static_cast<double>(i));
        const double th = theta_exact(s, z);
        const double dth = theta_prime_exact(s, z);
        const double f = z * std::pow(z, 1.0 - 2.0 * s) * (th * th + dth * dth);
        acc += (i == 0 || i == n) ? 0.5 * f : f;
    }
    acc *= h;
    const double z0 = 1e-12;
    const double ks = ks_constant(s);
    acc += std::pow(z0, 2.0 - 2.0 * s) / (2.0 - 2.0 * s) + ks * ks * std::pow(z0, 2.0 * s) / (2.0 * s);
    return acc;
}

/// Relative residual of theta'' + (1-2s)/z theta' - theta at z, with the
/// derivatives taken by eighth-order central differences of the exact
/// profile, step min(z/20, 0.05).
inline double profile_ode_residual(double s, double z)
{
    static constexpr std::array<double, 5> d1c{0.0, 4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
    static constexpr std::array<double, 5> d2c{-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
    const double h = std::min(0.05 * z, 0.05);
    const double f0 = theta_exact(s, z);
    double d1 = 0.0;
    double d2 = d2c[0] * f0;
    for (int i = 1; i <= 4; ++i) {
        const double fp = theta_exact(s, z + i * h);
        const double fm = theta_exact(s, z - i * h);
        d1 += d1c[i] * (fp - fm);
        d2 += d2c[i] * (fp + fm);
    }
    d1 /= h;
    d2 /= h * h;
    const double b = (1.0 - 2.0 * s) / z * d1;
    return std::abs(d2 + b - f0) / (std::abs(d2) + std::abs(b) + std::abs(f0));
}

/// The s-harmonic extension w(x,y) = sum_k u_k phi_k(x) theta(sqrt(lambda_k) y)
/// of a field on the ball to the half-cylinder.
class Extension {
public:
    Extension(const SpectralField& field, const BasisSpec& basis, const ExtensionProfile& profile)
        : coeffs_(field.coeffs()), roots_(basis.eigenvalues().cwiseSqrt()), profile_(&profile)
    {
        check_basis(field, basis);
    }

    double operator()(double x, double y) const
    {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < coeffs_.size(); ++k) {
            if (coeffs_[k] == 0.0) {
                continue;
            }
            const double t = y == 0.0 ? 1.0 : (*profile_)(roots_[k] * y);
            acc += coeffs_[k] * BasisSpec::eigenfunction(static_cast<int>(k + 1), x) * t;
        }
        return acc;
    }

    /// Coefficients of w(., y) in the eigenbasis.
    Vector slice(double y) const
    {
        Vector c(coeffs_.size());
        for (Eigen::Index k = 0; k < c.size(); ++k) {
            c[k] = coeffs_[k] * (y == 0.0 ? 1.0 : (*profile_)(roots_[k] * y));
        }
        return c;
    }

private:
    Vector coeffs_;
    Vector roots_;
    const ExtensionProfile* profile_;
};

inline Extension extend(const SpectralField& field, const BasisSpec& basis, const ExtensionProfile& profile)
{
    return Extension(field, basis, profile);
}

/// Weighted Dirichlet energy of one extended mode,
/// dtn_constant * int_0^inf y^{1-2s} (lambda theta^2 + lambda theta'^2)(sqrt(lambda) y) dy,
/// integrated in y on a logarithmic grid using the tabulated profile.
inline double mode_cylinder_energy(double lambda, const ExtensionProfile& profile)
{
    const double s = profile.s();
    const double root = std::sqrt(lambda);
    // y-range covering the table in z = root * y, plus analytic small-y piece.
    const double ylo = ExtensionProfile::z_min / root;
    const double yhi = 60.0 / root;
    const double lo = std::log(ylo);
    const double hi = std::log(yhi);
    const double step = 0.005;
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step));
    const double h = (hi - lo) / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double y = std::exp(lo + h * static_cast<double>(i));
        const auto [th, dth] = profile.eval(root * y);
        const double f = y * std::pow(y, 1.0 - 2.0 * s) * lambda * (th * th + dth * dth);
        acc += (i == 0 || i == n) ? 0.5 * f : f;
    }
    acc *= h;
    // Below ylo: theta ~ 1, theta' ~ -k_s z^{2s-1}.
    const double z0 = ExtensionProfile::z_min;
    const double ks = profile.ks();
    const double tail = std::pow(lambda, s) * (std::pow(z0, 2.0 - 2.0 * s) / (2.0 - 2.0 * s)
                                               + ks * ks * std::pow(z0, 2.0 * s) / (2.0 * s));
    return dtn_constant(s) * (acc + tail);
}

/// Energy of the s-harmonic extension summed mode by mode; equals the
/// squared H^s norm of the trace.
inline double cylinder_energy(const SpectralField& field, const BasisSpec& basis, const ExtensionProfile& profile)
{
    check_basis(field, basis);
    double acc = 0.0;
    const auto& c = field.coeffs();
    for (Eigen::Index k = 0; k < c.size(); ++k) {
        if (c[k] != 0.0) {
            acc += c[k] * c[k] * mode_cylinder_energy(basis.eigenvalues()[k], profile);
        }
    }
    return acc;
}

/// Recovers (-Delta)^s u as the weighted Neumann trace
/// -dtn_constant lim_{y->0} y^{1-2s} dw/dy, per mode, by Richardson
/// extrapolation over y in {h, h/2, h/4, h/8} with h = h0 / sqrt(lambda_k).
///
/// Near 0, z^{1-2s} theta'(z) = -k_s + O(z^{2-2s}) + O(z^2) + O(z^{4-2s}) + O(z^4);
/// the first three error terms are eliminated.
inline SpectralField neumann_limit(const SpectralField& field, const BasisSpec& basis,
                                   const ExtensionProfile& profile, double h0 = 1e-2)
{
    check_basis(field, basis);
    const double s = profile.s();
    const std::array<double, 3> powers{2.0 - 2.0 * s, 2.0, 4.0 - 2.0 * s};
    const double dtn = dtn_constant(s);
    const auto& c = field.coeffs();
    Vector out(c.size());
    for (Eigen::Index k = 0; k < c.size(); ++k) {
        const double root = std::sqrt(basis.eigenvalues()[k]);
        const double h = h0 / root;
        std::array<double, 4> g{};
        for (int i = 0; i < 4; ++i) {
            const double y = h / std::pow(2.0, i);
            g[i] = -dtn * std::pow(y, 1.0 - 2.0 * s) * root * profile.derivative(root * y);
        }
        for (int level = 0; level < 3; ++level) {
            const double r = std::pow(2.0, powers[level]);
            for (int i = 0; i + level + 1 < 4; ++i) {
                g[i] = (r * g[i + 1] - g[i]) / (r - 1.0);
            }
        }
        const double limit = g[0];
        const double finest = -dtn * std::pow(h / 8, 1.0 - 2.0 * s) * root * profile.derivative(root * h / 8);
        if (!std::isfinite(limit) || std::abs(limit - finest) > 0.1 * std::abs(limit)) {
            throw ExtrapolationUnstable("neumann_limit: extrapolation unstable at mode " + std::to_string(k + 1));
        }
        out[k] = c[k] * limit;
    }
    return SpectralField(std::move(out));
}

namespace detail {

inline double bubble_profile(double x, int dim, double s)
{
    return std::pow(1.0 + x * x, (2.0 * s - dim) / 2.0);
}

/// int_{-pi/2}^{pi/2} f(phi) cos(phi)^{2s-1} dphi via tanh-sinh, using the
/// endpoint complement for an accurate cosine.
template <class F>
double poisson_angle_integral(F&& f, double s)
{
    boost::math::quadrature::tanh_sinh<double> integrator;
    const double half_pi = std::numbers::pi / 2.0;
    auto integrand = [&](double phi, double phic) {
        // phic is the distance to the nearest endpoint
        const double c = std::abs(phic) < 0.5 ? std::sin(std::abs(phic)) : std::cos(phi);
        if (c <= 0.0) {
            return 0.0;
        }
        return f(phi, c) * std::pow(c, 2.0 * s - 1.0);
    };
    double err = 0.0;
    const double val = integrator.integrate(integrand, -half_pi, half_pi, 1e-13, &err);
    if (!std::isfinite(val) || err > 1e-8 * std::abs(val)) {
        throw QuadratureFailure("poisson extension quadrature did not converge");
    }
    return val;
}

} // namespace detail

/// Normalizing constant c of the Poisson kernel c y^{2s} / (|x-z|^2+y^2)^{(N+2s)/2},
/// fixed numerically so that the kernel has unit mass (W(., 0+) = U).
inline double poisson_constant(double s)
{
    return 1.0 / detail::poisson_angle_integral([](double, double) { return 1.0; }, s);
}

/// W(x,y) = c y^{2s} int U(z) / ((x-z)^2 + y^2)^{(1+2s)/2} dz for N = 1,
/// evaluated after the substitution z = x + y tan(phi).
inline double poisson_extension_W(double x, double y, int dim, double s)
{
    if (dim != 1) {
        throw ConfigError("poisson_extension_W: only N = 1 is implemented");
    }
    if (!(y > 0.0)) {
        throw ConfigError("poisson_extension_W: y must be positive");
    }
    static thread_local double cached_s = -1.0;
    static thread_local double cached_c = 0.0;
    if (s != cached_s) {
        cached_c = poisson_constant(s);
        cached_s = s;
    }
    const double val = detail::poisson_angle_integral(
        [&](double phi, double c) {
            const double z = x + y * std::sin(phi) / c;
            return detail::bubble_profile(z, dim, s);
        },
        s);
    return cached_c * val;
}

} // namespace henon

#endif // HENON_EXTENSION_HPP
