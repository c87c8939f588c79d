#ifndef HENON_ENERGY_HPP
#define HENON_ENERGY_HPP

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "henon/errors.hpp"
#include "henon/spectral.hpp"

namespace henon {

/// C_{p,q} = (p/q)^{q/(p+q)} + (p/q)^{-p/(p+q)}: the factor relating the
/// system constant to the scalar constant at exponent p+q.
inline double cpq(double p, double q)
{
    const double ratio = p / q;
    const double sum = p + q;
    return std::pow(ratio, q / sum) + std::pow(ratio, -p / sum);
}

enum class Criticality { subcritical, critical, supercritical };

/// Exponent pair (p, q) of the coupling |u|^p |v|^q.
struct ExponentConfig {
    double p = 2.0;
    double q = 2.0;

    double sum() const { return p + q; }
    double c_pq() const { return cpq(p, q); }

    Criticality criticality(double crit_exp, double tol = 1e-12) const
    {
        const double d = sum() - crit_exp;
        if (std::abs(d) <= tol * crit_exp) {
            return Criticality::critical;
        }
        return d < 0.0 ? Criticality::subcritical : Criticality::supercritical;
    }

    void validate() const
    {
        if (!(p > 1.0 && q > 1.0)) {
            throw ConfigError("exponents must satisfy p > 1 and q > 1");
        }
    }
};

namespace detail {

/// sign(x) |x|^e, finite at x = 0 for e >= 0.
inline double signed_pow(double x, double e)
{
    if (x == 0.0) {
        return 0.0;
    }
    const double a = std::pow(std::abs(x), e);
    return x < 0.0 ? -a : a;
}

inline void require_power(double e, const char* name)
{
    if (e < 1.0) {
        throw NonIntegrablePower(std::string("exponent ") + name + " must be >= 1");
    }
}

} // namespace detail

/// Precomputed evaluator for the weighted Henon functionals on one basis.
///
/// Works directly on coefficient vectors so the optimizer avoids building
/// SpectralField temporaries on every line-search probe.
class HenonFunctional {
public:
    HenonFunctional(const BasisSpec& basis, double alpha, double s)
        : basis_(&basis), alpha_(alpha), s_(s), wa_(basis.weighted(alpha)),
          lam_s_(basis.eigenvalues().array().pow(s).matrix())
    {
    }

    const BasisSpec& basis() const { return *basis_; }
    double alpha() const { return alpha_; }
    double s() const { return s_; }
    const Vector& eigen_power() const { return lam_s_; }

    Vector samples(const Vector& coeffs) const { return basis_->synthesis().transpose() * coeffs; }

    double energy(const Vector& coeffs) const { return (coeffs.array().square() * lam_s_.array()).sum(); }

    /// Integral of |x|^alpha |U|^p |V|^q from samples.
    double mixed(const Vector& us, const Vector& vs, double p, double q) const
    {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < us.size(); ++j) {
            acc += wa_[j] * std::pow(std::abs(us[j]), p) * std::pow(std::abs(vs[j]), q);
        }
        return acc;
    }

    double power(const Vector& ws, double r) const
    {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < ws.size(); ++j) {
            acc += wa_[j] * std::pow(std::abs(ws[j]), r);
        }
        return acc;
    }

    /// Coefficients of the partial derivatives of the mixed integral.
    std::pair<Vector, Vector> mixed_gradient(const Vector& us, const Vector& vs, double p, double q) const
    {
        Vector gu(us.size());
        Vector gv(vs.size());
        for (Eigen::Index j = 0; j < us.size(); ++j) {
            // same operation order in both components, so swapping (u,p) and
            // (v,q) swaps the results bit for bit
            gu[j] = wa_[j] * (p * (detail::signed_pow(us[j], p - 1.0) * std::pow(std::abs(vs[j]), q)));
            gv[j] = wa_[j] * (q * (detail::signed_pow(vs[j], q - 1.0) * std::pow(std::abs(us[j]), p)));
        }
        return {basis_->synthesis() * gu, basis_->synthesis() * gv};
    }

    Vector power_gradient(const Vector& ws, double r) const
    {
        Vector g(ws.size());
        for (Eigen::Index j = 0; j < ws.size(); ++j) {
            g[j] = wa_[j] * r * detail::signed_pow(ws[j], r - 1.0);
        }
        return basis_->synthesis() * g;
    }

private:
    const BasisSpec* basis_;
    double alpha_;
    double s_;
    Vector wa_;
    Vector lam_s_;
};

/// Integral over the ball of |x|^alpha |u|^p |v|^q.
inline double mixed_term(const SpectralField& u, const SpectralField& v, const BasisSpec& basis,
                         const ExponentConfig& exp, double alpha)
{
    check_basis(u, basis);
    check_basis(v, basis);
    const HenonFunctional f(basis, alpha, 0.0);
    return f.mixed(to_physical(u, basis), to_physical(v, basis), exp.p, exp.q);
}

namespace detail {

inline void require_denominator(double denom, double scale, const char* what)
{
    if (!(denom > std::numeric_limits<double>::epsilon() * scale) || !std::isfinite(denom)) {
        throw ZeroDenominator(std::string(what) + ": constraint integral vanishes");
    }
}

} // namespace detail

/// (|u|^2_{H^s} + |v|^2_{H^s}) / (mixed_term)^{2/(p+q)}.
inline double quotient_system(const SpectralField& u, const SpectralField& v, const BasisSpec& basis,
                              const ExponentConfig& exp, double alpha, double s)
{
    const double denom = mixed_term(u, v, basis, exp, alpha);
    const double scale = std::pow(u.coeffs().norm(), exp.p) * std::pow(v.coeffs().norm(), exp.q);
    detail::require_denominator(denom, scale, "quotient_system");
    const double num = hs_norm_squared(u, basis, s) + hs_norm_squared(v, basis, s);
    return num / std::pow(denom, 2.0 / exp.sum());
}

/// |w|^2_{H^s} / (int |x|^alpha |w|^r)^{2/r}.
inline double quotient_scalar(const SpectralField& w, const BasisSpec& basis, double r, double alpha, double s)
{
    check_basis(w, basis);
    const HenonFunctional f(basis, alpha, s);
    const double denom = f.power(to_physical(w, basis), r);
    detail::require_denominator(denom, std::pow(w.coeffs().norm(), r), "quotient_scalar");
    return f.energy(w.coeffs()) / std::pow(denom, 2.0 / r);
}

/// I(u,v) = 1/2 (|u|^2 + |v|^2) - 2/(p+q) int |x|^alpha |u|^p |v|^q.
/// Its critical points are the weak solutions of the coupled system.
inline double energy_functional(const SpectralField& u, const SpectralField& v, const BasisSpec& basis,
                                const ExponentConfig& exp, double alpha, double s)
{
    const double kinetic = hs_norm_squared(u, basis, s) + hs_norm_squared(v, basis, s);
    return 0.5 * kinetic - 2.0 / exp.sum() * mixed_term(u, v, basis, exp, alpha);
}

/// L2 gradient of energy_functional in coefficient space:
/// ((-Delta)^s u - 2p/(p+q) |x|^a u^{p-1} v^q, (-Delta)^s v - 2q/(p+q) |x|^a u^p v^{q-1}).
inline std::pair<SpectralField, SpectralField> gradient_pair(const SpectralField& u, const SpectralField& v,
                                                             const BasisSpec& basis, const ExponentConfig& exp,
                                                             double alpha, double s)
{
    detail::require_power(exp.p, "p");
    detail::require_power(exp.q, "q");
    check_basis(u, basis);
    check_basis(v, basis);
    const HenonFunctional f(basis, alpha, s);
    auto [gu, gv] = f.mixed_gradient(to_physical(u, basis), to_physical(v, basis), exp.p, exp.q);
    const double c = 2.0 / exp.sum();
    Vector ru = u.coeffs().cwiseProduct(f.eigen_power()) - c * gu;
    Vector rv = v.coeffs().cwiseProduct(f.eigen_power()) - c * gv;
    return {SpectralField(std::move(ru)), SpectralField(std::move(rv))};
}

/// Scalar energy 1/2 |w|^2 - 2/r int |x|^alpha |w|^r.
inline double scalar_energy_functional(const SpectralField& w, const BasisSpec& basis, double r, double alpha,
                                       double s)
{
    const HenonFunctional f(basis, alpha, s);
    return 0.5 * f.energy(w.coeffs()) - 2.0 / r * f.power(to_physical(w, basis), r);
}

inline SpectralField scalar_gradient(const SpectralField& w, const BasisSpec& basis, double r, double alpha,
                                     double s)
{
    detail::require_power(r, "r");
    check_basis(w, basis);
    const HenonFunctional f(basis, alpha, s);
    const Vector g = f.power_gradient(to_physical(w, basis), r);
    return SpectralField(w.coeffs().cwiseProduct(f.eigen_power()) - 2.0 / r * g);
}

} // namespace henon

#endif // HENON_ENERGY_HPP
