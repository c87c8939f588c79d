#ifndef HENON_SOLVER_HPP
#define HENON_SOLVER_HPP

#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "henon/energy.hpp"
#include "henon/errors.hpp"
#include "henon/spectral.hpp"

namespace henon {

enum class PositivityMode {
    none,        ///< leave signs alone; the quotient already uses |u|
    abs_project  ///< replace samples by |samples| and re-project when it does not raise the quotient
};

struct SolverOptions {
    int max_iters = 4000;
    double tol_grad = 1e-7;        ///< preconditioned gradient norm relative to the quotient
    double tol_quotient = 1e-13;   ///< relative quotient decrease counted as a stall
    double initial_step = 1e-2;
    double backtrack = 0.5;
    double armijo = 1e-4;
    int memory = 10;               ///< L-BFGS history length
    double init_center = 0.5;      ///< off-center bump breaks the x <-> -x tie
    double init_width = 0.3;
    PositivityMode positivity = PositivityMode::abs_project;
    bool allow_critical = false;   ///< permit p+q >= 2*_s (degeneration studies)
    std::optional<Vector> warm_u;  ///< optional starting coefficients
    std::optional<Vector> warm_v;

    void validate() const
    {
        if (max_iters < 1) {
            throw ConfigError("max_iters must be >= 1");
        }
        if (!(tol_grad > 0.0) || !(tol_quotient > 0.0)) {
            throw ConfigError("solver tolerances must be positive");
        }
        if (!(backtrack > 0.0 && backtrack < 1.0)) {
            throw ConfigError("backtracking factor must lie in (0,1)");
        }
        if (!(initial_step > 0.0) || !(init_width > 0.0) || memory < 1) {
            throw ConfigError("invalid step/initialization settings");
        }
    }
};

/// A solved minimizer (or a partial one when `converged` is false).
struct GroundState {
    SpectralField u;
    SpectralField v;        ///< empty for scalar problems
    bool scalar = false;
    double p = 0.0;         ///< for scalar states p holds the exponent r and q = 0
    double q = 0.0;
    double alpha = 0.0;
    double s = 0.0;
    double quotient = 0.0;
    double multiplier = 0.0;
    double beta = 1.0;
    double constraint = 0.0;
    bool converged = false;
    bool rescaled = false;
    int iterations = 0;
    double grad_norm = 0.0;
    double residual_norm = 0.0;
    double min_trace = 0.0;
    std::vector<double> history;  ///< quotient at every accepted iterate

    double exponent_sum() const { return scalar ? p : p + q; }
    ExponentConfig exponents() const { return {p, q}; }
};

class NotConverged : public Error {
public:
    NotConverged(const std::string& what, GroundState state) : Error(what), state_(std::move(state)) {}
    const GroundState& state() const { return state_; }

private:
    GroundState state_;
};

/// beta = ((p+q) multiplier / 2)^{1/(p+q-2)}.
inline double rescale_factor(double exponent_sum, double multiplier)
{
    return std::pow(exponent_sum * multiplier / 2.0, 1.0 / (exponent_sum - 2.0));
}

/// Deterministic off-center bump exp(-((x-c)/w)^2)(1-x^2), projected.
inline Vector initial_bump(const BasisSpec& basis, double center, double width)
{
    const Vector& x = basis.nodes();
    Vector f(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double t = (x[j] - center) / width;
        f[j] = std::exp(-t * t) * (1.0 - x[j] * x[j]);
    }
    return basis.analysis() * f;
}

/// Relative coefficient-space norm of the weak-form residual of the coupled
/// system ((-Delta)^s u - 2p/(p+q)|x|^a u^{p-1}v^q, ...); for scalar states
/// the equation (-Delta)^s w = 2 |x|^a w^{r-1} is used.
inline double residual(const GroundState& state, const BasisSpec& basis)
{
    if (state.u.coeffs().norm() == 0.0 && (state.scalar || state.v.coeffs().norm() == 0.0)) {
        return 0.0;
    }
    if (state.scalar) {
        const SpectralField g = scalar_gradient(state.u, basis, state.p, state.alpha, state.s);
        const double scale = frac_laplacian(state.u, basis, state.s).coeffs().norm();
        return g.coeffs().norm() / scale;
    }
    const auto [gu, gv] = gradient_pair(state.u, state.v, basis, state.exponents(), state.alpha, state.s);
    const double num = std::sqrt(gu.coeffs().squaredNorm() + gv.coeffs().squaredNorm());
    const double den = std::sqrt(frac_laplacian(state.u, basis, state.s).coeffs().squaredNorm()
                                 + frac_laplacian(state.v, basis, state.s).coeffs().squaredNorm());
    return den == 0.0 ? num : num / den;
}

/// Multiplier recovered from the Euler-Lagrange equation by least squares,
/// <(-Delta)^s (u,v), G'> / |G'|^2, where G' is the gradient of the
/// constraint integral. Independent of the energy identity used for
/// `GroundState::multiplier`.
inline double multiplier_from_equation(const GroundState& state, const BasisSpec& basis)
{
    const HenonFunctional f(basis, state.alpha, state.s);
    if (state.scalar) {
        const Vector g = f.power_gradient(to_physical(state.u, basis), state.p);
        const Vector a = state.u.coeffs().cwiseProduct(f.eigen_power());
        return a.dot(g) / g.squaredNorm();
    }
    const auto [gu, gv] = f.mixed_gradient(to_physical(state.u, basis), to_physical(state.v, basis), state.p, state.q);
    const Vector au = state.u.coeffs().cwiseProduct(f.eigen_power());
    const Vector av = state.v.coeffs().cwiseProduct(f.eigen_power());
    return (au.dot(gu) + av.dot(gv)) / (gu.squaredNorm() + gv.squaredNorm());
}

namespace detail {

/// Objective in preconditioned coordinates z = lambda^{s/2} c, where the
/// H^s energy is the Euclidean norm. The state stacks u (and v).
class QuotientObjective {
public:
    QuotientObjective(const BasisSpec& basis, double alpha, double s, double p, double q, bool scalar)
        : f_(basis, alpha, s), p_(p), q_(q), scalar_(scalar), m_(static_cast<Eigen::Index>(basis.modes()))
    {
        sqrt_lam_s_ = f_.eigen_power().cwiseSqrt();
    }

    double sum() const { return scalar_ ? p_ : p_ + q_; }
    Eigen::Index dim() const { return scalar_ ? m_ : 2 * m_; }

    Vector to_coeffs(const Vector& z) const
    {
        Vector c(z.size());
        c.head(m_) = z.head(m_).cwiseQuotient(sqrt_lam_s_);
        if (!scalar_) {
            c.tail(m_) = z.tail(m_).cwiseQuotient(sqrt_lam_s_);
        }
        return c;
    }

    Vector to_z(const Vector& c) const
    {
        Vector z(c.size());
        z.head(m_) = c.head(m_).cwiseProduct(sqrt_lam_s_);
        if (!scalar_) {
            z.tail(m_) = c.tail(m_).cwiseProduct(sqrt_lam_s_);
        }
        return z;
    }

    /// Constraint integral at z.
    double constraint(const Vector& z) const
    {
        const Vector c = to_coeffs(z);
        if (scalar_) {
            return f_.power(f_.samples(c), p_);
        }
        return f_.mixed(f_.samples(c.head(m_)), f_.samples(c.tail(m_)), p_, q_);
    }

    struct Eval {
        double quotient;
        double constraint;
        Vector grad;  ///< gradient of the quotient in z
    };

    Eval evaluate(const Vector& z) const
    {
        const Vector c = to_coeffs(z);
        const double energy = z.squaredNorm();
        const double r = sum();
        double d = 0.0;
        Vector gd(z.size());
        if (scalar_) {
            const Vector ws = f_.samples(c);
            d = f_.power(ws, p_);
            gd = f_.power_gradient(ws, p_);
        }
        else {
            const Vector us = f_.samples(c.head(m_));
            const Vector vs = f_.samples(c.tail(m_));
            d = f_.mixed(us, vs, p_, q_);
            auto [gu, gv] = f_.mixed_gradient(us, vs, p_, q_);
            gd.head(m_) = gu;
            gd.tail(m_) = gv;
        }
        Eval e;
        e.constraint = d;
        if (!(d > 0.0) || !std::isfinite(d)) {
            e.quotient = std::numeric_limits<double>::infinity();
            e.grad = Vector::Zero(z.size());
            return e;
        }
        const double scale = std::pow(d, -2.0 / r);
        e.quotient = energy * scale;
        // dQ/dc = d^{-2/r} (2 A c - (2/r)(E/d) dD/dc); dQ/dz = A^{-1/2} dQ/dc
        Vector gz(z.size());
        const double coef = 2.0 / r * energy / d;
        gz.head(m_) = 2.0 * z.head(m_) - coef * gd.head(m_).cwiseQuotient(sqrt_lam_s_);
        if (!scalar_) {
            gz.tail(m_) = 2.0 * z.tail(m_) - coef * gd.tail(m_).cwiseQuotient(sqrt_lam_s_);
        }
        e.grad = gz * scale;
        return e;
    }

    /// Rescale onto {constraint = 1}; exact by homogeneity of degree p+q.
    Vector normalize(const Vector& z) const
    {
        const double d = constraint(z);
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw ZeroDenominator("normalize: constraint integral vanishes");
        }
        return z * std::pow(d, -1.0 / sum());
    }

    /// |samples| re-projected, or nullopt when already nonnegative.
    std::optional<Vector> absolute(const Vector& z) const
    {
        const Vector c = to_coeffs(z);
        const auto& basis = f_.basis();
        Vector out(c.size());
        bool changed = false;
        auto fix = [&](Eigen::Index off) {
            Vector smp = f_.samples(c.segment(off, m_));
            if (smp.minCoeff() < 0.0) {
                changed = true;
                smp = smp.cwiseAbs();
            }
            out.segment(off, m_) = basis.analysis() * smp;
        };
        fix(0);
        if (!scalar_) {
            fix(m_);
        }
        if (!changed) {
            return std::nullopt;
        }
        return to_z(out);
    }

    double min_sample(const Vector& z) const
    {
        const Vector c = to_coeffs(z);
        double lo = f_.samples(c.head(m_)).minCoeff();
        if (!scalar_) {
            lo = std::min(lo, f_.samples(c.tail(m_)).minCoeff());
        }
        return lo;
    }

    Eigen::Index modes() const { return m_; }

private:
    HenonFunctional f_;
    double p_;
    double q_;
    bool scalar_;
    Eigen::Index m_;
    Vector sqrt_lam_s_;
};

/// Limited-memory BFGS on the quotient, with every accepted iterate
/// renormalized onto the constraint manifold. Backtracking Armijo line
/// search keeps the accepted quotients nonincreasing.
inline GroundState run_descent(const BasisSpec& basis, double alpha, double s, double p, double q, bool scalar,
                               const SolverOptions& opts)
{
    const QuotientObjective obj(basis, alpha, s, p, q, scalar);
    const Eigen::Index m = obj.modes();

    if ((opts.warm_u && opts.warm_u->size() != m) || (!scalar && opts.warm_v && opts.warm_v->size() != m)) {
        throw DimensionMismatch("warm start has the wrong number of modes");
    }
    Vector c0(obj.dim());
    const Vector bump = initial_bump(basis, opts.init_center, opts.init_width);
    c0.head(m) = opts.warm_u ? *opts.warm_u : bump;
    if (!scalar) {
        c0.tail(m) = opts.warm_v ? *opts.warm_v : bump;
    }

    Vector z = obj.normalize(obj.to_z(c0));
    auto cur = obj.evaluate(z);

    std::deque<std::pair<Vector, Vector>> memory;
    std::vector<double> history{cur.quotient};
    bool converged = false;
    int iter = 0;
    double last_rel_decrease = std::numeric_limits<double>::infinity();
    int stalls = 0;

    for (; iter < opts.max_iters; ++iter) {
        const double gnorm = cur.grad.norm();
        if (gnorm <= opts.tol_grad * cur.quotient && last_rel_decrease <= opts.tol_quotient) {
            converged = true;
            break;
        }

        // two-loop recursion
        Vector d = cur.grad;
        std::vector<double> alphas(memory.size());
        for (std::size_t i = memory.size(); i-- > 0;) {
            const auto& [sv, yv] = memory[i];
            alphas[i] = sv.dot(d) / yv.dot(sv);
            d -= alphas[i] * yv;
        }
        double step = 1.0;
        if (!memory.empty()) {
            const auto& [sv, yv] = memory.back();
            d *= sv.dot(yv) / yv.squaredNorm();
        }
        else {
            step = opts.initial_step / std::max(gnorm, std::numeric_limits<double>::min());
        }
        for (std::size_t i = 0; i < memory.size(); ++i) {
            const auto& [sv, yv] = memory[i];
            const double b = yv.dot(d) / yv.dot(sv);
            d += sv * (alphas[i] - b);
        }
        d = -d;
        double slope = d.dot(cur.grad);
        if (!(slope < 0.0)) {
            memory.clear();
            d = -cur.grad;
            slope = -gnorm * gnorm;
            step = opts.initial_step / std::max(gnorm, std::numeric_limits<double>::min());
        }

        bool accepted = false;
        Vector z_next;
        QuotientObjective::Eval next;
        for (int ls = 0; ls < 60; ++ls) {
            Vector trial = obj.normalize(z + step * d);
            auto ev = obj.evaluate(trial);
            if (opts.positivity == PositivityMode::abs_project) {
                if (auto fixed = obj.absolute(trial)) {
                    Vector alt = obj.normalize(*fixed);
                    auto ev_alt = obj.evaluate(alt);
                    if (ev_alt.quotient <= ev.quotient) {
                        trial = std::move(alt);
                        ev = std::move(ev_alt);
                    }
                }
            }
            const bool armijo = ev.quotient <= cur.quotient + opts.armijo * step * slope;
            // at the rounding floor accept a non-increasing step that shrinks the gradient
            const bool floor_ok = ev.quotient <= cur.quotient && ev.grad.norm() < gnorm;
            if (armijo || floor_ok) {
                z_next = std::move(trial);
                next = std::move(ev);
                accepted = true;
                break;
            }
            step *= opts.backtrack;
        }
        if (!accepted) {
            // no admissible step: the quotient is at its rounding floor
            ++stalls;
            memory.clear();
            last_rel_decrease = 0.0;
            if (gnorm <= opts.tol_grad * cur.quotient || stalls > 2) {
                converged = gnorm <= opts.tol_grad * cur.quotient;
                break;
            }
            continue;
        }
        stalls = 0;
        last_rel_decrease = (cur.quotient - next.quotient) / cur.quotient;
        Vector sv = z_next - z;
        Vector yv = next.grad - cur.grad;
        if (sv.dot(yv) > 1e-12 * sv.norm() * yv.norm()) {
            memory.emplace_back(std::move(sv), std::move(yv));
            if (static_cast<int>(memory.size()) > opts.memory) {
                memory.pop_front();
            }
        }
        z = std::move(z_next);
        cur = std::move(next);
        history.push_back(cur.quotient);
    }

    const Vector c = obj.to_coeffs(z);
    GroundState st;
    st.scalar = scalar;
    st.p = p;
    st.q = scalar ? 0.0 : q;
    st.alpha = alpha;
    st.s = s;
    st.u = SpectralField(c.head(m));
    if (!scalar) {
        st.v = SpectralField(c.tail(m));
    }
    st.quotient = cur.quotient;
    st.constraint = cur.constraint;
    const double r = obj.sum();
    st.multiplier = z.squaredNorm() / r;
    st.beta = rescale_factor(r, st.multiplier);
    st.converged = converged;
    st.iterations = iter;
    st.grad_norm = cur.grad.norm();
    st.min_trace = obj.min_sample(z);
    st.history = std::move(history);
    st.residual_norm = residual(st, basis);
    return st;
}

inline void check_exponent(double r, double crit, bool allow_critical)
{
    if (!(r > 2.0)) {
        throw ConfigError("exponent sum must exceed 2");
    }
    if (r >= crit * (1.0 - 1e-12) && !allow_critical) {
        throw CriticalExponent("exponent sum " + std::to_string(r) + " reaches the critical exponent "
                               + std::to_string(crit) + "; set the degeneration flag to proceed");
    }
}

inline GroundState finish(GroundState st, const char* who)
{
    if (!st.converged) {
        throw NotConverged(std::string(who) + ": iteration budget exhausted after "
                               + std::to_string(st.iterations) + " iterations",
                           std::move(st));
    }
    return st;
}

} // namespace detail

/// Minimizes |w|^2_{H^s} / (int |x|^alpha |w|^r)^{2/r} over the basis.
inline GroundState minimize_scalar(const BasisSpec& basis, double r, double alpha, const SolverOptions& opts)
{
    opts.validate();
    detail::check_exponent(r, basis.config().crit_exp(), opts.allow_critical);
    return detail::finish(detail::run_descent(basis, alpha, basis.config().s, r, 0.0, true, opts), "minimize_scalar");
}

/// Minimizes the coupled quotient on {int |x|^alpha |u|^p |v|^q = 1}.
inline GroundState minimize_system(const BasisSpec& basis, const ExponentConfig& exp, double alpha,
                                   const SolverOptions& opts)
{
    opts.validate();
    exp.validate();
    detail::check_exponent(exp.sum(), basis.config().crit_exp(), opts.allow_critical);
    return detail::finish(detail::run_descent(basis, alpha, basis.config().s, exp.p, exp.q, false, opts),
                          "minimize_system");
}

/// (B w0, C w0) with B = sqrt(p/q) C and B^p C^q = 1, so the system
/// constraint equals the scalar one (= 1) and the quotient is C_{p,q} times
/// the scalar quotient.
inline GroundState synthesize_system_from_scalar(const GroundState& w0, const ExponentConfig& exp,
                                                 const BasisSpec& basis)
{
    if (!w0.scalar) {
        throw ConfigError("synthesize_system_from_scalar expects a scalar state");
    }
    const double ratio = exp.p / exp.q;
    const double c = std::pow(ratio, -exp.p / (2.0 * exp.sum()));
    const double b = std::sqrt(ratio) * c;
    GroundState st = w0;
    st.scalar = false;
    st.p = exp.p;
    st.q = exp.q;
    st.u = w0.u * b;
    st.v = w0.u * c;
    st.constraint = mixed_term(st.u, st.v, basis, exp, st.alpha);
    st.quotient = quotient_system(st.u, st.v, basis, exp, st.alpha, st.s);
    const double energy = hs_norm_squared(st.u, basis, st.s) + hs_norm_squared(st.v, basis, st.s);
    st.multiplier = energy / exp.sum() / st.constraint;
    st.beta = rescale_factor(exp.sum(), st.multiplier);
    st.rescaled = false;
    st.history.clear();
    st.residual_norm = residual(st, basis);
    return st;
}

/// Scales a constrained minimizer by beta so it solves the Euler-Lagrange
/// system with unit multiplier structure.
inline GroundState lagrange_rescale(const GroundState& state, const BasisSpec& basis)
{
    GroundState st = state;
    st.u = state.u * state.beta;
    if (!state.scalar) {
        st.v = state.v * state.beta;
    }
    st.rescaled = true;
    st.residual_norm = residual(st, basis);
    const double lo_u = to_physical(st.u, basis).minCoeff();
    st.min_trace = state.scalar ? lo_u : std::min(lo_u, to_physical(st.v, basis).minCoeff());
    return st;
}

} // namespace henon

#endif // HENON_SOLVER_HPP
