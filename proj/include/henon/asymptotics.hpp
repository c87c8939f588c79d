#ifndef HENON_ASYMPTOTICS_HPP
#define HENON_ASYMPTOTICS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include "henon/bubbles.hpp"
#include "henon/energy.hpp"
#include "henon/errors.hpp"
#include "henon/extension.hpp"
#include "henon/solver.hpp"
#include "henon/spectral.hpp"

namespace henon {

struct SweepPlan {
    ProblemConfig config;          ///< alpha is taken from here
    double q = 2.0;
    std::vector<double> p_values;  ///< p_eps, increasing toward 2*_s - q
    SolverOptions options;
    bool warm_start = true;
    int threads = 1;               ///< used only when warm_start is off

    void validate() const
    {
        config.validate();
        options.validate();
        if (p_values.empty()) {
            throw ConfigError("sweep plan has no exponents");
        }
        const double crit = config.crit_exp();
        for (std::size_t i = 0; i < p_values.size(); ++i) {
            const double p = p_values[i];
            if (!(p > 1.0) || !(q > 1.0)) {
                throw ConfigError("sweep exponents must exceed 1");
            }
            if (!(p + q < crit)) {
                throw ConfigError("sweep exponent p=" + std::to_string(p) + " is not subcritical");
            }
            if (i > 0 && !(p > p_values[i - 1])) {
                throw ConfigError("sweep exponents must be strictly increasing");
            }
        }
    }
};

struct SweepRecord {
    double p_eps = 0.0;
    double q = 0.0;
    double quotient = 0.0;
    double multiplier = 0.0;
    double M1 = 0.0;
    double M2 = 0.0;
    double ratio = 0.0;
    double x_max = 0.0;
    double d_eps = 0.0;
    double lambda_eps = 0.0;
    double d_over_lambda = 0.0;
    double h_eps = 0.0;
    double remainder_rel = std::numeric_limits<double>::quiet_NaN();
    double amp_ratio_fit = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    bool converged = false;

    // not part of the CSV schema
    double x_max_v = 0.0;
    double residual_norm = 0.0;
    double min_trace = 0.0;
    double extension_ratio = 0.0;   ///< max over cylinder samples of w / M1
    double mass_fraction = std::numeric_limits<double>::quiet_NaN();
    double fit_residual = std::numeric_limits<double>::quiet_NaN();
    double symmetry_defect = std::numeric_limits<double>::quiet_NaN();
    double remainder_radius = 0.0;
    bool remainder_radius_shrunk = false;
};

namespace detail {

struct Peak {
    double x = 0.0;
    double value = 0.0;
};

/// Discrete argmax refined by the parabola through the neighbouring samples.
/// Ties (relative 1e-12) go to the nonnegative node.
inline Peak refined_peak(const Vector& x, const Vector& f)
{
    const Eigen::Index n = f.size();
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < n; ++j) {
        const double tol = 1e-12 * std::abs(f[best]);
        if (f[j] > f[best] + tol || (std::abs(f[j] - f[best]) <= tol && x[best] < 0.0 && x[j] >= 0.0)) {
            best = j;
        }
    }
    if (best == 0 || best == n - 1) {
        return {x[best], f[best]};
    }
    const double x0 = x[best - 1], x1 = x[best], x2 = x[best + 1];
    const double f0 = f[best - 1], f1 = f[best], f2 = f[best + 1];
    // Newton divided differences on the nonuniform stencil.
    const double d01 = (f1 - f0) / (x1 - x0);
    const double d12 = (f2 - f1) / (x2 - x1);
    const double c2 = (d12 - d01) / (x2 - x0);
    if (!(c2 < 0.0)) {
        return {x1, f1};
    }
    const double c1 = d01 - c2 * (x0 + x1);
    const double xv = std::clamp(-c1 / (2.0 * c2), x0, x2);
    const double fv = f0 + d01 * (xv - x0) + c2 * (xv - x0) * (xv - x1);
    return {xv, std::max(fv, f1)};
}

} // namespace detail

/// Peak values, concentration point and derived scales of a (rescaled)
/// ground state. When `profile` is given, the extension is sampled at 100
/// cylinder points and the largest w/M1 is stored in `extension_ratio`.
inline SweepRecord diagnostics(const GroundState& state, const BasisSpec& basis,
                               const ExtensionProfile* profile = nullptr)
{
    const auto& cfg = basis.config();
    const Vector& x = basis.nodes();
    const Vector us = to_physical(state.u, basis);
    const Vector vs = state.scalar ? us : to_physical(state.v, basis);
    const auto pu = detail::refined_peak(x, us);
    const auto pv = detail::refined_peak(x, vs);

    SweepRecord r;
    r.p_eps = state.p;
    r.q = state.q;
    r.quotient = state.quotient;
    r.multiplier = state.multiplier;
    r.M1 = pu.value;
    r.M2 = pv.value;
    r.ratio = r.M1 / r.M2;
    r.x_max = pu.x;
    r.x_max_v = pv.x;
    r.d_eps = 1.0 - std::abs(pu.x);
    const double decay = cfg.dim - 2.0 * cfg.s;
    r.lambda_eps = std::pow(r.M1, -2.0 / decay);
    r.d_over_lambda = r.d_eps / r.lambda_eps;
    r.h_eps = std::pow(r.lambda_eps, cfg.dim - decay * state.exponent_sum() / 2.0);
    r.iterations = state.iterations;
    r.converged = state.converged;
    r.residual_norm = state.residual_norm;
    r.min_trace = std::min(us.minCoeff(), vs.minCoeff());

    if (profile != nullptr) {
        const Extension w = extend(state.u, basis, *profile);
        double worst = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < 10; ++i) {
            // five points clustered at the peak, five spread over the ball
            const double xi = i < 5 ? std::clamp(r.x_max + (i - 2) * 0.5 * r.lambda_eps, -1.0, 1.0)
                                    : -0.9 + 0.45 * (i - 5);
            for (int j = 0; j < 10; ++j) {
                const double y = 1e-4 * std::pow(10.0, 0.5 * j);
                worst = std::max(worst, w(xi, y) / r.M1);
            }
        }
        r.extension_ratio = worst;
    }
    return r;
}

/// Fraction of int |x|^alpha |u|^p |v|^q carried by |x - center| < radius
/// (|w|^r for scalar states).
inline double mass_fraction(const GroundState& state, const BasisSpec& basis, double center, double radius)
{
    if (!(radius > 0.0)) {
        throw ConfigError("mass_fraction: radius must be positive");
    }
    const Vector w = basis.weighted(state.alpha);
    const Vector us = to_physical(state.u, basis);
    const Vector vs = state.scalar ? Vector() : to_physical(state.v, basis);
    const Vector& x = basis.nodes();
    double inside = 0.0;
    double total = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        double density = std::pow(std::abs(us[j]), state.p);
        if (!state.scalar) {
            density *= std::pow(std::abs(vs[j]), state.q);
        }
        const double m = w[j] * density;
        total += m;
        if (std::abs(x[j] - center) < radius) {
            inside += m;
        }
    }
    return total > 0.0 ? inside / total : 0.0;
}

struct RemainderReport {
    double relative = 0.0;
    double radius = 0.0;
    bool shrunk = false;
};

/// Relative H^s norm of the localized bubble remainder
/// cutoff(x - x_max) (u - M1 U((x - x_max)/lambda)) together with the same
/// quantity for v, whose bubble amplitude is M1 / amp_ratio. When amp_ratio
/// is not finite the measured M1/M2 is used instead. The cutoff radius is
/// `radius`, shrunk to d_eps when the support would leave the ball.
inline RemainderReport bubble_remainder(const GroundState& state, const SweepRecord& record, const BasisSpec& basis,
                                        double amp_ratio = std::numeric_limits<double>::quiet_NaN(),
                                        double radius = 0.2)
{
    const auto& cfg = basis.config();
    RemainderReport rep;
    rep.radius = radius;
    if (record.d_eps < radius) {
        rep.radius = record.d_eps;
        rep.shrunk = true;
    }
    if (!(rep.radius > 0.0)) {
        throw CutoffEscapesDomain("bubble_remainder: peak sits on the boundary");
    }
    const double amp_u = record.M1;
    const double amp_v = std::isfinite(amp_ratio) && amp_ratio > 0.0 ? record.M1 / amp_ratio : record.M2;
    const Vector& x = basis.nodes();
    const Vector us = to_physical(state.u, basis);
    const Vector vs = state.scalar ? Vector() : to_physical(state.v, basis);
    Vector ru(x.size());
    Vector rv(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double d = x[j] - record.x_max;
        const double phi = cutoff(d, rep.radius);
        const double b = bubble_U(d / record.lambda_eps, cfg.dim, cfg.s);
        ru[j] = phi * (us[j] - amp_u * b);
        if (!state.scalar) {
            rv[j] = phi * (vs[j] - amp_v * b);
        }
    }
    double num = hs_norm_squared(to_coefficients(ru, basis), basis, cfg.s);
    double den = hs_norm_squared(state.u, basis, cfg.s);
    if (!state.scalar) {
        num += hs_norm_squared(to_coefficients(rv, basis), basis, cfg.s);
        den += hs_norm_squared(state.v, basis, cfg.s);
    }
    rep.relative = den > 0.0 ? std::sqrt(num / den) : 0.0;
    return rep;
}

struct ProfileReport {
    ProfileFit fit;
    double amp_ratio = 0.0;        ///< a / b
    double target_ratio = 0.0;     ///< sqrt(p/q)
    double symmetry_defect = 0.0;  ///< max |u~(xi) - u~(-xi)| on the window
    double window = 0.0;           ///< half-width in xi
};

/// Blow-up rescaling u~(xi) = lambda^{(N-2s)/2} u(x_max + lambda xi) on
/// |xi| <= d_eps / (2 lambda), fitted by a shared bubble profile.
inline ProfileReport profile_convergence(const GroundState& state, const SweepRecord& record, const BasisSpec& basis,
                                         int samples = 401)
{
    const auto& cfg = basis.config();
    if (record.d_eps / record.lambda_eps < 4.0) {
        throw WindowTooSmall("profile_convergence: d_eps/lambda_eps = " + std::to_string(record.d_over_lambda)
                             + " < 4");
    }
    ProfileReport rep;
    rep.window = record.d_eps / (2.0 * record.lambda_eps);
    const double amp = std::pow(record.lambda_eps, (cfg.dim - 2.0 * cfg.s) / 2.0);
    std::vector<double> xi(static_cast<std::size_t>(samples));
    std::vector<double> us(xi.size());
    std::vector<double> vs(xi.size());
    for (int i = 0; i < samples; ++i) {
        const double t = -rep.window + 2.0 * rep.window * i / (samples - 1);
        const double xx = record.x_max + record.lambda_eps * t;
        xi[static_cast<std::size_t>(i)] = t;
        us[static_cast<std::size_t>(i)] = amp * evaluate(state.u, xx);
        vs[static_cast<std::size_t>(i)] = amp * (state.scalar ? evaluate(state.u, xx) : evaluate(state.v, xx));
    }
    for (int i = 0; i < samples; ++i) {
        const auto a = static_cast<std::size_t>(i);
        const auto b = static_cast<std::size_t>(samples - 1 - i);
        rep.symmetry_defect = std::max(rep.symmetry_defect, std::abs(us[a] - us[b]));
    }
    rep.fit = fit_profile(xi, us, vs, cfg.dim, cfg.s);
    rep.amp_ratio = rep.fit.a / rep.fit.b;
    rep.target_ratio = state.scalar ? 1.0 : std::sqrt(state.p / state.q);
    return rep;
}

struct SweepResult {
    std::vector<SweepRecord> records;
    std::vector<GroundState> states;  ///< Lagrange-rescaled, in plan order
    int warnings = 0;                 ///< unconverged points
};

namespace detail {

inline GroundState solve_point(const BasisSpec& basis, const SweepPlan& plan, double p, const SolverOptions& opts)
{
    try {
        return minimize_system(basis, {p, plan.q}, plan.config.alpha, opts);
    }
    catch (const NotConverged& e) {
        return e.state();
    }
}

/// Fills every diagnostic of one sweep point from its constrained minimizer.
inline SweepRecord analyse_point(const GroundState& raw, GroundState& rescaled, const BasisSpec& basis,
                                 const ExtensionProfile& profile)
{
    rescaled = lagrange_rescale(raw, basis);
    SweepRecord r = diagnostics(rescaled, basis, &profile);
    r.mass_fraction = mass_fraction(rescaled, basis, r.x_max, 0.2);
    try {
        const ProfileReport pr = profile_convergence(rescaled, r, basis);
        r.amp_ratio_fit = pr.amp_ratio;
        r.fit_residual = pr.fit.residual;
        r.symmetry_defect = pr.symmetry_defect;
    }
    catch (const WindowTooSmall&) {
    }
    catch (const FitDegenerate&) {
    }
    const RemainderReport rem = bubble_remainder(rescaled, r, basis, r.amp_ratio_fit);
    r.remainder_rel = rem.relative;
    r.remainder_radius = rem.radius;
    r.remainder_radius_shrunk = rem.shrunk;
    return r;
}

} // namespace detail

/// Solves every point of the plan and computes its diagnostics. Solver
/// failures produce records flagged unconverged. With warm start each solve
/// is seeded by the previous minimizer and the points run in order;
/// otherwise up to plan.threads points run concurrently. Records are in plan
/// order either way.
inline SweepResult run_sweep(const SweepPlan& plan, const BasisSpec& basis)
{
    plan.validate();
    const std::size_t n = plan.p_values.size();
    const ExtensionProfile profile(plan.config.s);
    SweepResult out;
    out.records.resize(n);
    out.states.resize(n);

    if (plan.warm_start || plan.threads <= 1) {
        std::optional<GroundState> prev;
        for (std::size_t i = 0; i < n; ++i) {
            SolverOptions opts = plan.options;
            if (plan.warm_start && prev) {
                opts.warm_u = prev->u.coeffs();
                opts.warm_v = prev->v.coeffs();
            }
            GroundState raw = detail::solve_point(basis, plan, plan.p_values[i], opts);
            out.records[i] = detail::analyse_point(raw, out.states[i], basis, profile);
            prev = std::move(raw);
        }
    }
    else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < n; i = next++) {
                const GroundState raw = detail::solve_point(basis, plan, plan.p_values[i], plan.options);
                out.records[i] = detail::analyse_point(raw, out.states[i], basis, profile);
            }
        };
        std::vector<std::jthread> pool;
        const auto count = std::min<std::size_t>(static_cast<std::size_t>(plan.threads), n);
        for (std::size_t t = 0; t < count; ++t) {
            pool.emplace_back(worker);
        }
    }
    for (const auto& r : out.records) {
        out.warnings += r.converged ? 0 : 1;
    }
    return out;
}

struct IdentityReport {
    double p = 0.0;
    double q = 0.0;
    double alpha = 0.0;
    double s_sys = 0.0;
    double s_scal = 0.0;
    double c_pq = 0.0;
    double rel_dev = 0.0;     ///< |S_sys - C_pq S_scal| / S_sys
    double ratio_dev = 0.0;   ///< max |u/v / sqrt(p/q) - 1| where v > 1e-6 M2
    int iterations_sys = 0;
    int iterations_scal = 0;
};

/// Solves the scalar problem at r = p+q and the system independently and
/// compares them through the coupling constant.
inline IdentityReport identity_check(const BasisSpec& basis, double p, double q, double alpha,
                                     const SolverOptions& opts)
{
    const ExponentConfig exp{p, q};
    const GroundState sys = minimize_system(basis, exp, alpha, opts);
    const GroundState scal = minimize_scalar(basis, p + q, alpha, opts);
    IdentityReport rep;
    rep.p = p;
    rep.q = q;
    rep.alpha = alpha;
    rep.s_sys = sys.quotient;
    rep.s_scal = scal.quotient;
    rep.c_pq = cpq(p, q);
    rep.rel_dev = std::abs(sys.quotient - rep.c_pq * scal.quotient) / sys.quotient;
    rep.iterations_sys = sys.iterations;
    rep.iterations_scal = scal.iterations;
    const Vector us = to_physical(sys.u, basis);
    const Vector vs = to_physical(sys.v, basis);
    const double m2 = vs.maxCoeff();
    const double target = std::sqrt(p / q);
    for (Eigen::Index j = 0; j < us.size(); ++j) {
        if (vs[j] > 1e-6 * m2) {
            rep.ratio_dev = std::max(rep.ratio_dev, std::abs(us[j] / vs[j] / target - 1.0));
        }
    }
    return rep;
}

struct CriticalityReport {
    std::vector<double> gaps;      ///< |S_eps - C_{p_eps,q} S_hat|
    std::vector<double> rel_gaps;  ///< gaps / (C_{p_eps,q} S_hat)
    double final_rel_gap = 0.0;
    bool shrinking = false;        ///< gaps strictly decreasing over the last `tail` converged records
};

inline CriticalityReport criticality_limit_check(const std::vector<SweepRecord>& records, double s_hat,
                                                 std::size_t tail = 4)
{
    CriticalityReport rep;
    std::vector<double> converged_gaps;
    for (const auto& r : records) {
        const double target = cpq(r.p_eps, r.q) * s_hat;
        const double g = std::abs(r.quotient - target);
        rep.gaps.push_back(g);
        rep.rel_gaps.push_back(g / target);
        if (r.converged) {
            converged_gaps.push_back(g);
        }
    }
    if (!rep.rel_gaps.empty()) {
        rep.final_rel_gap = rep.rel_gaps.back();
    }
    if (converged_gaps.size() >= tail && tail >= 2) {
        rep.shrinking = true;
        for (std::size_t i = converged_gaps.size() - tail + 1; i < converged_gaps.size(); ++i) {
            rep.shrinking = rep.shrinking && converged_gaps[i] < converged_gaps[i - 1];
        }
    }
    return rep;
}

} // namespace henon

#endif // HENON_ASYMPTOTICS_HPP
