#ifndef HENON_BUBBLES_HPP
#define HENON_BUBBLES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "henon/energy.hpp"
#include "henon/errors.hpp"
#include "henon/spectral.hpp"

namespace henon {

/// U(x) = (1 + |x|^2)^{(2s-N)/2}.
inline double bubble_U(double x, int dim, double s)
{
    return std::pow(1.0 + x * x, (2.0 * s - dim) / 2.0);
}

/// U_eps(x) = (eps + |x|^2)^{(2s-N)/2} = eps^{(2s-N)/2} U(x / sqrt(eps)).
inline double bubble_Ueps(double x, double eps, int dim, double s)
{
    return std::pow(eps + x * x, (2.0 * s - dim) / 2.0);
}

/// C (t / (t^2 + |x-x0|^2))^{(N-2s)/2}; equals U at t = 1, x0 = 0, C = 1.
inline double critical_bubble(double x, double t, double x0, double amplitude, int dim, double s)
{
    if (!(t > 0.0)) {
        throw ConfigError("critical_bubble: scale must be positive");
    }
    const double d = x - x0;
    return amplitude * std::pow(t / (t * t + d * d), (dim - 2.0 * s) / 2.0);
}

/// Radial cutoff: 1 for r <= R/2, 0 for r >= R, quintic smoothstep in
/// between (C^2, |gradient| <= 15/(4R)).
inline double cutoff(double r, double radius)
{
    const double a = std::abs(r);
    if (a <= 0.5 * radius) {
        return 1.0;
    }
    if (a >= radius) {
        return 0.0;
    }
    const double t = (a - 0.5 * radius) / (0.5 * radius);
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

/// Derivative of `cutoff` with respect to r >= 0.
inline double cutoff_derivative(double r, double radius)
{
    const double a = std::abs(r);
    if (a <= 0.5 * radius || a >= radius) {
        return 0.0;
    }
    const double t = (a - 0.5 * radius) / (0.5 * radius);
    const double d = -30.0 * t * t * (1.0 - t) * (1.0 - t) / (0.5 * radius);
    return r < 0.0 ? -d : d;
}

struct BubbleSpec {
    double eps = 1e-3;
    double center = 0.0;
    double radius = 0.0;  ///< cutoff radius
    double s = 0.3;
    int dim = 1;

    /// Concentrating family near the boundary: center 1 - 1/|ln eps|,
    /// cutoff radius 1/|ln eps|.
    static BubbleSpec near_boundary(double eps, double s, int dim = 1)
    {
        if (!(eps > 0.0 && eps < 1.0)) {
            throw ConfigError("bubble eps must lie in (0,1)");
        }
        BubbleSpec b;
        b.eps = eps;
        b.s = s;
        b.dim = dim;
        b.radius = 1.0 / std::abs(std::log(eps));
        b.center = 1.0 - b.radius;
        return b;
    }

    double operator()(double x) const { return cutoff(x - center, radius) * bubble_Ueps(x - center, eps, dim, s); }
};

struct TruncatedBubble {
    SpectralField field;
    double tail_fraction = 0.0;    ///< coefficient energy in the top 10% of modes
    double outside_max = 0.0;      ///< largest |sample| outside the cutoff support before projection
};

/// Spectral projection of cutoff(x - x0) U_eps(x - x0).
inline TruncatedBubble truncated_bubble(const BubbleSpec& spec, const BasisSpec& basis)
{
    if (std::abs(spec.center) + spec.radius > 1.0 + 1e-12) {
        throw CutoffEscapesDomain("truncated_bubble: cutoff support leaves the ball");
    }
    const Vector& x = basis.nodes();
    Vector f(x.size());
    double outside = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        f[j] = spec(x[j]);
        if (std::abs(x[j] - spec.center) >= spec.radius) {
            outside = std::max(outside, std::abs(f[j]));
        }
    }
    TruncatedBubble tb;
    tb.field = to_coefficients(f, basis);
    tb.tail_fraction = tail_energy_fraction(tb.field);
    tb.outside_max = outside;
    return tb;
}

/// Critical scalar quotient (r = 2*_s, alpha = 0) of the truncated bubble.
inline double truncated_bubble_quotient(const BubbleSpec& spec, const BasisSpec& basis)
{
    const TruncatedBubble tb = truncated_bubble(spec, basis);
    return quotient_scalar(tb.field, basis, basis.config().crit_exp(), 0.0, basis.config().s);
}

struct SobolevEstimate {
    double value = 0.0;              ///< extrapolated limit
    std::vector<double> eps;
    std::vector<double> quotients;
    std::vector<double> scale_ratio; ///< cutoff radius / sqrt(eps)
    double fit_residual = 0.0;       ///< rms misfit relative to the limit
    double max_tail_fraction = 0.0;
};

/// Extrapolated limit of the truncated-bubble critical quotient.
///
/// eps runs over eps0, eps0/2, ..., and the quotients are fitted by
/// S + sum_{j=1..terms} a_j R^{-j(N-2s)}, R = cutoff radius / sqrt(eps). The
/// leading corrections come from the slowly decaying bubble tails cut off at
/// distance R in bubble units, so the expansion is in powers of R^{-(N-2s)}.
inline SobolevEstimate sobolev_constant_estimate(const BasisSpec& basis, double eps0 = 2e-3, int count = 7,
                                                 int terms = 4, double monotone_tol = 1e-9)
{
    const auto& cfg = basis.config();
    if (terms < 1 || count < terms + 3) {
        throw ConfigError("sobolev_constant_estimate needs at least terms + 3 eps values");
    }
    SobolevEstimate est;
    const double decay = cfg.dim - 2.0 * cfg.s;
    double eps = eps0;
    for (int i = 0; i < count; ++i, eps *= 0.5) {
        const BubbleSpec spec = BubbleSpec::near_boundary(eps, cfg.s, cfg.dim);
        const TruncatedBubble tb = truncated_bubble(spec, basis);
        est.eps.push_back(eps);
        est.quotients.push_back(quotient_scalar(tb.field, basis, cfg.crit_exp(), 0.0, cfg.s));
        est.scale_ratio.push_back(spec.radius / std::sqrt(eps));
        est.max_tail_fraction = std::max(est.max_tail_fraction, tb.tail_fraction);
    }
    for (int i = 1; i < count; ++i) {
        if (est.quotients[i] > est.quotients[i - 1] * (1.0 + monotone_tol)) {
            throw ExtrapolationUnstable("truncated-bubble quotients are not monotone in eps");
        }
    }
    Eigen::MatrixXd a(count, terms + 1);
    Vector rhs(count);
    for (int i = 0; i < count; ++i) {
        const double t = std::pow(est.scale_ratio[i], -decay);
        a(i, 0) = 1.0;
        for (int j = 1; j <= terms; ++j) {
            a(i, j) = a(i, j - 1) * t;
        }
        rhs[i] = est.quotients[i];
    }
    const Vector sol = a.colPivHouseholderQr().solve(rhs);
    est.value = sol[0];
    est.fit_residual = (a * sol - rhs).norm() / std::sqrt(static_cast<double>(count)) / std::abs(sol[0]);
    if (!(est.value > 0.0) || est.value > est.quotients.back()) {
        throw ExtrapolationUnstable("extrapolated Sobolev constant is inconsistent with the data");
    }
    return est;
}

/// Kelvin transform about `pole`:
/// f~(x) = |x-p|^{2s-N} f((x-p)/|x-p|^2 + p).
inline double kelvin(const std::function<double(double)>& f, double x, double pole, int dim, double s)
{
    const double d = x - pole;
    if (d == 0.0) {
        throw PoleSingularity("kelvin: evaluation point coincides with the pole");
    }
    return std::pow(std::abs(d), 2.0 * s - dim) * f(d / (d * d) + pole);
}

/// Kelvin transform as a new callable.
inline std::function<double(double)> kelvin(std::function<double(double)> f, double pole, int dim, double s)
{
    return [f = std::move(f), pole, dim, s](double x) { return kelvin(f, x, pole, dim, s); };
}

/// Pointwise evaluation of a spectral field anywhere in [-1, 1].
inline double evaluate(const SpectralField& field, double x)
{
    double acc = 0.0;
    const auto& c = field.coeffs();
    for (Eigen::Index k = 0; k < c.size(); ++k) {
        acc += c[k] * BasisSpec::eigenfunction(static_cast<int>(k + 1), x);
    }
    return acc;
}

struct ProfileFit {
    double a = 0.0;          ///< amplitude of the u profile
    double b = 0.0;          ///< amplitude of the v profile
    double scale = 1.0;      ///< fitted t'
    double center = 0.0;
    double residual = 0.0;   ///< relative L2 misfit
};

namespace detail {

/// Nelder-Mead on two parameters; enough for the (log t, center) search.
template <class F>
std::array<double, 2> nelder_mead_2d(F&& f, std::array<double, 2> x0, std::array<double, 2> step, int iters = 400,
                                     double tol = 1e-14)
{
    std::array<std::array<double, 2>, 3> pts{x0, {x0[0] + step[0], x0[1]}, {x0[0], x0[1] + step[1]}};
    std::array<double, 3> val{f(pts[0]), f(pts[1]), f(pts[2])};
    for (int it = 0; it < iters; ++it) {
        std::array<int, 3> idx{0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int i, int j) { return val[i] < val[j]; });
        const auto best = pts[idx[0]];
        const auto mid = pts[idx[1]];
        const auto worst = pts[idx[2]];
        const double fb = val[idx[0]];
        const double fm = val[idx[1]];
        const double fw = val[idx[2]];
        if (std::abs(fw - fb) <= tol * (std::abs(fb) + tol)) {
            break;
        }
        const std::array<double, 2> cen{0.5 * (best[0] + mid[0]), 0.5 * (best[1] + mid[1])};
        auto along = [&](double t) {
            return std::array<double, 2>{cen[0] + t * (worst[0] - cen[0]), cen[1] + t * (worst[1] - cen[1])};
        };
        const auto xr = along(-1.0);
        const double fr = f(xr);
        std::array<double, 2> replacement = xr;
        double freplacement = fr;
        if (fr < fb) {
            const auto xe = along(-2.0);
            const double fe = f(xe);
            if (fe < fr) {
                replacement = xe;
                freplacement = fe;
            }
        }
        else if (fr >= fm) {
            const auto xc = along(0.5);
            const double fc = f(xc);
            if (fc < fw) {
                replacement = xc;
                freplacement = fc;
            }
            else {
                // shrink toward the best vertex
                for (int k : {idx[1], idx[2]}) {
                    pts[k] = {best[0] + 0.5 * (pts[k][0] - best[0]), best[1] + 0.5 * (pts[k][1] - best[1])};
                    val[k] = f(pts[k]);
                }
                continue;
            }
        }
        pts[idx[2]] = replacement;
        val[idx[2]] = freplacement;
    }
    const int i = static_cast<int>(std::min_element(val.begin(), val.end()) - val.begin());
    return pts[i];
}

} // namespace detail

/// Least-squares fit of (a U((xi-c)/t), b U((xi-c)/t)) with shared scale and
/// center to samples of a rescaled solution pair.
inline ProfileFit fit_profile(const std::vector<double>& xi, const std::vector<double>& us,
                              const std::vector<double>& vs, int dim, double s)
{
    if (xi.size() != us.size() || xi.size() != vs.size()) {
        throw DimensionMismatch("fit_profile: sample vectors differ in length");
    }
    const double umax = *std::max_element(us.begin(), us.end());
    const auto above = std::count_if(us.begin(), us.end(), [&](double u) { return u >= 0.5 * umax; });
    if (above < 8) {
        throw FitDegenerate("fit_profile: fewer than 8 samples above half maximum");
    }
    const double norm2 = [&] {
        double acc = 0.0;
        for (std::size_t i = 0; i < xi.size(); ++i) {
            acc += us[i] * us[i] + vs[i] * vs[i];
        }
        return acc;
    }();

    struct Linear {
        double a;
        double b;
        double misfit;
    };
    auto solve_linear = [&](double t, double c) {
        double gg = 0.0;
        double gu = 0.0;
        double gv = 0.0;
        for (std::size_t i = 0; i < xi.size(); ++i) {
            const double g = bubble_U((xi[i] - c) / t, dim, s);
            gg += g * g;
            gu += g * us[i];
            gv += g * vs[i];
        }
        const double a = gu / gg;
        const double b = gv / gg;
        double mis = 0.0;
        for (std::size_t i = 0; i < xi.size(); ++i) {
            const double g = bubble_U((xi[i] - c) / t, dim, s);
            mis += (us[i] - a * g) * (us[i] - a * g) + (vs[i] - b * g) * (vs[i] - b * g);
        }
        return Linear{a, b, mis};
    };
    const auto it = std::max_element(us.begin(), us.end());
    const double c0 = xi[static_cast<std::size_t>(it - us.begin())];
    auto objective = [&](const std::array<double, 2>& x) { return solve_linear(std::exp(x[0]), x[1]).misfit; };
    // coarse scan in log t seeds the simplex
    double best_lt = 0.0;
    double best_val = std::numeric_limits<double>::infinity();
    for (double lt = -6.0; lt <= 6.0; lt += 0.25) {
        const double v = objective({lt, c0});
        if (v < best_val) {
            best_val = v;
            best_lt = lt;
        }
    }
    const double span = xi.back() - xi.front();
    const auto opt = detail::nelder_mead_2d(objective, {best_lt, c0}, {0.1, 1e-2 * span}, 2000, 1e-16);
    const Linear lin = solve_linear(std::exp(opt[0]), opt[1]);
    ProfileFit fit;
    fit.a = lin.a;
    fit.b = lin.b;
    fit.scale = std::exp(opt[0]);
    fit.center = opt[1];
    fit.residual = norm2 > 0.0 ? std::sqrt(lin.misfit / norm2) : 0.0;
    return fit;
}

} // namespace henon

#endif // HENON_BUBBLES_HPP
