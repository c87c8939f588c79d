#ifndef HENON_QUADRATURE_HPP
#define HENON_QUADRATURE_HPP

#include <cmath>
#include <numbers>
#include <vector>

#include "henon/errors.hpp"

namespace henon {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [-1, 1], nodes ascending.
///
/// Newton iteration on the three-term recurrence, started from the
/// Tricomi asymptotic guess. Accurate to a few ulps for n in the thousands.
inline QuadratureRule gauss_legendre(std::size_t n)
{
    if (n == 0) {
        throw ConfigError("gauss_legendre: need at least one node");
    }
    QuadratureRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    const double dn = static_cast<double>(n);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (dn + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double dk = static_cast<double>(k);
                const double p2 = ((2.0 * dk - 1.0) * x * p1 - (dk - 1.0) * p0) / dk;
                p0 = p1;
                p1 = p2;
            }
            dp = dn * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        // recompute the derivative at the converged node
        double p0 = 1.0;
        double p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            const double dk = static_cast<double>(k);
            const double p2 = ((2.0 * dk - 1.0) * x * p1 - (dk - 1.0) * p0) / dk;
            p0 = p1;
            p1 = p2;
        }
        dp = dn * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[n - 1 - i] = x;
        rule.weights[n - 1 - i] = w;
        rule.nodes[i] = -x;
        rule.weights[i] = w;
    }
    if (n % 2 == 1) {
        rule.nodes[n / 2] = 0.0;
    }
    return rule;
}

/// Composite Gauss rule on (-1, 1) split at the origin: each half is cut into
/// `panels_per_side` equal panels carrying `nodes_per_panel` Gauss nodes.
/// The origin is never a node, so |x|^alpha is smooth on every panel.
inline QuadratureRule split_gauss_rule(std::size_t panels_per_side, std::size_t nodes_per_panel)
{
    if (panels_per_side == 0 || nodes_per_panel == 0) {
        throw ConfigError("split_gauss_rule: empty rule");
    }
    const QuadratureRule ref = gauss_legendre(nodes_per_panel);
    QuadratureRule rule;
    rule.nodes.reserve(2 * panels_per_side * nodes_per_panel);
    rule.weights.reserve(2 * panels_per_side * nodes_per_panel);
    const double h = 1.0 / static_cast<double>(panels_per_side);
    for (std::size_t side = 0; side < 2; ++side) {
        const double lo = side == 0 ? -1.0 : 0.0;
        for (std::size_t p = 0; p < panels_per_side; ++p) {
            const double a = lo + h * static_cast<double>(p);
            for (std::size_t j = 0; j < nodes_per_panel; ++j) {
                rule.nodes.push_back(a + 0.5 * h * (ref.nodes[j] + 1.0));
                rule.weights.push_back(0.5 * h * ref.weights[j]);
            }
        }
    }
    return rule;
}

} // namespace henon

#endif // HENON_QUADRATURE_HPP
