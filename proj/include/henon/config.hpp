#ifndef HENON_CONFIG_HPP
#define HENON_CONFIG_HPP

#include <cstddef>
#include <string>

#include "henon/errors.hpp"

namespace henon {

/// Domain and operator parameters shared by every module.
struct ProblemConfig {
    int dim = 1;               ///< spatial dimension N
    double s = 0.3;            ///< fractional order
    double alpha = 0.0;        ///< Henon weight exponent
    std::size_t modes = 256;   ///< eigenbasis truncation M
    std::size_t grid = 1024;   ///< physical sample count G

    /// Critical Sobolev exponent 2N/(N-2s).
    double crit_exp() const { return 2.0 * dim / (dim - 2.0 * s); }

    void validate() const
    {
        if (!(s > 0.0 && s < 1.0)) {
            throw ConfigError("s must lie in (0,1), got " + std::to_string(s));
        }
        if (!(dim > 2.0 * s)) {
            throw ConfigError("dimension must exceed 2s");
        }
        if (!(alpha >= 0.0)) {
            throw ConfigError("alpha must be nonnegative");
        }
        if (modes < 8) {
            throw ConfigError("modes must be at least 8");
        }
        if (grid < 4 * modes) {
            throw ConfigError("grid must be at least 4*modes");
        }
        if (grid % 2 != 0) {
            throw ConfigError("grid must be even (split rule)");
        }
    }

    static ProblemConfig make(double s, double alpha, std::size_t modes, std::size_t grid = 0)
    {
        ProblemConfig c;
        c.s = s;
        c.alpha = alpha;
        c.modes = modes;
        c.grid = grid == 0 ? 4 * modes : grid;
        c.validate();
        return c;
    }
};

} // namespace henon

#endif // HENON_CONFIG_HPP
