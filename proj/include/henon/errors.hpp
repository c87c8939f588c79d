#ifndef HENON_ERRORS_HPP
#define HENON_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace henon {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class ZeroDenominator : public Error {
public:
    using Error::Error;
};

class NonIntegrablePower : public Error {
public:
    using Error::Error;
};

class CriticalExponent : public Error {
public:
    using Error::Error;
};

class CutoffEscapesDomain : public Error {
public:
    using Error::Error;
};

class ExtrapolationUnstable : public Error {
public:
    using Error::Error;
};

class PoleSingularity : public Error {
public:
    using Error::Error;
};

class QuadratureFailure : public Error {
public:
    using Error::Error;
};

class FitDegenerate : public Error {
public:
    using Error::Error;
};

class WindowTooSmall : public Error {
public:
    using Error::Error;
};

} // namespace henon

#endif // HENON_ERRORS_HPP
