#ifndef GRIDGE_ERRORS_HPP
#define GRIDGE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gridge {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite entries, out-of-domain scalars, invalid tolerance settings.
class InvalidInputError : public Error {
public:
    using Error::Error;
};

/// Incompatible matrix dimensions.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A matrix that must have full rank does not.
class RankDeficiencyError : public Error {
public:
    using Error::Error;
};

/// A matrix that must be symmetric is asymmetric beyond tolerance.
class SymmetryError : public Error {
public:
    using Error::Error;
};

/// A penalty matrix failed validation (not psd, wrong shape).
class PenaltyError : public Error {
public:
    using Error::Error;
};

/// A linear system that should be solvable is numerically singular.
class SingularSystemError : public Error {
public:
    using Error::Error;
};

/// An operation needs data (e.g. a response vector) that was not supplied.
class MissingDataError : public Error {
public:
    using Error::Error;
};

/// Model parameters outside their admissible domain.
class ModelDomainError : public Error {
public:
    using Error::Error;
};

/// A one-dimensional parameter search failed to converge.
class EstimationError : public Error {
public:
    using Error::Error;
};

/// Independent equivalence checkers disagreed beyond the hysteresis band.
class InconsistencyError : public Error {
public:
    using Error::Error;
};

/// Malformed input file; message carries the offending line number.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Invalid or incomplete simulation configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace gridge

#endif
