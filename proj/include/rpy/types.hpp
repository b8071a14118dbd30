#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace rpy {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};
struct SingularMatrix : Error {
    using Error::Error;
};
struct ValidationError : Error {
    using Error::Error;
};
struct IndexOutOfRange : Error {
    using Error::Error;
};
struct InvalidParameter : Error {
    using Error::Error;
};
struct BatchTooSmall : Error {
    using Error::Error;
};
struct UnequalCounts : Error {
    using Error::Error;
};
struct AssumptionViolated : Error {
    using Error::Error;
};
struct WitnessPreconditionViolated : Error {
    using Error::Error;
};
struct TapeReused : Error {
    using Error::Error;
};
struct ShapeMismatch : Error {
    using Error::Error;
};
struct EmptyBatch : Error {
    using Error::Error;
};
struct NoValidActions : Error {
    using Error::Error;
};
struct RepeatedItem : Error {
    using Error::Error;
};
struct EpisodeFinished : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};
struct DegenerateData : Error {
    using Error::Error;
};
struct NumericalFailure : Error {
    using Error::Error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ValidationError(what);
}

} // namespace rpy
