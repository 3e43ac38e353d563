#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace exlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Error hierarchy
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// Precondition of an operation violated by the caller.
class PreconditionError : public Error {
public:
    using Error::Error;
};

// A function evaluated to NaN or infinity.
class EvaluationError : public Error {
public:
    using Error::Error;
};

class ReducibleError : public Error {
public:
    using Error::Error;
};

class NotPsdError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, double time)
        : Error(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

// Parameters outside the regime where a closed form or theorem applies.
class InapplicableError : public Error {
public:
    InapplicableError(const std::string& condition, const std::string& what)
        : Error(what), condition_(condition) {}
    const std::string& condition() const { return condition_; }

private:
    std::string condition_;
};

class InfeasibleError : public Error {
public:
    using Error::Error;
};

class UnboundedError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& what)
        : Error(what), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

}  // namespace exlab
