#ifndef INFSA_ERRORS_HPP_
#define INFSA_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace infsa {

/// Base class for all library errors. CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand dimensions do not match the operation's contract.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Pivot collapsed below threshold during factorization.
class SingularMatrixError : public Error {
public:
    using Error::Error;
};

/// Operator annihilated the iterate (A v = 0); caller decides fallback.
class DegenerateOperatorError : public Error {
public:
    using Error::Error;
};

/// Instance too large for an enumeration-based routine.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Geometric series does not converge for the requested decay factor.
class DivergentSeriesError : public Error {
public:
    using Error::Error;
};

/// Chain construction produced a negative absorption probability.
class InvalidChainError : public Error {
public:
    InvalidChainError(const std::string &what, std::size_t row, double row_sum)
        : Error(what), row_(row), row_sum_(row_sum) {}

    std::size_t row() const { return row_; }
    double rowSum() const { return row_sum_; }

private:
    std::size_t row_;
    double row_sum_;
};

/// A random walk exceeded the hard per-walk step cap.
class WalkCapError : public Error {
public:
    using Error::Error;
};

/// An aggregate operation received an empty argument list.
class ArityError : public Error {
public:
    using Error::Error;
};

/// Head/dimension configuration is inconsistent.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Tensor file is malformed; reports the byte offset of the problem.
class FormatError : public Error {
public:
    FormatError(const std::string &what, std::size_t byte_offset)
        : Error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
          byte_offset_(byte_offset) {}

    std::size_t byteOffset() const { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

/// Objective returned a non-finite value during gradient checking.
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// Rank correlation is undefined (constant input vector).
class UndefinedCorrelationError : public Error {
public:
    using Error::Error;
};

} // namespace infsa

#endif // INFSA_ERRORS_HPP_
