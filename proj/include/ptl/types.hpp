#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ptl {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using IndexVector = Eigen::Matrix<Eigen::Index, Eigen::Dynamic, 1>;

// Error taxonomy. Everything derives from std::runtime_error or
// std::invalid_argument so callers can catch broadly.

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InvalidConfiguration : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a least-squares design is too close to rank-deficient to solve.
class SingularDesign : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RankDeficient : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Condition-number ceiling shared by every dense normal-equation solve.
inline constexpr double kMaxCondition = 1e12;

} // namespace ptl
