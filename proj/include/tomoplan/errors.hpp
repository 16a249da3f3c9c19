#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tomoplan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input: bad files, invalid POVMs, designs off the simplex.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The operation needs a different setup shape (e.g. minimal tomography).
class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Base for failures of the numerics on otherwise valid input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A closed-form design needs the square root of a negative block sum.
class DegenerateDesignError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The state average of 1/p diverges because p turns negative inside the ball.
class DivergentAverageError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd best, double residual, int iterations)
      : NumericalError(what), best_(std::move(best)), residual_(residual), iterations_(iterations) {}

  const Eigen::VectorXd& best_iterate() const { return best_; }
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  Eigen::VectorXd best_;
  double residual_;
  int iterations_;
};

}  // namespace tomoplan
