#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace srreg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// ‖Xβ − b‖ = 0: the square-root loss is not differentiable and the
// normalized residual metrics are undefined.
class OverfitError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf where finite values are required.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& x, const char* what) {
  if (!x.allFinite()) throw NonFiniteError(std::string(what) + " contains NaN or Inf");
}

/// A regression instance: design matrix X (m×n) and response b (length m).
struct ProblemData {
  Mat X;
  Vec b;
  std::vector<std::string> feature_names;

  ProblemData() = default;
  ProblemData(Mat X_, Vec b_) : X(std::move(X_)), b(std::move(b_)) { validate(); }

  Eigen::Index m() const { return X.rows(); }
  Eigen::Index n() const { return X.cols(); }

  void validate() const {
    if (X.rows() < 1 || X.cols() < 1) throw DimensionError("design matrix must be at least 1x1");
    if (b.size() != X.rows()) {
      throw DimensionError("response length " + std::to_string(b.size()) +
                           " does not match " + std::to_string(X.rows()) + " rows");
    }
    require_finite(X, "design matrix");
    require_finite(b, "response");
  }
};

}  // namespace srreg
