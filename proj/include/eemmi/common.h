// eemmi/common.h

// Copyright 2026  eemmi contributors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef EEMMI_COMMON_H_
#define EEMMI_COMMON_H_

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace eemmi {

inline constexpr const char *kVersion = "0.1.0";

enum class ErrorKind {
  kValidation,
  kOutOfVocabulary,
  kParse,
  kInfeasible,
  kEstimation,
  kGuard,
  kShapeMismatch,
  kEmptyResult,
  kIo,
};

/// Single exception type for the library; `kind()` tells callers which
/// contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixD = Matrix<double>;
using VectorD = Vector<double>;

/// T x L matrix of per-frame log posteriors; row t-1 holds frame t.
template <typename Scalar>
using LogPosteriorGrid = Matrix<Scalar>;

template <typename Scalar>
constexpr Scalar LogZero() {
  return -std::numeric_limits<Scalar>::infinity();
}

template <typename Scalar>
inline Scalar LogAdd(Scalar a, Scalar b) {
  if (a < b) std::swap(a, b);
  if (b == LogZero<Scalar>()) return a;
  return a + std::log1p(std::exp(b - a));
}

/// log(sum(exp(x))) over any Eigen expression; -inf for all -inf input.
template <typename Derived>
typename Derived::Scalar LogSumExp(const Eigen::DenseBase<Derived> &x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0) return LogZero<Scalar>();
  Scalar m = x.maxCoeff();
  if (m == LogZero<Scalar>()) return m;
  return m + std::log((x.derived().array() - m).exp().sum());
}

/// log(sigmoid(a)), stable for large |a|.
template <typename Scalar>
inline Scalar LogSigmoid(Scalar a) {
  if (a >= 0) return -std::log1p(std::exp(-a));
  return a - std::log1p(std::exp(a));
}

template <typename Scalar>
inline Scalar Sigmoid(Scalar a) {
  if (a >= 0) return 1 / (1 + std::exp(-a));
  Scalar e = std::exp(a);
  return e / (1 + e);
}

/// Row-wise log-softmax.
template <typename Scalar>
Matrix<Scalar> LogSoftmaxRows(const Matrix<Scalar> &z) {
  Matrix<Scalar> out(z.rows(), z.cols());
  for (Eigen::Index t = 0; t < z.rows(); ++t)
    out.row(t) = z.row(t).array() - LogSumExp(z.row(t));
  return out;
}

}  // namespace eemmi

#endif  // EEMMI_COMMON_H_
