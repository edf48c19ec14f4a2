/* Copyright 2026 The knnmt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <Eigen/Dense>

namespace knnmt {

/// Singular (or too ill-conditioned to trust) when the reciprocal condition
/// estimate or the smallest-to-largest pivot ratio falls below 1e-12.
inline bool ldlt_singular(const Eigen::LDLT<Eigen::MatrixXd>& ldlt, const Eigen::MatrixXd& gram) {
  if (ldlt.info() != Eigen::Success || gram.size() == 0) return true;
  if (gram.diagonal().cwiseAbs().maxCoeff() == 0.0 || !ldlt.isPositive()) return true;
  Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
  return ldlt.rcond() < 1e-12 || pivots.minCoeff() < 1e-12 * pivots.maxCoeff();
}

}  // namespace knnmt
