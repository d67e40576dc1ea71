// Copyright 2026 The fadprof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "fadprof/embedding.hpp"
#include "fadprof/error.hpp"

namespace fadprof {

/// Gaussian fit N(mean, cov) to an embedding set; cov uses the N-1 divisor.
struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::size_t n = 0;

  Eigen::Index dim() const { return mean.size(); }
};

/// What the clamps and the optional ridge did during one distance evaluation.
struct FadDiagnostics {
  int clamped_cov_eigenvalues = 0;      ///< negative eigenvalues of cov(a) set to 0
  int clamped_product_eigenvalues = 0;  ///< negative eigenvalues of S*cov(b)*S set to 0
  double min_eigenvalue = 0.0;          ///< most negative value clamped (0 if none)
  double pre_clamp_value = 0.0;
  bool value_clamped = false;
  double ridge = 0.0;                   ///< diagonal loading added to both covariances

  bool any_event() const {
    return clamped_cov_eigenvalues > 0 || clamped_product_eigenvalues > 0 || value_clamped || ridge > 0.0;
  }
};

struct FadResult {
  double value = 0.0;
  double mean_term = 0.0;
  double trace_term = 0.0;
  std::string encoder;
  std::string dataset;
  std::string condition;
  FadDiagnostics diagnostics;
};

struct FadOptions {
  /// Adds 1e-6 * mean(diag) to both covariances.
  bool regularize = false;
};

inline constexpr double kRidgeScale = 1e-6;

inline GaussianStats fit_gaussian(const Eigen::MatrixXd& rows) {
  const auto n = rows.rows();
  if (n < 2) throw Error("insufficient samples: need at least 2 rows, got " + std::to_string(n));
  if (!rows.allFinite()) throw Error("non-finite embedding values");
  GaussianStats g;
  g.n = static_cast<std::size_t>(n);
  g.mean = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - g.mean.transpose();
  const Eigen::MatrixXd c = (centered.transpose() * centered) / static_cast<double>(n - 1);
  g.cov = 0.5 * (c + c.transpose());
  return g;
}

inline GaussianStats fit_gaussian(const EmbeddingSet& set) {
  if (set.count() < 2) {
    throw Error("insufficient samples: " + set.encoder + "/" + set.dataset + "/" + set.condition + " has " +
                std::to_string(set.count()) + " row(s)");
  }
  return fit_gaussian(Eigen::MatrixXd(set.matrix.cast<double>()));
}

namespace fad_detail {

inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigensolve(const Eigen::MatrixXd& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (m + m.transpose()));
  if (solver.info() != Eigen::Success) {
    const double norm = m.norm();
    throw Error(std::string("numerical failure: eigendecomposition of ") + what + " did not converge (dim " +
                std::to_string(m.rows()) + ", Frobenius norm " + std::to_string(norm) + ")");
  }
  return solver;
}

inline void clamp_nonnegative(Eigen::VectorXd& values, int& count, double& min_value) {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < 0.0) {
      ++count;
      min_value = std::min(min_value, values(i));
      values(i) = 0.0;
    }
  }
}

}  // namespace fad_detail

/// Frechet distance between two Gaussians:
///   |mu_a - mu_b|^2 + tr(cov_a) + tr(cov_b) - 2 tr((cov_a cov_b)^(1/2)).
/// The cross term is evaluated through the symmetric PSD matrix
/// S cov_b S with S = cov_a^(1/2), which has the same spectrum as cov_a cov_b.
inline FadResult frechet_distance(const GaussianStats& a, const GaussianStats& b, const FadOptions& options = {}) {
  if (a.dim() != b.dim()) {
    throw Error("dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  FadResult r;
  auto& diag = r.diagnostics;
  Eigen::MatrixXd cov_a = a.cov;
  Eigen::MatrixXd cov_b = b.cov;
  if (options.regularize && a.dim() > 0) {
    const double mean_diag = 0.5 * (cov_a.diagonal().mean() + cov_b.diagonal().mean());
    diag.ridge = kRidgeScale * mean_diag;
    cov_a.diagonal().array() += diag.ridge;
    cov_b.diagonal().array() += diag.ridge;
  }

  r.mean_term = (a.mean - b.mean).squaredNorm();

  const auto solver_a = fad_detail::eigensolve(cov_a, "covariance");
  Eigen::VectorXd ev_a = solver_a.eigenvalues();
  fad_detail::clamp_nonnegative(ev_a, diag.clamped_cov_eigenvalues, diag.min_eigenvalue);
  const Eigen::MatrixXd& v = solver_a.eigenvectors();
  const Eigen::MatrixXd sqrt_a = v * ev_a.cwiseSqrt().asDiagonal() * v.transpose();

  const Eigen::MatrixXd product = sqrt_a * cov_b * sqrt_a;
  const auto solver_p = fad_detail::eigensolve(product, "covariance product");
  Eigen::VectorXd ev_p = solver_p.eigenvalues();
  fad_detail::clamp_nonnegative(ev_p, diag.clamped_product_eigenvalues, diag.min_eigenvalue);

  const double cross = ev_p.cwiseSqrt().sum();
  r.trace_term = cov_a.trace() + cov_b.trace() - 2.0 * cross;
  diag.pre_clamp_value = r.mean_term + r.trace_term;
  r.value = diag.pre_clamp_value;
  if (r.value < 0.0) {
    diag.value_clamped = true;
    r.value = 0.0;
    r.trace_term = -r.mean_term;
  }
  return r;
}

/// FAD between a clean reference set and a perturbed set of the same encoder
/// and dataset.
inline FadResult fad_from_sets(const EmbeddingSet& reference, const EmbeddingSet& perturbed,
                               const FadOptions& options = {}) {
  if (reference.encoder != perturbed.encoder) {
    throw Error("encoder mismatch: '" + reference.encoder + "' vs '" + perturbed.encoder + "'");
  }
  if (reference.dataset != perturbed.dataset) {
    throw Error("dataset mismatch: '" + reference.dataset + "' vs '" + perturbed.dataset + "'");
  }
  FadResult r = frechet_distance(fit_gaussian(reference), fit_gaussian(perturbed), options);
  r.encoder = perturbed.encoder;
  r.dataset = perturbed.dataset;
  r.condition = perturbed.condition;
  return r;
}

}  // namespace fadprof
