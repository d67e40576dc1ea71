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

// Shared helpers for the test suites.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "fadprof/embedding.hpp"
#include "fadprof/random.hpp"

namespace fadprof::testing {

/// Rows drawn from N(mean, diag(var)).
inline Eigen::MatrixXd diagonal_gaussian(const Eigen::VectorXd& mean, const Eigen::VectorXd& var, int n,
                                         std::uint64_t key) {
  KeyedStream rng(key);
  Eigen::MatrixXd rows(n, mean.size());
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < mean.size(); ++j) rows(i, j) = mean(j) + std::sqrt(var(j)) * rng.normal();
  }
  return rows;
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t key) {
  KeyedStream rng(key);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

inline EmbeddingSet make_set(const Eigen::MatrixXd& rows, std::string encoder = "enc", std::string dataset = "ds",
                             std::string condition = "clean") {
  EmbeddingSet s;
  s.encoder = std::move(encoder);
  s.dataset = std::move(dataset);
  s.condition = std::move(condition);
  s.matrix = rows.cast<float>();
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    char id[24];
    std::snprintf(id, sizeof id, "c%05ld", static_cast<long>(i));
    s.ids.push_back(id);
  }
  return s;
}

}  // namespace fadprof::testing
