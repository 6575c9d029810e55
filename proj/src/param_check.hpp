/*
 * Copyright 2026 The contrast Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CONTRAST_SRC_PARAM_CHECK_HPP_
#define CONTRAST_SRC_PARAM_CHECK_HPP_

#include <string>
#include <utility>
#include <vector>

#include "contrast/error.hpp"
#include "contrast/matrix.hpp"

namespace contrast::internal {

// Throws ValidationError unless `actual` has the same tensor list and shapes
// as `reference`.
template <class P>
void check_params_match(const P& reference, const P& actual) {
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> expected;
  visit_params(reference, "", [&](const std::string& n, const Matrix& m) {
    expected.push_back({n, {m.rows(), m.cols()}});
  });
  std::size_t i = 0;
  visit_params(actual, "", [&](const std::string& n, const Matrix& m) {
    if (i >= expected.size()) {
      throw Error(ErrorCode::ValidationError, "unexpected parameter " + n);
    }
    const auto [rows, cols] = expected[i].second;
    if (m.rows() != rows || m.cols() != cols) {
      throw Error(ErrorCode::ValidationError,
                  "parameter " + n + " has shape " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                      std::to_string(cols));
    }
    ++i;
  });
  if (i != expected.size()) {
    throw Error(ErrorCode::ValidationError, "parameter count does not match config");
  }
}

}  // namespace contrast::internal

#endif  // CONTRAST_SRC_PARAM_CHECK_HPP_
