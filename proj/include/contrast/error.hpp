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

#ifndef CONTRAST_ERROR_HPP_
#define CONTRAST_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace contrast {

enum class ErrorCode {
  Io,
  FormatVersionMismatch,
  UnknownToken,
  InvalidToken,
  EmptyInput,
  SequenceTooLong,
  DivergedLoss,
  DegenerateInput,
  LengthMismatch,
  NoEvidence,
  EmptySet,
  DegenerateVariance,
  SamePair,
  EmptyCorpus,
  EmptyFoilSet,
  TooFewRows,
  SpecError,
  ParseError,
  ValidationError,
  InvalidArgument,
};

std::string_view error_code_name(ErrorCode code);

// Every library failure is reported through this type; the code lets callers
// (the CLI in particular) map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Process exit status for a failure: 2 I/O, 3 input validation,
// 4 empty/degenerate data, 1 internal.
int exit_status(ErrorCode code);

}  // namespace contrast

#endif  // CONTRAST_ERROR_HPP_
