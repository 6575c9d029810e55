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

#include "contrast/error.hpp"

namespace contrast {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "IoError";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::UnknownToken: return "UnknownToken";
    case ErrorCode::InvalidToken: return "InvalidToken";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::SequenceTooLong: return "SequenceTooLong";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NoEvidence: return "NoEvidence";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::SamePair: return "SamePair";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyFoilSet: return "EmptyFoilSet";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::SpecError: return "SpecError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io:
    case ErrorCode::FormatVersionMismatch:
      return 2;
    case ErrorCode::UnknownToken:
    case ErrorCode::InvalidToken:
    case ErrorCode::SequenceTooLong:
    case ErrorCode::LengthMismatch:
    case ErrorCode::SamePair:
    case ErrorCode::SpecError:
    case ErrorCode::ParseError:
    case ErrorCode::ValidationError:
    case ErrorCode::InvalidArgument:
      return 3;
    case ErrorCode::EmptyInput:
    case ErrorCode::DegenerateInput:
    case ErrorCode::NoEvidence:
    case ErrorCode::EmptySet:
    case ErrorCode::DegenerateVariance:
    case ErrorCode::EmptyCorpus:
    case ErrorCode::EmptyFoilSet:
    case ErrorCode::TooFewRows:
      return 4;
    case ErrorCode::DivergedLoss:
      return 1;
  }
  return 1;
}

}  // namespace contrast
