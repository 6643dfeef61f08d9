// Copyright 2026 The povmkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef POVMKIT_ERROR_HPP
#define POVMKIT_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace povmkit {

enum class ErrorCode {
  InvalidArgument,
  NotHermitian,
  NotPSD,
  RowsNotOrthonormal,
  InvalidState,
  DimensionMismatch,
  FiducialSearchFailed,
  IncompletePovm,
  NotRankOne,
  ParseError,
  InvalidCircuit,
  ConstructionFailure,
  RankDeficientBranch,
  UnknownOutcome,
  OptimizerStalled,
  OutOfRegime,
  RankDeficientDesign,
  NotInformationallyComplete,
  NoMidCircuitMeasurement,
  SingularConfusion,
  InconsistentEnsemble,
  LabelMismatch,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::RowsNotOrthonormal: return "RowsNotOrthonormal";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::FiducialSearchFailed: return "FiducialSearchFailed";
    case ErrorCode::IncompletePovm: return "IncompletePovm";
    case ErrorCode::NotRankOne: return "NotRankOne";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidCircuit: return "InvalidCircuit";
    case ErrorCode::ConstructionFailure: return "ConstructionFailure";
    case ErrorCode::RankDeficientBranch: return "RankDeficientBranch";
    case ErrorCode::UnknownOutcome: return "UnknownOutcome";
    case ErrorCode::OptimizerStalled: return "OptimizerStalled";
    case ErrorCode::OutOfRegime: return "OutOfRegime";
    case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorCode::NotInformationallyComplete: return "NotInformationallyComplete";
    case ErrorCode::NoMidCircuitMeasurement: return "NoMidCircuitMeasurement";
    case ErrorCode::SingularConfusion: return "SingularConfusion";
    case ErrorCode::InconsistentEnsemble: return "InconsistentEnsemble";
    case ErrorCode::LabelMismatch: return "LabelMismatch";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace povmkit

#endif  // POVMKIT_ERROR_HPP
