//
// Copyright 2026 The FairAudit Authors
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
//

#ifndef FAIRAUDIT_ERROR_H_
#define FAIRAUDIT_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace fairaudit {

enum class ErrorKind {
  kValidation,
  kConfig,
  kShape,
  kDomain,
  kParse,
  kSchema,
  kInfeasible,
  kRestriction,
  kIo,
  kUndefinedMetric,
  kNumerical,
  kEstimation,
  kResolution,
  kIntegrity,
  kCompatibility,
};

inline std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kSchema: return "schema";
    case ErrorKind::kInfeasible: return "infeasible";
    case ErrorKind::kRestriction: return "restriction";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kUndefinedMetric: return "undefined_metric";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kEstimation: return "estimation";
    case ErrorKind::kResolution: return "resolution";
    case ErrorKind::kIntegrity: return "integrity";
    case ErrorKind::kCompatibility: return "compatibility";
  }
  return "unknown";
}

// Every failure raised by the library carries a kind; the CLI maps kinds to
// exit codes through ExitCodeFor.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// 1 = validation/config, 2 = runtime/numerical, 3 = integrity/compatibility.
inline int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation:
    case ErrorKind::kConfig:
    case ErrorKind::kShape:
    case ErrorKind::kDomain:
    case ErrorKind::kParse:
    case ErrorKind::kSchema:
    case ErrorKind::kInfeasible:
    case ErrorKind::kRestriction:
    case ErrorKind::kIo:
      return 1;
    case ErrorKind::kUndefinedMetric:
    case ErrorKind::kNumerical:
    case ErrorKind::kEstimation:
    case ErrorKind::kResolution:
      return 2;
    case ErrorKind::kIntegrity:
    case ErrorKind::kCompatibility:
      return 3;
  }
  return 2;
}

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void Require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) Fail(kind, message);
}

}  // namespace fairaudit

#endif  // FAIRAUDIT_ERROR_H_
