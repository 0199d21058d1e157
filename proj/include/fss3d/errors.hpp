// Error types shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace fss {

enum class ErrorCode {
  IndexOutOfRange,
  DegenerateGeometry,
  EmptyMask,
  EmptyRegion,
  EmptyCarve,
  RankDeficient,
  NoRelevantViews,
  OpenMesh,
  ZeroBaseline,
  InvalidConfig,
  IoError,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::IndexOutOfRange:    return "IndexOutOfRange";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::EmptyMask:          return "EmptyMask";
    case ErrorCode::EmptyRegion:        return "EmptyRegion";
    case ErrorCode::EmptyCarve:         return "EmptyCarve";
    case ErrorCode::RankDeficient:      return "RankDeficient";
    case ErrorCode::NoRelevantViews:    return "NoRelevantViews";
    case ErrorCode::OpenMesh:           return "OpenMesh";
    case ErrorCode::ZeroBaseline:       return "ZeroBaseline";
    case ErrorCode::InvalidConfig:      return "InvalidConfig";
    case ErrorCode::IoError:            return "IoError";
  }
  return "Unknown";
}

}  // namespace fss
