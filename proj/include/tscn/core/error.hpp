// Copyright 2026 The tscnpp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <stdexcept>
#include <string>

namespace tscn {

enum class ErrorKind {
  kInvalidArgument,
  kShapeMismatch,
  kIo,
  kWavMalformed,
  kWavSampleRate,
  kWavChannels,
  kWavBitDepth,
  kWeightMagic,
  kWeightTruncated,
  kWeightChecksum,
  kWeightHeader,
  kWeightShape,
  kNumerical,
  kUsage,
};

inline const char* ToString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kShapeMismatch: return "shape mismatch";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kWavMalformed: return "malformed wav";
    case ErrorKind::kWavSampleRate: return "unsupported wav sample rate";
    case ErrorKind::kWavChannels: return "unsupported wav channel count";
    case ErrorKind::kWavBitDepth: return "unsupported wav bit depth";
    case ErrorKind::kWeightMagic: return "bad weight-file magic";
    case ErrorKind::kWeightTruncated: return "truncated weight file";
    case ErrorKind::kWeightChecksum: return "weight-file checksum mismatch";
    case ErrorKind::kWeightHeader: return "malformed weight-file header";
    case ErrorKind::kWeightShape: return "weight shape mismatch";
    case ErrorKind::kNumerical: return "numerical failure";
    case ErrorKind::kUsage: return "usage error";
  }
  return "unknown error";
}

// Process exit code used by the command-line tool for each error kind.
inline int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
    case ErrorKind::kInvalidArgument:
      return 2;
    case ErrorKind::kIo:
    case ErrorKind::kWavMalformed:
    case ErrorKind::kWavSampleRate:
    case ErrorKind::kWavChannels:
    case ErrorKind::kWavBitDepth:
    case ErrorKind::kShapeMismatch:
      return 3;
    case ErrorKind::kWeightMagic:
    case ErrorKind::kWeightTruncated:
    case ErrorKind::kWeightChecksum:
    case ErrorKind::kWeightHeader:
    case ErrorKind::kWeightShape:
      return 4;
    case ErrorKind::kNumerical:
      return 5;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(ToString(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void Require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) Fail(kind, what);
}

}  // namespace tscn
