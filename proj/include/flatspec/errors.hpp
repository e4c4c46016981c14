#pragma once

#include <stdexcept>
#include <string>

namespace flatspec {

enum class ErrorCode {
  // surface construction
  BadSpec,
  UnmatchedEdge,
  HolonomyMismatch,
  BadConeAngle,
  EulerMismatch,
  // geodesy
  CutoffTooLarge,
  BudgetExceeded,
  NotIncident,
  // curves
  Degenerate,
  NoConvergence,
  BadPath,
  // zonogon / sl2opt
  ZeroGenerator,
  NotUnimodular,
  EccNotBalanced,
  // spectra
  EmptySpectrum,
  // io
  IoError,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::UnmatchedEdge: return "UnmatchedEdge";
    case ErrorCode::HolonomyMismatch: return "HolonomyMismatch";
    case ErrorCode::BadConeAngle: return "BadConeAngle";
    case ErrorCode::EulerMismatch: return "EulerMismatch";
    case ErrorCode::CutoffTooLarge: return "CutoffTooLarge";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::NotIncident: return "NotIncident";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::BadPath: return "BadPath";
    case ErrorCode::ZeroGenerator: return "ZeroGenerator";
    case ErrorCode::NotUnimodular: return "NotUnimodular";
    case ErrorCode::EccNotBalanced: return "EccNotBalanced";
    case ErrorCode::EmptySpectrum: return "EmptySpectrum";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

  // Exit-code classification used by the CLI.
  bool is_budget() const {
    return code_ == ErrorCode::CutoffTooLarge || code_ == ErrorCode::BudgetExceeded ||
           code_ == ErrorCode::NoConvergence;
  }

 private:
  ErrorCode code_;
};

}  // namespace flatspec
