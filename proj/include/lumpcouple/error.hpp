#ifndef LUMPCOUPLE_ERROR_HPP
#define LUMPCOUPLE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lumpcouple {

enum class ErrorKind {
  InvalidInput,
  CorruptInput,
  ShapeMismatch,
  CodomainMismatch,
  NotIrreducible,
  NotStationary,
  TrajectoryBudgetExceeded,
  PhiNotConverged,
  HypothesisEvidenceFailed,
  NormalizationFailed,
  AbsorptionMismatch,
  NotQuasistationary,
  NotIntertwined,
};

inline const char* error_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::CorruptInput: return "CorruptInput";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::CodomainMismatch: return "CodomainMismatch";
    case ErrorKind::NotIrreducible: return "NotIrreducible";
    case ErrorKind::NotStationary: return "NotStationary";
    case ErrorKind::TrajectoryBudgetExceeded: return "TrajectoryBudgetExceeded";
    case ErrorKind::PhiNotConverged: return "PhiNotConverged";
    case ErrorKind::HypothesisEvidenceFailed: return "HypothesisEvidenceFailed";
    case ErrorKind::NormalizationFailed: return "NormalizationFailed";
    case ErrorKind::AbsorptionMismatch: return "AbsorptionMismatch";
    case ErrorKind::NotQuasistationary: return "NotQuasistationary";
    case ErrorKind::NotIntertwined: return "NotIntertwined";
  }
  return "Error";
}

/// Every failure raised by the library. `what()` is "<Name>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(error_name(kind)) + ": " + detail), kind_(kind), detail_(detail) {}

  ErrorKind kind() const noexcept { return kind_; }
  const char* name() const noexcept { return error_name(kind_); }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace lumpcouple

#endif  // LUMPCOUPLE_ERROR_HPP
