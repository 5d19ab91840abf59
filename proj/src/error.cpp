#include "fpchain/error.hpp"

namespace fpchain {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::NotPrime: return "NotPrime";
    case ErrorCode::MissingPoleAssignment: return "MissingPoleAssignment";
    case ErrorCode::NotABijection: return "NotABijection";
    case ErrorCode::ModeMismatch: return "ModeMismatch";
    case ErrorCode::NonUniqueRecurrentClass: return "NonUniqueRecurrentClass";
    case ErrorCode::WrongResidueClass: return "WrongResidueClass";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::ConstantPhase: return "ConstantPhase";
    case ErrorCode::TrivialSubset: return "TrivialSubset";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::AverageTooSmall: return "AverageTooSmall";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

}  // namespace fpchain
