#pragma once

#include <stdexcept>
#include <string>

namespace qsol {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define QSOL_DEFINE_ERROR(Name)                           \
  class Name final : public Error {                       \
   public:                                                \
    explicit Name(const std::string& msg) : Error(msg) {} \
  };

// numcore
QSOL_DEFINE_ERROR(NotHermitian)
QSOL_DEFINE_ERROR(NoConvergence)
QSOL_DEFINE_ERROR(NotPsd)
QSOL_DEFINE_ERROR(DimensionMismatch)
QSOL_DEFINE_ERROR(NonFinite)

// scs
QSOL_DEFINE_ERROR(InvalidGridSize)

// chain
QSOL_DEFINE_ERROR(DomainError)
QSOL_DEFINE_ERROR(ChainTooShort)
QSOL_DEFINE_ERROR(StepTooLarge)
QSOL_DEFINE_ERROR(NoSoliton)

// protocol
QSOL_DEFINE_ERROR(NonNormalizable)

// cli
QSOL_DEFINE_ERROR(ParseError)
QSOL_DEFINE_ERROR(ValidationError)

#undef QSOL_DEFINE_ERROR

}  // namespace qsol
