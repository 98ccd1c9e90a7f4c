#pragma once

#include <stdexcept>
#include <string>

namespace dagctrl {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DAGCTRL_DEFINE_ERROR(Name)  \
  class Name : public Error {       \
   public:                          \
    using Error::Error;             \
  }

DAGCTRL_DEFINE_ERROR(CycleError);
DAGCTRL_DEFINE_ERROR(IndexError);
DAGCTRL_DEFINE_ERROR(DimensionError);
DAGCTRL_DEFINE_ERROR(InvalidArgument);
DAGCTRL_DEFINE_ERROR(SingularError);
DAGCTRL_DEFINE_ERROR(NotHurwitzError);
DAGCTRL_DEFINE_ERROR(NumericalError);
DAGCTRL_DEFINE_ERROR(AssumptionError);
DAGCTRL_DEFINE_ERROR(ImaginaryAxisError);
DAGCTRL_DEFINE_ERROR(NonzeroFeedthroughError);
DAGCTRL_DEFINE_ERROR(WellPosednessError);
DAGCTRL_DEFINE_ERROR(MissingAncestorError);
DAGCTRL_DEFINE_ERROR(DivergenceError);
DAGCTRL_DEFINE_ERROR(ParseError);

#undef DAGCTRL_DEFINE_ERROR

}  // namespace dagctrl
