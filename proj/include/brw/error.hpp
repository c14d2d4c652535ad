#ifndef BRW_ERROR_HPP
#define BRW_ERROR_HPP

#include <stdexcept>
#include <string>

namespace brw {

// Every failure raised by the library derives from Error so callers can
// catch the family at once; the concrete type names the contract violated.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define BRW_DEFINE_ERROR(Name)                 \
  struct Name : Error {                        \
    explicit Name(const std::string& what)     \
        : Error(#Name ": " + what) {}          \
  }

BRW_DEFINE_ERROR(DomainError);
BRW_DEFINE_ERROR(ToleranceError);
BRW_DEFINE_ERROR(ParamError);
BRW_DEFINE_ERROR(HypothesisError);
BRW_DEFINE_ERROR(BudgetError);
BRW_DEFINE_ERROR(StateError);
BRW_DEFINE_ERROR(KernelError);
BRW_DEFINE_ERROR(RangeError);

#undef BRW_DEFINE_ERROR

}  // namespace brw

#endif  // BRW_ERROR_HPP
