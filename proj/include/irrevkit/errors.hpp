#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace irrevkit {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CompositeSpaceError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct StateValidityError : Error { using Error::Error; };
struct ChannelValidityError : Error { using Error::Error; };
struct BranchProbabilityError : Error { using Error::Error; };
struct ExtractionError : Error { using Error::Error; };
struct OutcomeFunctionError : Error { using Error::Error; };
struct BlochError : Error { using Error::Error; };
struct DistributionError : Error { using Error::Error; };
struct ConservationError : Error { using Error::Error; };
struct ImplementationError : Error { using Error::Error; };
struct YanaseConditionError : Error { using Error::Error; };
struct AssumptionError : Error { using Error::Error; };

// Malformed input; `pointer` is a JSON pointer to the offending field.
struct SchemaError : Error {
  SchemaError(std::string ptr, const std::string& msg)
      : Error(ptr + ": " + msg), pointer(std::move(ptr)) {}
  std::string pointer;
};

}  // namespace irrevkit
