#pragma once

#include <stdexcept>
#include <string>

namespace emdot {

/// Failure classes map onto CLI exit codes (see tools/commands.cpp).
enum class ErrorClass { Config, Data, Runtime };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

#define EMDOT_DEFINE_ERROR(Name, Cls)                                      \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(ErrorClass::Cls, what) {} \
  };

// dataset
EMDOT_DEFINE_ERROR(SchemaError, Data)
EMDOT_DEFINE_ERROR(LabelError, Data)
EMDOT_DEFINE_ERROR(FitError, Runtime)
EMDOT_DEFINE_ERROR(IoError, Data)
// splitter / config
EMDOT_DEFINE_ERROR(ConfigError, Config)
EMDOT_DEFINE_ERROR(RangeError, Runtime)
// models
EMDOT_DEFINE_ERROR(DegenerateLabelError, Runtime)
EMDOT_DEFINE_ERROR(DivergenceError, Runtime)
EMDOT_DEFINE_ERROR(ShapeError, Runtime)
EMDOT_DEFINE_ERROR(GridError, Runtime)
// engine / diagnostics
EMDOT_DEFINE_ERROR(AggregationError, Runtime)
EMDOT_DEFINE_ERROR(UnknownFeatureError, Runtime)

#undef EMDOT_DEFINE_ERROR

/// Raised for a malformed data row; carries the 1-based data row number.
class RowError : public Error {
 public:
  RowError(std::size_t row, const std::string& what)
      : Error(ErrorClass::Data, "row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace emdot
