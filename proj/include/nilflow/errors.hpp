#pragma once

#include <stdexcept>
#include <string>

namespace nilflow {

struct Error : std::runtime_error {
  explicit Error(const std::string& m) : std::runtime_error(m) {}
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& m) : Error(m) {}
};

struct SingularMatrixError : Error {
  explicit SingularMatrixError(const std::string& m) : Error(m) {}
};

struct NotNilpotentError : Error {
  explicit NotNilpotentError(const std::string& m) : Error(m) {}
};

struct NotUnipotentError : Error {
  explicit NotUnipotentError(const std::string& m) : Error(m) {}
};

struct NotPositiveDefiniteError : Error {
  explicit NotPositiveDefiniteError(const std::string& m) : Error(m) {}
};

struct DetNotOneError : Error {
  explicit DetNotOneError(const std::string& m) : Error(m) {}
};

struct ZeroNilpotentError : Error {
  explicit ZeroNilpotentError(const std::string& m) : Error(m) {}
};

struct NotATripleError : Error {
  explicit NotATripleError(const std::string& m) : Error(m) {}
};

struct NotNilpotentFamilyError : Error {
  explicit NotNilpotentFamilyError(const std::string& m) : Error(m) {}
};

struct NonCommutingError : Error {
  int i, j;
  NonCommutingError(int i_, int j_, const std::string& m) : Error(m), i(i_), j(j_) {}
};

struct GradingNotFoundError : Error {
  explicit GradingNotFoundError(const std::string& m) : Error(m) {}
};

struct ModelArityMismatchError : Error {
  explicit ModelArityMismatchError(const std::string& m) : Error(m) {}
};

struct ZeroVectorError : Error {
  explicit ZeroVectorError(const std::string& m) : Error(m) {}
};

// Bad user-facing input (CLI maps this family to exit code 1).
struct ValidationError : Error {
  explicit ValidationError(const std::string& m) : Error(m) {}
};

}  // namespace nilflow
