#pragma once

#include <stdexcept>
#include <string>

namespace osmc {

// Error categories map onto CLI exit codes: config -> 2, data -> 3,
// numeric -> 4.
enum class ErrorCategory { Config, Data, Numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& msg)
      : std::runtime_error(msg), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error(ErrorCategory::Config, msg) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& msg) : Error(ErrorCategory::Config, msg) {}
};

struct MissingResponses : Error {
  explicit MissingResponses(const std::string& msg) : Error(ErrorCategory::Data, msg) {}
};
struct InvalidResponse : Error {
  explicit InvalidResponse(const std::string& msg) : Error(ErrorCategory::Data, msg) {}
};
struct MalformedCsv : Error {
  explicit MalformedCsv(const std::string& msg) : Error(ErrorCategory::Data, msg) {}
};
struct NonNumericField : Error {
  explicit NonNumericField(const std::string& msg) : Error(ErrorCategory::Data, msg) {}
};
struct ConstantColumn : Error {
  explicit ConstantColumn(const std::string& msg) : Error(ErrorCategory::Data, msg) {}
};
struct EmptyInput : Error {
  explicit EmptyInput(const std::string& msg) : Error(ErrorCategory::Data, msg) {}
};
struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& msg) : Error(ErrorCategory::Data, msg) {}
};
struct PilotTooLarge : Error {
  explicit PilotTooLarge(const std::string& msg) : Error(ErrorCategory::Data, msg) {}
};
struct DegenerateMarginal : Error {
  explicit DegenerateMarginal(const std::string& msg) : Error(ErrorCategory::Data, msg) {}
};

struct NonFiniteLinearPredictor : Error {
  explicit NonFiniteLinearPredictor(const std::string& msg) : Error(ErrorCategory::Numeric, msg) {}
};
struct SingularMatrix : Error {
  explicit SingularMatrix(const std::string& msg) : Error(ErrorCategory::Numeric, msg) {}
};
struct SingularHessian : Error {
  explicit SingularHessian(const std::string& msg) : Error(ErrorCategory::Numeric, msg) {}
};
struct SeparationSuspected : Error {
  explicit SeparationSuspected(const std::string& msg) : Error(ErrorCategory::Numeric, msg) {}
};
struct PilotSingular : Error {
  explicit PilotSingular(const std::string& msg) : Error(ErrorCategory::Numeric, msg) {}
};
struct SingularPhi : Error {
  explicit SingularPhi(const std::string& msg) : Error(ErrorCategory::Numeric, msg) {}
};
struct SingularGram : Error {
  explicit SingularGram(const std::string& msg) : Error(ErrorCategory::Numeric, msg) {}
};
struct SingularGammaHat : Error {
  explicit SingularGammaHat(const std::string& msg) : Error(ErrorCategory::Numeric, msg) {}
};
struct ZeroWeights : Error {
  explicit ZeroWeights(const std::string& msg) : Error(ErrorCategory::Numeric, msg) {}
};
struct ZeroProbability : Error {
  explicit ZeroProbability(const std::string& msg) : Error(ErrorCategory::Numeric, msg) {}
};
struct DivisionByZero : Error {
  explicit DivisionByZero(const std::string& msg) : Error(ErrorCategory::Numeric, msg) {}
};

}  // namespace osmc
