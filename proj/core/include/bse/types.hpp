#ifndef BSE_TYPES_HPP
#define BSE_TYPES_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace bse {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

enum class ErrorCode {
  UnsupportedSpec,
  InvalidSpec,
  SingularPoint,
  InvalidCovariance,
  SingularParameterization,
  DegenerateBlock,
  DegenerateDraw,
  Unidentifiable,
  WrongSpecialCase,
  InvalidInput,
  DataDegenerate,
  InsufficientData,
  IncompatibleResults,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code);

// All library failures surface as this exception; the code is stable for callers
// that need to branch (the CLI maps it to an exit status).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bse

#endif  // BSE_TYPES_HPP
