#include "bse/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace bse {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedSpec: return "unsupported-spec";
    case ErrorCode::InvalidSpec: return "invalid-spec";
    case ErrorCode::SingularPoint: return "singular-point";
    case ErrorCode::InvalidCovariance: return "invalid-covariance";
    case ErrorCode::SingularParameterization: return "singular-parameterization";
    case ErrorCode::DegenerateBlock: return "degenerate-block";
    case ErrorCode::DegenerateDraw: return "degenerate-draw";
    case ErrorCode::Unidentifiable: return "unidentifiable";
    case ErrorCode::WrongSpecialCase: return "wrong-special-case";
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::DataDegenerate: return "data-degenerate";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::IncompatibleResults: return "incompatible-results";
    case ErrorCode::ConfigError: return "config-error";
    case ErrorCode::IoError: return "io-error";
  }
  return "unknown";
}

namespace linalg {

CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

bool is_hermitian_pd(const CMatrix& a, double rel_tol) {
  if (a.rows() != a.cols() || a.rows() == 0) return false;
  const double scale = a.norm();
  if (!std::isfinite(scale) || scale == 0.0) return false;
  if ((a - a.adjoint()).norm() > 1e-8 * scale) return false;
  return eig_ratio(a) > rel_tol;
}

namespace {
Eigen::SelfAdjointEigenSolver<CMatrix> eig(const CMatrix& a) {
  return Eigen::SelfAdjointEigenSolver<CMatrix>(hermitian_part(a));
}
}  // namespace

CMatrix sqrtm_hpd(const CMatrix& a) {
  auto es = eig(a);
  if (es.eigenvalues().minCoeff() < 0.0)
    throw Error(ErrorCode::InvalidCovariance, "square root of an indefinite matrix");
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
         es.eigenvectors().adjoint();
}

CMatrix inv_sqrtm_hpd(const CMatrix& a) {
  auto es = eig(a);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw Error(ErrorCode::InvalidCovariance, "inverse square root of a non-PD matrix");
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().adjoint();
}

CMatrix inv_hpd(const CMatrix& a) {
  Eigen::LLT<CMatrix> llt(hermitian_part(a));
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::InvalidCovariance, "matrix is not Hermitian positive definite");
  CMatrix inv = llt.solve(CMatrix::Identity(a.rows(), a.cols()));
  return hermitian_part(inv);
}

RVector eigenvalues_desc(const CMatrix& a) {
  RVector ev = eig(a).eigenvalues();
  return ev.reverse();
}

double eig_ratio(const CMatrix& a) {
  RVector ev = eig(a).eigenvalues();
  const double hi = ev.maxCoeff();
  if (hi <= 0.0) return -1.0;
  return ev.minCoeff() / hi;
}

double condition_number(const CMatrix& a) {
  Eigen::JacobiSVD<CMatrix> svd(a);
  const auto& s = svd.singularValues();
  const double lo = s(s.size() - 1);
  return lo > 0.0 ? s(0) / lo : std::numeric_limits<double>::infinity();
}

double rel_frobenius(const CMatrix& a, const CMatrix& b) {
  const double nb = b.norm();
  const double diff = (a - b).norm();
  return nb > 0.0 ? diff / nb : diff;
}

}  // namespace linalg
}  // namespace bse
