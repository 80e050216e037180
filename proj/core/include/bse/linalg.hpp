#ifndef BSE_LINALG_HPP
#define BSE_LINALG_HPP

#include "bse/types.hpp"

namespace bse::linalg {

/// Hermitian part (A + A^H)/2.
CMatrix hermitian_part(const CMatrix& a);

/// True when A is Hermitian (to rel_tol) with smallest eigenvalue above
/// rel_tol times the largest.
bool is_hermitian_pd(const CMatrix& a, double rel_tol = 1e-10);

/// Principal (Hermitian PSD) square root and its inverse.
CMatrix sqrtm_hpd(const CMatrix& a);
CMatrix inv_sqrtm_hpd(const CMatrix& a);

/// Inverse of a Hermitian PD matrix; throws InvalidCovariance when not PD.
CMatrix inv_hpd(const CMatrix& a);

/// Eigenvalues of a Hermitian matrix, descending.
RVector eigenvalues_desc(const CMatrix& a);

/// Ratio smallest/largest eigenvalue of a Hermitian matrix (<= 0 when indefinite).
double eig_ratio(const CMatrix& a);

double condition_number(const CMatrix& a);

/// Relative Frobenius deviation ||a - b|| / ||b|| (absolute when b vanishes).
double rel_frobenius(const CMatrix& a, const CMatrix& b);

}  // namespace bse::linalg

#endif  // BSE_LINALG_HPP
