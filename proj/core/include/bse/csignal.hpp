#ifndef BSE_CSIGNAL_HPP
#define BSE_CSIGNAL_HPP

// Complex random-signal models: generalized-Gaussian sources with controlled
// circularity, a radially symmetric dependent background, their score
// functions, and the second-order statistics consumed by the Fisher
// information assembly.
//
// Score convention throughout: psi(s) = -d ln p / d s* (Wirtinger).

#include "bse/types.hpp"

#include <cstddef>
#include <functional>
#include <random>
#include <string>

namespace bse {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from (seed, index); splitmix64 finalizer.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index);

/// Complex generalized Gaussian distribution.
///   alpha    shape (1 = Gaussian, < 1 super-Gaussian, > 1 sub-Gaussian)
///   circ     second-order circularity coefficient |E[s^2]| / E[|s|^2]
///   variance E[|s|^2]
struct GgdSpec {
  double alpha = 1.0;
  double circ = 0.0;
  double variance = 1.0;

  /// Throws InvalidSpec on alpha <= 0, circ outside [0,1], variance <= 0 and
  /// UnsupportedSpec on circ == 1 (degenerate real-line support).
  void validate() const;
};

/// Complex analog of the dependent background p(z) ~ exp(-(lambda sum |z_i|^2)^alpha),
/// z in C^dim, with lambda chosen so that every coordinate has unit variance.
struct DependentBgSpec {
  double alpha = 2.0;
  int dim = 3;

  void validate() const;
  double lambda() const;
};

struct SourceStats {
  double kappa = 1.0;        // E[|psi(s)|^2]
  double sigma2 = 1.0;       // E[|s|^2]
  double kappa_bar = 1.0;    // kappa * sigma2
  cplx pseudo_moment{0.0};   // E[s^2]
  cplx score_pseudo{0.0};    // E[(psi*)^2]
  std::string provenance = "closed-form";
};

struct BgStats {
  CMatrix cov;           // C_z = E[z z^H]
  CMatrix kappa_z;       // E[psi_z psi_z^H]
  CMatrix pseudo_score;  // E[psi_z psi_z^T]
  CMatrix pseudo_cov;    // E[z z^T]
  std::string provenance = "closed-form";
};

// --- generalized Gaussian ---------------------------------------------------

CVector sample_ggd(const GgdSpec& spec, std::size_t n, std::uint64_t seed);
CVector sample_ggd(const GgdSpec& spec, std::size_t n, Rng& rng);

double ggd_log_pdf(const GgdSpec& spec, cplx s);

/// Analytic score. Throws SingularPoint for s == 0 when alpha < 1.
cplx ggd_score(const GgdSpec& spec, cplx s);

/// Score with |s| clamped to at least 1e-12 (per unit scale) when alpha < 1;
/// used as an algorithm nonlinearity. Each clamp increments a global counter.
cplx ggd_score_clamped(const GgdSpec& spec, cplx s);
std::uint64_t ggd_clamp_events();

/// Closed-form normalized score power alpha^2 Gamma(2/alpha) / ((1-circ^2) Gamma(1/alpha)^2).
double ggd_kappa_bar(const GgdSpec& spec);

// --- dependent background ---------------------------------------------------

/// Columns are i.i.d. draws (dim x n). Exact radius-direction factorization:
/// (lambda |z|^2)^alpha ~ Gamma(dim/alpha), direction uniform on the complex sphere.
CMatrix sample_dependent_bg(const DependentBgSpec& spec, std::size_t n, std::uint64_t seed);
CMatrix sample_dependent_bg(const DependentBgSpec& spec, std::size_t n, Rng& rng);

double dependent_bg_log_pdf(const DependentBgSpec& spec, const CVector& z);

/// alpha (lambda |z|^2)^(alpha-1) lambda z. Throws SingularPoint at z == 0 when alpha < 1.
CVector dependent_bg_score(const DependentBgSpec& spec, const CVector& z);

/// kappa_z = omega I for the unit-variance dependent background; returns omega.
double dependent_bg_kappa(const DependentBgSpec& spec);

// --- statistics ----------------------------------------------------------------

using VectorScore = std::function<CVector(const CVector&)>;

/// Sample mean of psi(z) psi(z)^H over the columns of `samples`, symmetrized.
CMatrix empirical_kappa_z(const VectorScore& score, const CMatrix& samples);

/// Standard error of the entries of empirical_kappa_z (elementwise, real magnitude).
RMatrix empirical_kappa_z_stderr(const VectorScore& score, const CMatrix& samples);

SourceStats source_stats(const GgdSpec& spec);

/// Circular Gaussian background with covariance cov; throws InvalidCovariance when not PD.
BgStats bg_stats_gaussian(const CMatrix& cov);

/// Dependent background observed through z = cov^{1/2} z0 with z0 ~ spec.
BgStats bg_stats_dependent(const DependentBgSpec& spec, const CMatrix& cov);

/// Circular Gaussian draws with covariance cov (dim x n).
CMatrix sample_complex_gaussian(const CMatrix& cov, std::size_t n, Rng& rng);

}  // namespace bse

#endif  // BSE_CSIGNAL_HPP
