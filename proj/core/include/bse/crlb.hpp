#ifndef BSE_CRLB_HPP
#define BSE_CRLB_HPP

// Fisher information of the ICE / BICE / CMV / CSV mixing parameters and the
// Cramer-Rao-induced bounds (CRIB) on the expected interference-to-signal
// ratio of the extracted source.
//
// FIM layouts are expressed in (d-1)-sized parameter slots:
//   ICE   [g; h]
//   BICE  [g^1; h^1; ...; g^M; h^M]
//   CMV   [g; h^1; ...; h^M]
//   CSV   [g^1; ...; g^M; h]
// F and P are per-sample informations summed over blocks (multiply by N_b for
// the whole batch).

#include "bse/csignal.hpp"
#include "bse/mixmodel.hpp"
#include "bse/types.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace bse {

struct ParamSlot {
  std::string name;  // "g", "h", "g^2", ...
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
};

struct FimBlocks {
  CMatrix F;  // E[grad grad^H], Hermitian
  CMatrix P;  // E[grad grad^T], symmetric
  std::vector<ParamSlot> layout;

  /// [[F, P], [P*, F*]]
  CMatrix augmented() const;
  const ParamSlot& slot(const std::string& name) const;
};

enum class BoundModel {
  IceGauss,
  IceCircular,
  IceNonGauss,
  Bice,
  Cmv,
  Csv,
  AllButOneGaussianCmv,
  AllButOneGaussianCsv,
  VanishingBgCmv,
  VanishingBgBice,
  VanishingBgCsv,
  GeneralPoint,
};

const char* to_string(BoundModel m);

struct CribTerm {
  std::string label;
  double value = 0.0;
};

struct CribReport {
  BoundModel model = BoundModel::IceGauss;
  double value = 0.0;  // linear scale
  double value_db = 0.0;
  std::vector<CribTerm> terms;
  bool identifiable = true;
  std::size_t n_total = 0;
  std::size_t n_block = 0;
  std::vector<std::string> notes;
};

/// Statistics of one block as used by the piecewise bounds.
struct BlockBound {
  SourceStats src;
  CMatrix cz;  // background covariance C_z^m
};

/// Relative eigenvalue floor below which an inner matrix counts as singular.
inline constexpr double kIdentifiabilityFloor = 1e-10;

// --- Fisher information ---------------------------------------------------------

struct BlockStats {
  SourceStats src;
  BgStats bg;
};

FimBlocks fim_ice(const SourceStats& src, const BgStats& bg);
FimBlocks fim_bice(const std::vector<BlockStats>& blocks);
FimBlocks fim_cmv(const std::vector<BlockStats>& blocks);
FimBlocks fim_csv(const std::vector<BlockStats>& blocks);

/// Closed-form FIM matching the model's sharing mode (ICE when M == 1 and independent).
FimBlocks fim_closed_form(const PiecewiseModel& model);

/// Monte Carlo estimate of (F, P) at h = 0 (and g = 0) from analytic scores,
/// n_samples per block. Uses the block SOI / background specs of `model`.
FimBlocks fim_empirical(const PiecewiseModel& model, std::size_t n_samples, std::uint64_t seed);

/// Closed-form statistics of each block of `model`.
std::vector<BlockStats> block_stats(const PiecewiseModel& model);

// --- bounds -------------------------------------------------------------------------

/// sigma^2 / (kappa sigma^2 - 1) C_z^{-1}. Throws Unidentifiable when kappa_bar <= 1.
CMatrix crlb_h_gauss(const SourceStats& src, const CMatrix& cz);

CribReport crib_ice_gauss(int d, std::size_t n, double kappa_bar);

/// kappa_z_tilde is the score power of the decorrelated, unit-scaled background.
CribReport crib_ice_circular(const SourceStats& src, const CMatrix& kappa_z_tilde, std::size_t n);

CribReport crib_bice(const std::vector<SourceStats>& blocks, int d, std::size_t n_block);
CribReport crib_cmv(const std::vector<BlockBound>& blocks, std::size_t n_block);
CribReport crib_csv(const std::vector<BlockBound>& blocks, std::size_t n_block);

struct TFactors {
  double t_cmv = 0.0;
  double t_csv = 0.0;
};

/// Trace factors of the varying-variance regime with S_m = sigma_m^2 (C_z^m)^{-1}.
TFactors t_factors(const std::vector<BlockBound>& blocks);

struct SpecialCaseReports {
  CribReport cmv;
  CribReport csv;
};

/// Every block except `k` (0-based) carries a circular Gaussian SOI.
/// Throws WrongSpecialCase when the precondition is violated.
SpecialCaseReports crib_special_allbutone_gaussian(const std::vector<BlockBound>& blocks, int k,
                                                   std::size_t n_block);

struct VanishingBgReports {
  CribReport cmv;
  CribReport bice;
  CribReport csv;
};

/// Gaussian SOI on every block except the k-th, whose normalized score power
/// is a free parameter; the k-th background is C_z^k = (kbar_k - 1)/kappa_k T.
/// The cz of block k in `blocks` is ignored.
VanishingBgReports crib_special_vanishing_bg(const std::vector<BlockBound>& blocks, int k,
                                             const CMatrix& t_matrix, std::size_t n_block);

/// Numeric bound on the first-order aggregate ISR at the actual parameters of
/// `model` (Gaussian backgrounds only). The FIM is a Monte Carlo estimate
/// (n_samples per block) in real coordinates and includes, per block, the SOI
/// scale, the SOI phase (non-circular SOI) and the background precision as
/// nuisance parameters, so it is the bound of a blind estimator. At
/// g^m = h^m = 0 it reproduces the closed forms.
CribReport crib_general_point(const PiecewiseModel& model, std::size_t n_samples, std::uint64_t seed);

/// Monte Carlo check of FIM equivariance: the bound on cov(q_2) computed from
/// the empirical FIM at `params` (gamma must be 1) against the one at the
/// identity mixing, on the same source draws. Returns the relative Frobenius
/// deviation.
double equivariance_check(const IceParams& params, const GgdSpec& soi, const CMatrix& bg_cov,
                          std::size_t n_samples, std::uint64_t seed);

double to_db(double linear);

}  // namespace bse

#endif  // BSE_CRLB_HPP
