#ifndef BSE_MIXMODEL_HPP
#define BSE_MIXMODEL_HPP

// ICE mixing algebra and the piecewise (block-wise) extensions with a shared
// mixing vector (CMV) or a shared separating vector (CSV).
//
//   A = [ gamma  h^H              ]     W = A^{-1} = [ beta*  h^H        ]
//       [ g      (g h^H - I)/gamma ]                  [ g      -gamma I  ]
//
// with beta* gamma = 1 - h^H g. a = [gamma; g] is the mixing vector,
// w = [beta; h] the separating vector (w^H x = s), B = [g, -gamma I] the
// blocking matrix (B x = z) and Q the last d-1 columns of A.

#include "bse/csignal.hpp"
#include "bse/types.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace bse {

struct IceParams {
  cplx gamma{1.0};
  cplx beta{1.0};
  CVector g;
  CVector h;

  /// gamma given, beta derived. Throws SingularParameterization when gamma == 0.
  static IceParams from_gamma(cplx gamma, const CVector& g, const CVector& h);
  /// beta given, gamma derived (the CSV scaling fix). Throws DegenerateBlock when gamma == 0.
  static IceParams from_beta(cplx beta, const CVector& g, const CVector& h);

  int dim() const { return static_cast<int>(g.size()) + 1; }
  /// |beta* gamma - (1 - h^H g)|; zero up to rounding for any constructed value.
  double link_residual() const;
  void validate() const;
};

CMatrix ice_mixing(const IceParams& p);
CMatrix ice_demixing(const IceParams& p);
CVector mixing_vector(const IceParams& p);
CVector separating_vector(const IceParams& p);
CMatrix background_basis(const IceParams& p);  // Q, d x (d-1)
CMatrix blocking_matrix(const IceParams& p);   // B, (d-1) x d

/// gamma^m = 1 - h^H g^m under beta = 1. Throws DegenerateBlock when it vanishes.
cplx csv_gamma(const CVector& h, const CVector& g_m);

enum class Sharing { Independent, ConstantMixingVector, ConstantSeparatingVector };

const char* to_string(Sharing s);
Sharing sharing_from_string(const std::string& s);

struct BlockSpec {
  IceParams ice;
  GgdSpec soi;
  CMatrix bg_cov;                       // covariance of z in ICE coordinates
  std::optional<DependentBgSpec> dep_bg;  // non-Gaussian background when set
};

struct PiecewiseModel {
  std::vector<BlockSpec> blocks;
  Sharing sharing = Sharing::Independent;
  std::size_t n_per_block = 0;
  std::string scaling_fix = "gamma=1";

  int dim() const { return blocks.empty() ? 0 : blocks.front().ice.dim(); }
  int num_blocks() const { return static_cast<int>(blocks.size()); }
  void validate() const;
};

struct Dataset {
  CMatrix observations;             // d x (M * N_b), block-major
  std::vector<CVector> soi;         // s^m
  std::vector<CMatrix> background;  // z^m
  PiecewiseModel model;

  CMatrix block(int m) const;
};

/// How random_model places the background.
///   Raw:       every block's full mixing matrix has CN(0,1) entries; the
///              background covariance in ICE coordinates follows from it.
///   Canonical: ICE parameters g, h ~ CN(0,1) and the background enters in
///              ICE coordinates with covariance `canonical_cov` (identity by default).
enum class BackgroundFrame { Raw, Canonical };

struct RandomModelOptions {
  int dim = 5;
  int blocks = 1;
  Sharing sharing = Sharing::Independent;
  std::vector<GgdSpec> soi{GgdSpec{2.0, 0.0, 1.0}};  // one per block, or a single spec broadcast to all blocks
  std::size_t n_per_block = 1000;
  BackgroundFrame frame = BackgroundFrame::Raw;
  std::optional<DependentBgSpec> dep_bg;
};

inline constexpr double kMaxCondition = 1e12;
inline constexpr int kMaxRedraws = 100;

PiecewiseModel random_model(const RandomModelOptions& opts, std::uint64_t seed);

Dataset synthesize(const PiecewiseModel& model, std::uint64_t seed);

}  // namespace bse

#endif  // BSE_MIXMODEL_HPP
