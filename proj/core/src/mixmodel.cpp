#include "bse/mixmodel.hpp"

#include "bse/linalg.hpp"

#include <cmath>

namespace bse {

IceParams IceParams::from_gamma(cplx gamma, const CVector& g, const CVector& h) {
  if (gamma == cplx(0.0))
    throw Error(ErrorCode::SingularParameterization, "gamma must be nonzero");
  if (g.size() != h.size()) throw Error(ErrorCode::InvalidInput, "g and h differ in length");
  IceParams p;
  p.gamma = gamma;
  p.g = g;
  p.h = h;
  p.beta = std::conj((cplx(1.0) - h.dot(g)) / gamma);
  return p;
}

IceParams IceParams::from_beta(cplx beta, const CVector& g, const CVector& h) {
  if (beta == cplx(0.0)) throw Error(ErrorCode::SingularParameterization, "beta must be nonzero");
  if (g.size() != h.size()) throw Error(ErrorCode::InvalidInput, "g and h differ in length");
  const cplx gamma = (cplx(1.0) - h.dot(g)) / std::conj(beta);
  if (std::abs(gamma) == 0.0)
    throw Error(ErrorCode::DegenerateBlock, "derived gamma vanishes; mixing matrix is singular");
  IceParams p;
  p.gamma = gamma;
  p.beta = beta;
  p.g = g;
  p.h = h;
  return p;
}

double IceParams::link_residual() const {
  return std::abs(std::conj(beta) * gamma - (cplx(1.0) - h.dot(g)));
}

void IceParams::validate() const {
  if (gamma == cplx(0.0)) throw Error(ErrorCode::SingularParameterization, "gamma must be nonzero");
  if (g.size() != h.size() || g.size() < 1)
    throw Error(ErrorCode::InvalidInput, "g and h must have equal length >= 1");
  const double scale = 1.0 + h.norm() * g.norm();
  if (link_residual() > 1e-12 * scale)
    throw Error(ErrorCode::InvalidInput, "beta and gamma violate beta* gamma = 1 - h^H g");
}

CMatrix ice_mixing(const IceParams& p) {
  if (p.gamma == cplx(0.0))
    throw Error(ErrorCode::SingularParameterization, "gamma must be nonzero");
  const Eigen::Index m = p.g.size();
  CMatrix a(m + 1, m + 1);
  a(0, 0) = p.gamma;
  a.block(0, 1, 1, m) = p.h.adjoint();
  a.block(1, 0, m, 1) = p.g;
  a.block(1, 1, m, m) = (p.g * p.h.adjoint() - CMatrix::Identity(m, m)) / p.gamma;
  return a;
}

CMatrix ice_demixing(const IceParams& p) {
  if (p.gamma == cplx(0.0))
    throw Error(ErrorCode::SingularParameterization, "gamma must be nonzero");
  const Eigen::Index m = p.g.size();
  CMatrix w(m + 1, m + 1);
  w(0, 0) = std::conj(p.beta);
  w.block(0, 1, 1, m) = p.h.adjoint();
  w.block(1, 0, m, 1) = p.g;
  w.block(1, 1, m, m) = -p.gamma * CMatrix::Identity(m, m);
  return w;
}

CVector mixing_vector(const IceParams& p) {
  CVector a(p.g.size() + 1);
  a << p.gamma, p.g;
  return a;
}

CVector separating_vector(const IceParams& p) {
  CVector w(p.h.size() + 1);
  w << p.beta, p.h;
  return w;
}

CMatrix background_basis(const IceParams& p) {
  const Eigen::Index m = p.g.size();
  return ice_mixing(p).rightCols(m);
}

CMatrix blocking_matrix(const IceParams& p) {
  const Eigen::Index m = p.g.size();
  CMatrix b(m, m + 1);
  b.col(0) = p.g;
  b.rightCols(m) = -p.gamma * CMatrix::Identity(m, m);
  return b;
}

cplx csv_gamma(const CVector& h, const CVector& g_m) {
  const cplx gamma = cplx(1.0) - h.dot(g_m);
  if (std::abs(gamma) < 1e-14)
    throw Error(ErrorCode::DegenerateBlock, "gamma^m = 1 - h^H g^m vanishes");
  return gamma;
}

const char* to_string(Sharing s) {
  switch (s) {
    case Sharing::Independent: return "independent";
    case Sharing::ConstantMixingVector: return "cmv";
    case Sharing::ConstantSeparatingVector: return "csv";
  }
  return "independent";
}

Sharing sharing_from_string(const std::string& s) {
  if (s == "independent" || s == "bice" || s == "ice") return Sharing::Independent;
  if (s == "cmv" || s == "constant-mixing-vector") return Sharing::ConstantMixingVector;
  if (s == "csv" || s == "constant-separating-vector") return Sharing::ConstantSeparatingVector;
  throw Error(ErrorCode::ConfigError, "unknown sharing mode '" + s + "'");
}

void PiecewiseModel::validate() const {
  if (blocks.empty()) throw Error(ErrorCode::InvalidInput, "model needs at least one block");
  const int d = dim();
  if (d < 2) throw Error(ErrorCode::InvalidInput, "dimension must be >= 2");
  for (const auto& b : blocks) {
    if (b.ice.dim() != d) throw Error(ErrorCode::InvalidInput, "block dimensions disagree");
    b.ice.validate();
    b.soi.validate();
    if (b.bg_cov.rows() != d - 1 || !linalg::is_hermitian_pd(b.bg_cov))
      throw Error(ErrorCode::InvalidCovariance, "block background covariance must be (d-1)x(d-1) PD");
    if (b.dep_bg && b.dep_bg->dim != d - 1)
      throw Error(ErrorCode::InvalidInput, "dependent background dimension mismatch");
  }
  const auto& first = blocks.front().ice;
  for (const auto& b : blocks) {
    if (sharing == Sharing::ConstantMixingVector && (b.ice.gamma != first.gamma || b.ice.g != first.g))
      throw Error(ErrorCode::InvalidInput, "CMV blocks must share (gamma, g)");
    if (sharing == Sharing::ConstantSeparatingVector && (b.ice.beta != first.beta || b.ice.h != first.h))
      throw Error(ErrorCode::InvalidInput, "CSV blocks must share (beta, h)");
  }
}

CMatrix Dataset::block(int m) const {
  const auto nb = static_cast<Eigen::Index>(model.n_per_block);
  return observations.middleCols(m * nb, nb);
}

namespace {

cplx cn01(Rng& rng) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  const double re = nd(rng);
  const double im = nd(rng);
  return {re, im};
}

CMatrix cn_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  CMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cn01(rng);
  return m;
}

bool well_conditioned(const CMatrix& a) { return linalg::condition_number(a) <= kMaxCondition; }

// C_z of z = B (I - a w^H) R u2 with unit-variance u2.
CMatrix background_cov(const IceParams& p, const CMatrix& raw_bg) {
  const Eigen::Index d = p.dim();
  const CMatrix proj = CMatrix::Identity(d, d) - mixing_vector(p) * separating_vector(p).adjoint();
  const CMatrix y = blocking_matrix(p) * proj * raw_bg;
  return linalg::hermitian_part(y * y.adjoint());
}

struct Draw {
  IceParams ice;
  CMatrix bg_cov;
};

bool acceptable(const Draw& dr) {
  return well_conditioned(ice_mixing(dr.ice)) && linalg::is_hermitian_pd(dr.bg_cov, 1e-12);
}

// Raw frame, first block (or any independent block).
Draw draw_raw_first(int d, Sharing sharing, Rng& rng) {
  const CMatrix a_raw = cn_matrix(d, d, rng);
  if (!well_conditioned(a_raw)) throw Error(ErrorCode::DegenerateDraw, "ill-conditioned draw");
  const CMatrix w_raw = a_raw.inverse();
  CVector a = a_raw.col(0);
  CVector w = w_raw.row(0).adjoint();
  IceParams p;
  if (sharing == Sharing::ConstantSeparatingVector) {
    const cplx beta_c = std::conj(w(0));  // w(0) = beta
    w /= std::conj(beta_c);
    a *= beta_c;
    p = IceParams::from_beta(cplx(1.0), a.tail(d - 1), w.tail(d - 1));
  } else {
    const cplx c = a(0);
    a /= c;
    w *= std::conj(c);
    p = IceParams::from_gamma(cplx(1.0), a.tail(d - 1), w.tail(d - 1));
  }
  return {p, background_cov(p, a_raw.rightCols(d - 1))};
}

Draw draw_raw_cmv(int d, const IceParams& first, Rng& rng) {
  CMatrix a_raw = cn_matrix(d, d, rng);
  a_raw.col(0) = mixing_vector(first);
  if (!well_conditioned(a_raw)) throw Error(ErrorCode::DegenerateDraw, "ill-conditioned draw");
  const CVector w = a_raw.inverse().row(0).adjoint();
  IceParams p = IceParams::from_gamma(first.gamma, first.g, w.tail(d - 1));
  return {p, background_cov(p, a_raw.rightCols(d - 1))};
}

Draw draw_raw_csv(int d, const IceParams& first, Rng& rng) {
  const CMatrix a_raw = cn_matrix(d, d, rng);
  if (!well_conditioned(a_raw)) throw Error(ErrorCode::DegenerateDraw, "ill-conditioned draw");
  const CVector w = separating_vector(first);
  const cplx wa = w.dot(a_raw.col(0));
  if (std::abs(wa) < 1e-10) throw Error(ErrorCode::DegenerateDraw, "mixing vector orthogonal to w");
  const CVector a = a_raw.col(0) / wa;
  IceParams p = IceParams::from_beta(first.beta, a.tail(d - 1), first.h);
  return {p, background_cov(p, a_raw.rightCols(d - 1))};
}

Draw draw_canonical(int d, Sharing sharing, const IceParams* first, Rng& rng) {
  const CVector g = cn_matrix(d - 1, 1, rng);
  const CVector h = cn_matrix(d - 1, 1, rng);
  IceParams p;
  if (sharing == Sharing::ConstantSeparatingVector) {
    p = first ? IceParams::from_beta(first->beta, g, first->h) : IceParams::from_beta(cplx(1.0), g, h);
    if (std::abs(p.gamma) < 1e-6) throw Error(ErrorCode::DegenerateDraw, "near-singular block");
  } else if (sharing == Sharing::ConstantMixingVector && first) {
    p = IceParams::from_gamma(first->gamma, first->g, h);
  } else {
    p = IceParams::from_gamma(cplx(1.0), g, h);
  }
  return {p, CMatrix::Identity(d - 1, d - 1)};
}

template <class F>
Draw with_redraws(F&& draw) {
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    try {
      Draw dr = draw();
      if (acceptable(dr)) return dr;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateDraw && e.code() != ErrorCode::DegenerateBlock) throw;
    }
  }
  throw Error(ErrorCode::DegenerateDraw, "no well-conditioned mixing matrix after 100 attempts");
}

}  // namespace

PiecewiseModel random_model(const RandomModelOptions& opts, std::uint64_t seed) {
  if (opts.dim < 2) throw Error(ErrorCode::InvalidInput, "dimension must be >= 2");
  if (opts.blocks < 1) throw Error(ErrorCode::InvalidInput, "need at least one block");
  if (opts.soi.empty() || (opts.soi.size() != 1 && static_cast<int>(opts.soi.size()) != opts.blocks))
    throw Error(ErrorCode::InvalidInput, "SOI specs must be one per block or a single spec");
  const int d = opts.dim;
  Rng rng(seed);
  PiecewiseModel model;
  model.sharing = opts.sharing;
  model.n_per_block = opts.n_per_block;
  model.scaling_fix = opts.sharing == Sharing::ConstantSeparatingVector ? "beta=1" : "gamma=1";
  const bool canonical = opts.frame == BackgroundFrame::Canonical;
  for (int m = 0; m < opts.blocks; ++m) {
    const IceParams* first = m == 0 ? nullptr : &model.blocks.front().ice;
    Draw dr = with_redraws([&] {
      if (canonical) return draw_canonical(d, opts.sharing, first, rng);
      if (!first || opts.sharing == Sharing::Independent) return draw_raw_first(d, opts.sharing, rng);
      if (opts.sharing == Sharing::ConstantMixingVector) return draw_raw_cmv(d, *first, rng);
      return draw_raw_csv(d, *first, rng);
    });
    BlockSpec b;
    b.ice = dr.ice;
    b.soi = opts.soi.size() == 1 ? opts.soi.front() : opts.soi[static_cast<std::size_t>(m)];
    b.bg_cov = dr.bg_cov;
    b.dep_bg = opts.dep_bg;
    model.blocks.push_back(std::move(b));
  }
  model.validate();
  return model;
}

Dataset synthesize(const PiecewiseModel& model, std::uint64_t seed) {
  model.validate();
  const int d = model.dim();
  const auto nb = static_cast<Eigen::Index>(model.n_per_block);
  Dataset ds;
  ds.model = model;
  ds.observations.resize(d, nb * model.num_blocks());
  for (int m = 0; m < model.num_blocks(); ++m) {
    const BlockSpec& b = model.blocks[static_cast<std::size_t>(m)];
    Rng rng(split_seed(seed, static_cast<std::uint64_t>(m)));
    CVector s = sample_ggd(b.soi, model.n_per_block, rng);
    CMatrix z = b.dep_bg ? CMatrix(linalg::sqrtm_hpd(b.bg_cov) * sample_dependent_bg(*b.dep_bg, model.n_per_block, rng))
                         : sample_complex_gaussian(b.bg_cov, model.n_per_block, rng);
    CMatrix v(d, nb);
    v.row(0) = s.transpose();
    v.bottomRows(d - 1) = z;
    ds.observations.middleCols(m * nb, nb) = ice_mixing(b.ice) * v;
    ds.soi.push_back(std::move(s));
    ds.background.push_back(std::move(z));
  }
  return ds;
}

}  // namespace bse
