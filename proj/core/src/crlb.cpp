#include "bse/crlb.hpp"

#include "bse/linalg.hpp"

#include <cmath>
#include <limits>

namespace bse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Layout { Ice, Bice, Cmv, Csv };

struct SlotMap {
  std::vector<int> g;  // slot index of g^m
  std::vector<int> h;  // slot index of h^m
  std::vector<std::string> names;
};

SlotMap slot_map(Layout layout, int blocks) {
  SlotMap s;
  auto sup = [](const char* base, int m) { return std::string(base) + "^" + std::to_string(m + 1); };
  switch (layout) {
    case Layout::Ice:
      s.g = {0};
      s.h = {1};
      s.names = {"g", "h"};
      break;
    case Layout::Bice:
      for (int m = 0; m < blocks; ++m) {
        s.g.push_back(2 * m);
        s.h.push_back(2 * m + 1);
        s.names.push_back(sup("g", m));
        s.names.push_back(sup("h", m));
      }
      break;
    case Layout::Cmv:
      s.names.push_back("g");
      for (int m = 0; m < blocks; ++m) {
        s.g.push_back(0);
        s.h.push_back(1 + m);
        s.names.push_back(sup("h", m));
      }
      break;
    case Layout::Csv:
      for (int m = 0; m < blocks; ++m) {
        s.g.push_back(m);
        s.h.push_back(blocks);
        s.names.push_back(sup("g", m));
      }
      s.names.push_back("h");
      break;
  }
  return s;
}

Layout layout_of(const PiecewiseModel& model) {
  switch (model.sharing) {
    case Sharing::ConstantMixingVector: return Layout::Cmv;
    case Sharing::ConstantSeparatingVector: return Layout::Csv;
    case Sharing::Independent: return model.num_blocks() == 1 ? Layout::Ice : Layout::Bice;
  }
  return Layout::Ice;
}

// Per-block contributions in (g, h) coordinates of that block.
struct BlockInfo {
  CMatrix fgg, fgh, fhh, pgg, pgh, phh;
};

FimBlocks assemble(Layout layout, const std::vector<BlockInfo>& infos, Eigen::Index k) {
  const int blocks = static_cast<int>(infos.size());
  const SlotMap map = slot_map(layout, blocks);
  const auto slots = static_cast<Eigen::Index>(map.names.size());
  FimBlocks out;
  out.F = CMatrix::Zero(slots * k, slots * k);
  out.P = CMatrix::Zero(slots * k, slots * k);
  for (Eigen::Index i = 0; i < slots; ++i)
    out.layout.push_back({map.names[static_cast<std::size_t>(i)], i * k, k});
  for (int m = 0; m < blocks; ++m) {
    const BlockInfo& b = infos[static_cast<std::size_t>(m)];
    const Eigen::Index g = map.g[static_cast<std::size_t>(m)] * k;
    const Eigen::Index h = map.h[static_cast<std::size_t>(m)] * k;
    out.F.block(g, g, k, k) += b.fgg;
    out.F.block(h, h, k, k) += b.fhh;
    out.F.block(g, h, k, k) += b.fgh;
    out.F.block(h, g, k, k) += b.fgh.adjoint();
    out.P.block(g, g, k, k) += b.pgg;
    out.P.block(h, h, k, k) += b.phh;
    out.P.block(g, h, k, k) += b.pgh;
    out.P.block(h, g, k, k) += b.pgh.transpose();
  }
  return out;
}

BlockInfo closed_form_info(const BlockStats& st) {
  const Eigen::Index k = st.bg.cov.rows();
  BlockInfo b;
  b.fgg = st.src.sigma2 * st.bg.kappa_z;
  b.fhh = st.src.kappa * st.bg.cov;
  b.fgh = -CMatrix::Identity(k, k);
  b.pgg = st.bg.pseudo_score * std::conj(st.src.pseudo_moment);
  b.phh = st.src.score_pseudo * st.bg.pseudo_cov;
  b.pgh = CMatrix::Zero(k, k);
  return b;
}

FimBlocks closed_form(Layout layout, const std::vector<BlockStats>& blocks) {
  if (blocks.empty()) throw Error(ErrorCode::InvalidInput, "no blocks");
  const Eigen::Index k = blocks.front().bg.cov.rows();
  std::vector<BlockInfo> infos;
  for (const auto& b : blocks) {
    if (b.bg.cov.rows() != k) throw Error(ErrorCode::InvalidInput, "block dimensions disagree");
    infos.push_back(closed_form_info(b));
  }
  return assemble(layout, infos, k);
}

CribReport make_report(BoundModel model, double value, std::size_t n_total, std::size_t n_block) {
  CribReport r;
  r.model = model;
  r.n_total = n_total;
  r.n_block = n_block;
  r.identifiable = std::isfinite(value) && value >= 0.0;
  r.value = r.identifiable ? value : kInf;
  r.value_db = to_db(r.value);
  return r;
}

CribReport unidentifiable(BoundModel model, std::size_t n_total, std::size_t n_block, std::string why) {
  CribReport r = make_report(model, kInf, n_total, n_block);
  r.notes.push_back(std::move(why));
  return r;
}

bool singular(const CMatrix& s) { return linalg::eig_ratio(s) < kIdentifiabilityFloor; }

double sum_sigma2(const std::vector<BlockBound>& blocks) {
  double acc = 0.0;
  for (const auto& b : blocks) acc += b.src.sigma2;
  return acc;
}

Eigen::Index bg_dim(const std::vector<BlockBound>& blocks) {
  if (blocks.empty()) throw Error(ErrorCode::InvalidInput, "no blocks");
  const Eigen::Index k = blocks.front().cz.rows();
  for (const auto& b : blocks)
    if (b.cz.rows() != k || !linalg::is_hermitian_pd(b.cz))
      throw Error(ErrorCode::InvalidCovariance, "block covariances must share size and be PD");
  return k;
}

bool is_gaussian_soi(const SourceStats& s) { return std::abs(s.kappa_bar - 1.0) <= 1e-12; }

}  // namespace

double to_db(double linear) { return 10.0 * std::log10(linear); }

const char* to_string(BoundModel m) {
  switch (m) {
    case BoundModel::IceGauss: return "ICE-gauss";
    case BoundModel::IceCircular: return "ICE-circular";
    case BoundModel::IceNonGauss: return "ICE-nongauss";
    case BoundModel::Bice: return "BICE";
    case BoundModel::Cmv: return "CMV";
    case BoundModel::Csv: return "CSV";
    case BoundModel::AllButOneGaussianCmv: return "CMV-allbutone-gaussian";
    case BoundModel::AllButOneGaussianCsv: return "CSV-allbutone-gaussian";
    case BoundModel::VanishingBgCmv: return "CMV-vanishing-background";
    case BoundModel::VanishingBgBice: return "BICE-vanishing-background";
    case BoundModel::VanishingBgCsv: return "CSV-vanishing-background";
    case BoundModel::GeneralPoint: return "general-point";
  }
  return "unknown";
}

CMatrix FimBlocks::augmented() const {
  const Eigen::Index n = F.rows();
  CMatrix j(2 * n, 2 * n);
  j << F, P, P.conjugate(), F.conjugate();
  return j;
}

const ParamSlot& FimBlocks::slot(const std::string& name) const {
  for (const auto& s : layout)
    if (s.name == name) return s;
  throw Error(ErrorCode::InvalidInput, "no parameter slot named '" + name + "'");
}

FimBlocks fim_ice(const SourceStats& src, const BgStats& bg) { return closed_form(Layout::Ice, {{src, bg}}); }
FimBlocks fim_bice(const std::vector<BlockStats>& blocks) { return closed_form(Layout::Bice, blocks); }
FimBlocks fim_cmv(const std::vector<BlockStats>& blocks) { return closed_form(Layout::Cmv, blocks); }
FimBlocks fim_csv(const std::vector<BlockStats>& blocks) { return closed_form(Layout::Csv, blocks); }

std::vector<BlockStats> block_stats(const PiecewiseModel& model) {
  std::vector<BlockStats> out;
  for (const auto& b : model.blocks) {
    BlockStats st;
    st.src = source_stats(b.soi);
    st.bg = b.dep_bg ? bg_stats_dependent(*b.dep_bg, b.bg_cov) : bg_stats_gaussian(b.bg_cov);
    out.push_back(std::move(st));
  }
  return out;
}

FimBlocks fim_closed_form(const PiecewiseModel& model) {
  return closed_form(layout_of(model), block_stats(model));
}

FimBlocks fim_empirical(const PiecewiseModel& model, std::size_t n_samples, std::uint64_t seed) {
  model.validate();
  if (n_samples == 0) throw Error(ErrorCode::InsufficientData, "need at least one sample");
  const Eigen::Index k = model.dim() - 1;
  constexpr std::size_t kChunk = 1 << 16;
  std::vector<BlockInfo> infos;
  for (int m = 0; m < model.num_blocks(); ++m) {
    const BlockSpec& b = model.blocks[static_cast<std::size_t>(m)];
    Rng rng(split_seed(seed, static_cast<std::uint64_t>(m)));
    const CMatrix cinv = linalg::inv_hpd(b.bg_cov);
    const CMatrix croot = linalg::sqrtm_hpd(b.bg_cov);
    const CMatrix cinv_root = linalg::inv_sqrtm_hpd(b.bg_cov);
    BlockInfo acc{CMatrix::Zero(k, k), CMatrix::Zero(k, k), CMatrix::Zero(k, k),
                  CMatrix::Zero(k, k), CMatrix::Zero(k, k), CMatrix::Zero(k, k)};
    for (std::size_t done = 0; done < n_samples; done += kChunk) {
      const std::size_t n = std::min(kChunk, n_samples - done);
      const CVector s = sample_ggd(b.soi, n, rng);
      CMatrix z, psi_z;
      if (b.dep_bg) {
        const CMatrix z0 = sample_dependent_bg(*b.dep_bg, n, rng);
        z = croot * z0;
        psi_z.resize(k, z0.cols());
        for (Eigen::Index j = 0; j < z0.cols(); ++j) psi_z.col(j) = dependent_bg_score(*b.dep_bg, z0.col(j));
        psi_z = cinv_root * psi_z;
      } else {
        z = sample_complex_gaussian(b.bg_cov, n, rng);
        psi_z = cinv * z;
      }
      // grad_g = -psi_z s*, grad_h = psi_s* z
      CMatrix gg(k, static_cast<Eigen::Index>(n)), gh(k, static_cast<Eigen::Index>(n));
      for (Eigen::Index j = 0; j < s.size(); ++j) {
        gg.col(j) = -psi_z.col(j) * std::conj(s(j));
        gh.col(j) = std::conj(ggd_score_clamped(b.soi, s(j))) * z.col(j);
      }
      acc.fgg.noalias() += gg * gg.adjoint();
      acc.fgh.noalias() += gg * gh.adjoint();
      acc.fhh.noalias() += gh * gh.adjoint();
      acc.pgg.noalias() += gg * gg.transpose();
      acc.pgh.noalias() += gg * gh.transpose();
      acc.phh.noalias() += gh * gh.transpose();
    }
    const double inv_n = 1.0 / static_cast<double>(n_samples);
    for (CMatrix* mat : {&acc.fgg, &acc.fgh, &acc.fhh, &acc.pgg, &acc.pgh, &acc.phh}) *mat *= inv_n;
    infos.push_back(std::move(acc));
  }
  return assemble(layout_of(model), infos, k);
}

CMatrix crlb_h_gauss(const SourceStats& src, const CMatrix& cz) {
  if (!(src.kappa_bar > 1.0))
    throw Error(ErrorCode::Unidentifiable, "circular Gaussian SOI (kappa_bar <= 1)");
  return (src.sigma2 / (src.kappa * src.sigma2 - 1.0)) * linalg::inv_hpd(cz);
}

CribReport crib_ice_gauss(int d, std::size_t n, double kappa_bar) {
  if (d < 2 || n < 1) throw Error(ErrorCode::InvalidInput, "need d >= 2 and N >= 1");
  if (!(kappa_bar > 1.0))
    return unidentifiable(BoundModel::IceGauss, n, n, "kappa_bar <= 1: circular Gaussian SOI");
  CribReport r = make_report(BoundModel::IceGauss, (d - 1) / (static_cast<double>(n) * (kappa_bar - 1.0)), n, n);
  r.terms.push_back({"kappa_bar", kappa_bar});
  return r;
}

CribReport crib_ice_circular(const SourceStats& src, const CMatrix& kappa_z_tilde, std::size_t n) {
  if (!linalg::is_hermitian_pd(kappa_z_tilde))
    throw Error(ErrorCode::InvalidInput, "background score power must be Hermitian PD");
  const RVector omega = linalg::eigenvalues_desc(kappa_z_tilde);
  const double kbar = src.sigma2 * src.kappa;
  CribReport r;
  r.model = BoundModel::IceCircular;
  r.n_total = r.n_block = n;
  double total = 0.0;
  bool ok = true;
  for (Eigen::Index j = 0; j < omega.size(); ++j) {
    const double den = kbar * omega(j) - 1.0;
    const std::string idx = std::to_string(j + 2);
    r.terms.push_back({"omega_" + idx, omega(j)});
    if (den <= 0.0) {
      ok = false;
      r.notes.push_back("unidentifiable along eigendirection " + idx);
      r.terms.push_back({"term_" + idx, kInf});
    } else {
      const double term = omega(j) / den / static_cast<double>(n);
      r.terms.push_back({"term_" + idx, term});
      total += term;
    }
  }
  r.identifiable = ok;
  r.value = ok ? total : kInf;
  r.value_db = to_db(r.value);
  return r;
}

CribReport crib_bice(const std::vector<SourceStats>& blocks, int d, std::size_t n_block) {
  if (blocks.empty() || d < 2 || n_block < 1) throw Error(ErrorCode::InvalidInput, "bad BICE input");
  const std::size_t n_total = n_block * blocks.size();
  double s2 = 0.0, acc = 0.0;
  CribReport r;
  for (std::size_t m = 0; m < blocks.size(); ++m) {
    const auto& b = blocks[m];
    if (!(b.kappa_bar > 1.0))
      return unidentifiable(BoundModel::Bice, n_total, n_block,
                            "circular Gaussian SOI on block " + std::to_string(m + 1));
    s2 += b.sigma2;
    acc += b.sigma2 / (b.kappa_bar - 1.0);
    r.terms.push_back({"block_" + std::to_string(m + 1), b.sigma2 / (b.kappa_bar - 1.0)});
  }
  CribReport out = make_report(BoundModel::Bice, (d - 1) * acc / (static_cast<double>(n_block) * s2), n_total, n_block);
  out.terms = std::move(r.terms);
  return out;
}

CribReport crib_cmv(const std::vector<BlockBound>& blocks, std::size_t n_block) {
  const Eigen::Index k = bg_dim(blocks);
  const std::size_t n_total = n_block * blocks.size();
  std::vector<CMatrix> cinv;
  CMatrix inner = CMatrix::Zero(k, k);
  for (const auto& b : blocks) {
    cinv.push_back(linalg::inv_hpd(b.cz));
    inner += ((b.src.kappa_bar - 1.0) / b.src.kappa) * cinv.back();
  }
  if (singular(inner))
    return unidentifiable(BoundModel::Cmv, n_total, n_block, "SOI circular Gaussian on every block");
  const CMatrix inner_inv = linalg::inv_hpd(inner);
  const double norm = 1.0 / (static_cast<double>(n_block) * sum_sigma2(blocks));
  double total = 0.0;
  std::vector<CribTerm> terms;
  for (std::size_t m = 0; m < blocks.size(); ++m) {
    const double km = blocks[m].src.kappa;
    const double tr = static_cast<double>(k) / km + (inner_inv * cinv[m]).trace().real() / (km * km);
    terms.push_back({"block_" + std::to_string(m + 1), norm * tr});
    total += norm * tr;
  }
  CribReport r = make_report(BoundModel::Cmv, total, n_total, n_block);
  r.terms = std::move(terms);
  return r;
}

CribReport crib_csv(const std::vector<BlockBound>& blocks, std::size_t n_block) {
  const Eigen::Index k = bg_dim(blocks);
  const std::size_t n_total = n_block * blocks.size();
  CMatrix inner = CMatrix::Zero(k, k);
  CMatrix csum = CMatrix::Zero(k, k);
  for (const auto& b : blocks) {
    inner += ((b.src.kappa_bar - 1.0) / b.src.sigma2) * b.cz;
    csum += b.cz;
  }
  if (singular(inner))
    return unidentifiable(BoundModel::Csv, n_total, n_block, "SOI circular Gaussian on every block");
  const double value = (linalg::inv_hpd(inner) * csum).trace().real() /
                       (static_cast<double>(n_block) * sum_sigma2(blocks));
  return make_report(BoundModel::Csv, value, n_total, n_block);
}

TFactors t_factors(const std::vector<BlockBound>& blocks) {
  const Eigen::Index k = bg_dim(blocks);
  const double s2 = sum_sigma2(blocks);
  CMatrix ssum = CMatrix::Zero(k, k);
  CMatrix wsum = CMatrix::Zero(k, k);
  CMatrix csum = CMatrix::Zero(k, k);
  std::vector<CMatrix> s;
  for (const auto& b : blocks) {
    s.push_back(b.src.sigma2 * linalg::inv_hpd(b.cz));
    ssum += s.back();
    wsum += b.cz / b.src.sigma2;
    csum += b.cz;
  }
  const CMatrix ssum_inv = linalg::inv_hpd(ssum);
  CMatrix weighted = CMatrix::Zero(k, k);
  for (std::size_t m = 0; m < blocks.size(); ++m) weighted += (blocks[m].src.sigma2 / s2) * s[m];
  TFactors t;
  t.t_cmv = (ssum_inv * weighted).trace().real();
  t.t_csv = (linalg::inv_hpd(wsum) * csum).trace().real() / s2;
  return t;
}

SpecialCaseReports crib_special_allbutone_gaussian(const std::vector<BlockBound>& blocks, int k,
                                                   std::size_t n_block) {
  const Eigen::Index dim = bg_dim(blocks);
  const int m_count = static_cast<int>(blocks.size());
  if (k < 0 || k >= m_count) throw Error(ErrorCode::WrongSpecialCase, "block index out of range");
  for (int m = 0; m < m_count; ++m)
    if (m != k && !is_gaussian_soi(blocks[static_cast<std::size_t>(m)].src))
      throw Error(ErrorCode::WrongSpecialCase, "block " + std::to_string(m + 1) + " is not circular Gaussian");
  const std::size_t n_total = n_block * blocks.size();
  const BlockBound& bk = blocks[static_cast<std::size_t>(k)];
  SpecialCaseReports out;
  if (!(bk.src.kappa_bar > 1.0)) {
    out.cmv = unidentifiable(BoundModel::AllButOneGaussianCmv, n_total, n_block, "SOI Gaussian on every block");
    out.csv = unidentifiable(BoundModel::AllButOneGaussianCsv, n_total, n_block, "SOI Gaussian on every block");
    return out;
  }
  const double norm = 1.0 / (static_cast<double>(n_block) * sum_sigma2(blocks));
  double inv_kappa_sum = 0.0;
  CMatrix weighted_cinv = CMatrix::Zero(dim, dim);
  CMatrix csum = CMatrix::Zero(dim, dim);
  for (const auto& b : blocks) {
    inv_kappa_sum += 1.0 / b.src.kappa;
    weighted_cinv += linalg::inv_hpd(b.cz) / (b.src.kappa * b.src.kappa);
    csum += b.cz;
  }
  const double gain = bk.src.kappa / (bk.src.kappa_bar - 1.0);
  const double cmv = norm * (dim * inv_kappa_sum + gain * (bk.cz * weighted_cinv).trace().real());
  const double csv = norm * bk.src.sigma2 / (bk.src.kappa_bar - 1.0) *
                     (linalg::inv_hpd(bk.cz) * csum).trace().real();
  out.cmv = make_report(BoundModel::AllButOneGaussianCmv, cmv, n_total, n_block);
  out.csv = make_report(BoundModel::AllButOneGaussianCsv, csv, n_total, n_block);
  return out;
}

VanishingBgReports crib_special_vanishing_bg(const std::vector<BlockBound>& blocks, int k,
                                             const CMatrix& t_matrix, std::size_t n_block) {
  if (!linalg::is_hermitian_pd(t_matrix))
    throw Error(ErrorCode::InvalidInput, "T must be Hermitian positive definite");
  const int m_count = static_cast<int>(blocks.size());
  if (k < 0 || k >= m_count) throw Error(ErrorCode::WrongSpecialCase, "block index out of range");
  for (int m = 0; m < m_count; ++m)
    if (m != k && !is_gaussian_soi(blocks[static_cast<std::size_t>(m)].src))
      throw Error(ErrorCode::WrongSpecialCase, "block " + std::to_string(m + 1) + " is not circular Gaussian");
  const std::size_t n_total = n_block * blocks.size();
  VanishingBgReports out;
  out.bice = unidentifiable(BoundModel::VanishingBgBice, n_total, n_block,
                            "does not exist with circular Gaussian SOI blocks");
  out.csv = unidentifiable(BoundModel::VanishingBgCsv, n_total, n_block,
                           "does not exist with circular Gaussian SOI blocks");
  const SourceStats& sk = blocks[static_cast<std::size_t>(k)].src;
  if (!(sk.kappa_bar > 1.0)) {
    out.cmv = unidentifiable(BoundModel::VanishingBgCmv, n_total, n_block,
                             "kappa_bar of block k must exceed 1 for a nonzero background");
    return out;
  }
  std::vector<BlockBound> modified = blocks;
  modified[static_cast<std::size_t>(k)].cz = ((sk.kappa_bar - 1.0) / sk.kappa) * t_matrix;
  if (modified[static_cast<std::size_t>(k)].cz.rows() != bg_dim(blocks))
    throw Error(ErrorCode::InvalidInput, "T dimension mismatch");
  out.cmv = crib_cmv(modified, n_block);
  out.cmv.model = BoundModel::VanishingBgCmv;
  out.cmv.notes.push_back(
      "kappa_bar of block k is a free parameter of the vanishing-background construction; "
      "the inner CMV sum equals T^{-1}");
  return out;
}

CribReport crib_general_point(const PiecewiseModel& model, std::size_t n_samples, std::uint64_t seed) {
  model.validate();
  if (n_samples < 10) throw Error(ErrorCode::InsufficientData, "need at least 10 samples per block");
  const Layout layout = layout_of(model);
  const int blocks = model.num_blocks();
  const SlotMap map = slot_map(layout, blocks);
  const Eigen::Index k = model.dim() - 1;
  const bool beta_fixed = model.sharing == Sharing::ConstantSeparatingVector;
  const auto slots = static_cast<Eigen::Index>(map.names.size());
  const cplx i1(0.0, 1.0);

  struct Local {
    Eigen::Index nuis = 0;
    Eigen::Index nuis_offset = 0;
  };
  std::vector<Local> locals;
  Eigen::Index total = 2 * k * slots;
  for (const auto& b : model.blocks) {
    if (b.dep_bg) throw Error(ErrorCode::UnsupportedSpec, "general-point bound needs Gaussian backgrounds");
    if (!beta_fixed && std::abs(b.ice.gamma - cplx(1.0)) > 1e-12)
      throw Error(ErrorCode::InvalidInput, "expected the gamma = 1 scaling fix");
    if (beta_fixed && std::abs(b.ice.beta - cplx(1.0)) > 1e-12)
      throw Error(ErrorCode::InvalidInput, "expected the beta = 1 scaling fix");
    Local l;
    l.nuis = 1 + (b.soi.circ > 0.0 ? 1 : 0) + k * k;
    l.nuis_offset = total;
    total += l.nuis;
    locals.push_back(l);
  }

  RMatrix fim = RMatrix::Zero(total, total);
  for (int m = 0; m < blocks; ++m) {
    const BlockSpec& b = model.blocks[static_cast<std::size_t>(m)];
    const Local& l = locals[static_cast<std::size_t>(m)];
    const IceParams& p = b.ice;
    Rng rng(split_seed(seed, static_cast<std::uint64_t>(m)));
    const CVector s = sample_ggd(b.soi, n_samples, rng);
    const CMatrix z = sample_complex_gaussian(b.bg_cov, n_samples, rng);
    const CMatrix cinv = linalg::inv_hpd(b.bg_cov);
    const CMatrix cw = linalg::inv_sqrtm_hpd(b.bg_cov);
    GgdSpec unit = b.soi;
    unit.variance = 1.0;
    const double sd = std::sqrt(b.soi.variance);
    const bool phase = b.soi.circ > 0.0;
    const cplx gamma_c = std::conj(p.gamma);
    const Eigen::Index nl = 4 * k + l.nuis;
    RMatrix local = RMatrix::Zero(nl, nl);
    RVector r(nl);
    for (std::size_t j = 0; j < n_samples; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      CVector v(k + 1);
      v(0) = s(jj);
      v.tail(k) = z.col(jj);
      const CVector x = ice_mixing(p) * v;
      const cplx x1 = x(0);
      const CVector x2 = x.tail(k);
      const CVector zj = z.col(jj);
      const cplx u = s(jj) / sd;
      const cplx psi1 = ggd_score_clamped(unit, u);
      const cplx psi = psi1 / sd;
      const CVector psi_z = cinv * zj;
      CVector gg, gh;
      if (beta_fixed) {
        // s = x1 + h^H x2, z = g x1 - gamma x2, gamma = 1 - h^H g, plus 2(d-2) log|gamma|
        const double dm2 = static_cast<double>(k - 1);
        gg = -psi_z * std::conj(x1) - p.h * x2.dot(psi_z) - (dm2 / gamma_c) * p.h;
        gh = -std::conj(psi) * x2 - p.g * psi_z.dot(x2) - (dm2 / p.gamma) * p.g;
      } else {
        gg = std::conj(x1) * (psi * p.h - psi_z);
        gh = std::conj(psi) * zj;
      }
      r.segment(0, k) = 2.0 * gg.real();
      r.segment(k, k) = 2.0 * gg.imag();
      r.segment(2 * k, k) = 2.0 * gh.real();
      r.segment(3 * k, k) = 2.0 * gh.imag();
      Eigen::Index idx = 4 * k;
      r(idx++) = (u * std::conj(psi1)).real() - 1.0;
      if (phase) r(idx++) = -2.0 * (u * std::conj(psi1)).imag();
      // precision in whitened coordinates: a fixed reparameterization that keeps
      // the block well conditioned when C_z is not
      const CVector zw = cw * zj;
      const CMatrix resid = CMatrix::Identity(k, k) - zw * zw.adjoint();
      for (Eigen::Index a = 0; a < k; ++a) {
        r(idx++) = resid(a, a).real();
        for (Eigen::Index c = a + 1; c < k; ++c) {
          r(idx++) = 2.0 * resid(a, c).real();
          r(idx++) = 2.0 * resid(a, c).imag();
        }
      }
      local.noalias() += r * r.transpose();
    }
    local *= static_cast<double>(model.n_per_block) / static_cast<double>(n_samples);
    // scatter: local [g (2k), h (2k), nuisance] -> global
    std::vector<Eigen::Index> index(static_cast<std::size_t>(nl));
    const Eigen::Index go = 2 * k * map.g[static_cast<std::size_t>(m)];
    const Eigen::Index ho = 2 * k * map.h[static_cast<std::size_t>(m)];
    for (Eigen::Index i = 0; i < 2 * k; ++i) {
      index[static_cast<std::size_t>(i)] = go + i;
      index[static_cast<std::size_t>(2 * k + i)] = ho + i;
    }
    for (Eigen::Index i = 0; i < l.nuis; ++i) index[static_cast<std::size_t>(4 * k + i)] = l.nuis_offset + i;
    for (Eigen::Index a = 0; a < nl; ++a)
      for (Eigen::Index c = 0; c < nl; ++c)
        fim(index[static_cast<std::size_t>(a)], index[static_cast<std::size_t>(c)]) += local(a, c);
  }

  const std::size_t n_total = model.n_per_block * static_cast<std::size_t>(blocks);
  // Jacobi scaling first: small |gamma| inflates some coordinates without losing identifiability.
  const RVector scale = fim.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const RMatrix scaled = scale.asDiagonal() * fim * scale.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<RMatrix> eig(scaled);
  if (eig.info() != Eigen::Success ||
      !(eig.eigenvalues().minCoeff() > kIdentifiabilityFloor * eig.eigenvalues().maxCoeff()))
    return unidentifiable(BoundModel::GeneralPoint, n_total, model.n_per_block, "singular Fisher information");
  const RMatrix cov = scale.asDiagonal() *
                      (eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose()) *
                      scale.asDiagonal();

  // complex delta theta of one slot from its real coordinates
  CMatrix t = CMatrix::Zero(k, 2 * k);
  for (Eigen::Index a = 0; a < k; ++a) {
    t(a, a) = 1.0;
    t(a, k + a) = i1;
  }
  double interference = 0.0;
  double signal = 0.0;
  CribReport rep;
  for (int m = 0; m < blocks; ++m) {
    const BlockSpec& b = model.blocks[static_cast<std::size_t>(m)];
    const Eigen::Index go = 2 * k * map.g[static_cast<std::size_t>(m)];
    const Eigen::Index ho = 2 * k * map.h[static_cast<std::size_t>(m)];
    // real coordinates of this block: [g (2k); h (2k)]
    std::vector<Eigen::Index> index;
    for (Eigen::Index i = 0; i < 2 * k; ++i) index.push_back(go + i);
    for (Eigen::Index i = 0; i < 2 * k; ++i) index.push_back(ho + i);
    RMatrix sub(4 * k, 4 * k);
    for (Eigen::Index a = 0; a < 4 * k; ++a)
      for (Eigen::Index c = 0; c < 4 * k; ++c)
        sub(a, c) = cov(index[static_cast<std::size_t>(a)], index[static_cast<std::size_t>(c)]);
    CMatrix rmap = CMatrix::Zero(k + 1, 4 * k);
    if (beta_fixed) {
      rmap.block(1, 2 * k, k, 2 * k) = t;  // w = [1; h]
    } else {
      // w = [beta; h], beta = 1 - g^H h
      rmap.block(0, 2 * k, 1, 2 * k) = -b.ice.g.adjoint() * t;
      rmap.block(0, 0, 1, 2 * k) = -b.ice.h.transpose() * t.conjugate();
      rmap.block(1, 2 * k, k, 2 * k) = t;
    }
    const CMatrix q = background_basis(b.ice);
    const CMatrix qw = q.adjoint() * rmap;
    const double term = (b.bg_cov * qw * sub.cast<cplx>() * qw.adjoint()).trace().real();
    rep.terms.push_back({"block_" + std::to_string(m + 1), term});
    interference += term;
    signal += b.soi.variance * std::norm(separating_vector(b.ice).dot(mixing_vector(b.ice)));
  }
  CribReport out = make_report(BoundModel::GeneralPoint, interference / signal, n_total, model.n_per_block);
  for (auto& t2 : rep.terms) t2.value /= signal;
  out.terms = std::move(rep.terms);
  out.notes.push_back("Monte Carlo Fisher information, " + std::to_string(n_samples) + " samples per block");
  return out;
}

namespace {

// Bound on E[q2 q2^H] per sample at parameters (g, h), gamma = 1. The SOI
// scale (log sigma^2) and the background precision enter as nuisance
// parameters (plus the SOI phase when it is non-circular): with known
// second-order statistics the variance of x_1 alone would carry information
// about h away from h = 0, which a blind estimator cannot use. Everything runs
// in real coordinates [Re g; Im g; Re h; Im h; log sigma^2; (phase;) precision entries].
CMatrix q2_bound(const IceParams& p, const CMatrix& x, const GgdSpec& soi, const CMatrix& cov) {
  const Eigen::Index k = p.g.size();
  const Eigen::Index n = x.cols();
  const Eigen::Index phase = soi.circ > 0.0 ? 1 : 0;
  const Eigen::Index np = 4 * k + 1 + phase + k * k;
  const CMatrix cinv = linalg::inv_hpd(cov);
  GgdSpec unit = soi;
  unit.variance = 1.0;
  const double sd = std::sqrt(soi.variance);
  const cplx beta_c = std::conj(p.beta);
  RMatrix grads(np, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const cplx x1 = x(0, j);
    const CVector x2 = x.col(j).tail(k);
    const cplx s = beta_c * x1 + p.h.dot(x2);
    const CVector z = p.g * x1 - x2;
    const cplx u = s / sd;
    const cplx psi1 = ggd_score_clamped(unit, u);
    const cplx psi = psi1 / sd;
    // d loglik / d theta^*
    const CVector gg = std::conj(x1) * (psi * p.h - cinv * z);
    const CVector gh = std::conj(psi) * z;
    auto col = grads.col(j);
    col.segment(0, k) = 2.0 * gg.real();
    col.segment(k, k) = 2.0 * gg.imag();
    col.segment(2 * k, k) = 2.0 * gh.real();
    col.segment(3 * k, k) = 2.0 * gh.imag();
    col(4 * k) = (u * std::conj(psi1)).real() - 1.0;
    if (phase) col(4 * k + 1) = -2.0 * (u * std::conj(psi1)).imag();
    // Hermitian precision perturbations: tr((C - z z^H) E).
    const CMatrix resid = cov - z * z.adjoint();
    Eigen::Index idx = 4 * k + 1 + phase;
    for (Eigen::Index a = 0; a < k; ++a) {
      col(idx++) = resid(a, a).real();
      for (Eigen::Index b = a + 1; b < k; ++b) {
        col(idx++) = 2.0 * resid(a, b).real();
        col(idx++) = 2.0 * resid(a, b).imag();
      }
    }
  }
  const RMatrix fim = grads * grads.transpose() / static_cast<double>(n);
  const RMatrix bound = fim.ldlt().solve(RMatrix::Identity(np, np)).topLeftCorner(4 * k, 4 * k);
  // delta w = M1 delta theta + M2 conj(delta theta), delta theta = T delta theta_r
  CMatrix m1 = CMatrix::Zero(k + 1, 2 * k);
  CMatrix m2 = CMatrix::Zero(k + 1, 2 * k);
  m1.block(0, k, 1, k) = -p.g.adjoint();
  m1.block(1, k, k, k) = CMatrix::Identity(k, k);
  m2.block(0, 0, 1, k) = -p.h.transpose();
  CMatrix t = CMatrix::Zero(2 * k, 4 * k);
  const cplx i1(0.0, 1.0);
  for (Eigen::Index a = 0; a < 2 * k; ++a) {
    t(a, (a < k ? a : a + k)) = 1.0;
    t(a, (a < k ? a + k : a + 2 * k)) = i1;
  }
  const CMatrix r = m1 * t + m2 * t.conjugate();
  const CMatrix q = background_basis(p);
  return q.adjoint() * r * bound.cast<cplx>() * r.adjoint() * q;
}

}  // namespace

double equivariance_check(const IceParams& params, const GgdSpec& soi, const CMatrix& bg_cov,
                          std::size_t n_samples, std::uint64_t seed) {
  params.validate();
  if (std::abs(params.gamma - cplx(1.0)) > 1e-12)
    throw Error(ErrorCode::InvalidInput, "equivariance check expects the gamma = 1 scaling fix");
  const Eigen::Index k = params.g.size();
  Rng rng(seed);
  const CVector s = sample_ggd(soi, n_samples, rng);
  const CMatrix z = sample_complex_gaussian(bg_cov, n_samples, rng);
  CMatrix v(k + 1, static_cast<Eigen::Index>(n_samples));
  v.row(0) = s.transpose();
  v.bottomRows(k) = z;
  const IceParams identity = IceParams::from_gamma(cplx(1.0), CVector::Zero(k), CVector::Zero(k));
  const CMatrix at_true = q2_bound(params, ice_mixing(params) * v, soi, bg_cov);
  const CMatrix at_identity = q2_bound(identity, ice_mixing(identity) * v, soi, bg_cov);
  return linalg::rel_frobenius(at_true, at_identity);
}

}  // namespace bse
