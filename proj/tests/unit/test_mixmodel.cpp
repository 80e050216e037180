#include "bse/linalg.hpp"
#include "bse/mixmodel.hpp"
#include "bse/serialize.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

using namespace bse;

namespace {

IceParams random_params(int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.5, 2.0), ph(-M_PI, M_PI);
  const cplx gamma = std::polar(mag(rng), ph(rng));
  return IceParams::from_gamma(gamma, oracle::random_cvector(d - 1, rng, std::sqrt(0.5)),
                               oracle::random_cvector(d - 1, rng, std::sqrt(0.5)));
}

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

PiecewiseModel identity_model(int d, std::size_t nb, const CMatrix& cz) {
  PiecewiseModel m;
  BlockSpec b;
  b.ice = IceParams::from_gamma(1.0, CVector::Zero(d - 1), CVector::Zero(d - 1));
  b.soi = {2.0, 0.0, 1.0};
  b.bg_cov = cz;
  m.blocks.push_back(b);
  m.n_per_block = nb;
  return m;
}

}  // namespace

TEST(IceMixing, IdentityParameters) {
  const IceParams p = IceParams::from_gamma(1.0, CVector::Zero(2), CVector::Zero(2));
  CMatrix expect = CMatrix::Zero(3, 3);
  expect.diagonal() << 1.0, -1.0, -1.0;
  EXPECT_EQ(ice_mixing(p), expect);
  EXPECT_EQ(ice_demixing(p), expect);
}

TEST(IceMixing, ScaledGamma) {
  const IceParams p = IceParams::from_gamma(2.0, CVector::Zero(2), CVector::Zero(2));
  const CMatrix a = ice_mixing(p);
  EXPECT_EQ(a.col(0), (CVector(3) << 2.0, 0.0, 0.0).finished());
  EXPECT_LT((a.bottomRightCorner(2, 2) + 0.5 * CMatrix::Identity(2, 2)).norm(), 1e-15);
}

// 1000 random draws per dimension
TEST(IceMixing, DemixingInvertsMixingAndDeterminant) {
  std::mt19937_64 rng(2024);
  for (int d : {2, 3, 5, 8}) {
    double worst_inv = 0.0, worst_det = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const IceParams p = random_params(d, rng);
      const CMatrix a = ice_mixing(p);
      const CMatrix w = ice_demixing(p);
      worst_inv = std::max(worst_inv, max_abs(w * a - CMatrix::Identity(d, d)));
      const cplx expect = (d % 2 == 1 ? 1.0 : -1.0) * std::pow(p.gamma, d - 2);
      worst_det = std::max(worst_det, std::abs(w.determinant() - expect) / std::abs(expect));
    }
    EXPECT_LT(worst_inv, 1e-12) << "d=" << d;
    EXPECT_LT(worst_det, 1e-10) << "d=" << d;
  }
}

TEST(IceMixing, DemixingMatchesNumericInverse) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    const IceParams p = random_params(4, rng);
    const CMatrix a = ice_mixing(p);
    EXPECT_LT(max_abs(ice_demixing(p) - a.fullPivLu().inverse()), 1e-11);
  }
}

TEST(IceMixing, BlockingAndBackgroundConditions) {
  std::mt19937_64 rng(8);
  for (int d : {2, 4, 6}) {
    for (int t = 0; t < 100; ++t) {
      const IceParams p = random_params(d, rng);
      const CVector a = mixing_vector(p);
      const CVector w = separating_vector(p);
      const CMatrix b = blocking_matrix(p);
      const CMatrix q = background_basis(p);
      EXPECT_LT((b * a).norm(), 1e-12);
      EXPECT_LT((w.adjoint() * q).norm(), 1e-12);
      EXPECT_NEAR(std::abs(w.dot(a) - 1.0), 0.0, 1e-12);
      EXPECT_LT(max_abs(b * q - CMatrix::Identity(d - 1, d - 1)), 1e-12);
      EXPECT_LT(p.link_residual(), 1e-12);
    }
  }
}

TEST(IceMixing, BetaParameterizationSatisfiesLink) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 100; ++t) {
    const CVector g = oracle::random_cvector(3, rng, 0.3);
    const CVector h = oracle::random_cvector(3, rng, 0.3);
    const IceParams p = IceParams::from_beta(cplx(0.7, -0.2), g, h);
    EXPECT_NEAR(std::abs(std::conj(p.beta) * p.gamma - (1.0 - h.dot(g))), 0.0, 1e-13);
    EXPECT_LT(max_abs(ice_demixing(p) * ice_mixing(p) - CMatrix::Identity(4, 4)), 1e-12);
  }
}

TEST(IceMixing, ZeroGammaRejected) {
  try {
    IceParams::from_gamma(0.0, CVector::Zero(2), CVector::Zero(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularParameterization);
  }
}

TEST(CsvGamma, ReferenceCases) {
  EXPECT_EQ(csv_gamma(CVector::Zero(3), CVector::Ones(3)), cplx(1.0));
  CVector e1 = CVector::Zero(3);
  e1(0) = 1.0;
  try {
    csv_gamma(e1, e1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateBlock);
  }
}

TEST(CsvGamma, RebuiltBlockIsInvertible) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 200; ++t) {
    const CVector h = oracle::random_cvector(4, rng, 0.4);
    const CVector g = oracle::random_cvector(4, rng, 0.4);
    const cplx gm = csv_gamma(h, g);
    EXPECT_NEAR(std::abs(gm - (1.0 - h.dot(g))), 0.0, 1e-14);
    const IceParams p = IceParams::from_gamma(gm, g, h);
    EXPECT_NEAR(std::abs(p.beta - 1.0), 0.0, 1e-12);
    EXPECT_LT(max_abs(ice_demixing(p) * ice_mixing(p) - CMatrix::Identity(5, 5)), 1e-11);
  }
}

TEST(RandomModel, RawFrameBackgroundHasUnitEntryPower) {
  // The background part Q C_z Q^H of a raw draw is R R^H for a d x (d-1)
  // matrix R of CN(0,1) entries, whose expected trace is d(d-1).
  RandomModelOptions o;
  o.dim = 5;
  double acc = 0.0;
  const int draws = 2000;
  for (int t = 0; t < draws; ++t) {
    const PiecewiseModel m = random_model(o, static_cast<std::uint64_t>(t));
    const BlockSpec& b = m.blocks.front();
    EXPECT_EQ(b.ice.gamma, cplx(1.0));
    const CMatrix q = background_basis(b.ice);
    acc += (q * b.bg_cov * q.adjoint()).trace().real();
  }
  EXPECT_NEAR(acc / draws / 20.0, 1.0, 0.03);
}

TEST(RandomModel, ConstantMixingVectorIsShared) {
  for (auto frame : {BackgroundFrame::Raw, BackgroundFrame::Canonical}) {
    RandomModelOptions o;
    o.dim = 3;
    o.blocks = 4;
    o.sharing = Sharing::ConstantMixingVector;
    o.frame = frame;
    const PiecewiseModel m = random_model(o, 5);
    for (const auto& b : m.blocks) {
      EXPECT_EQ(b.ice.gamma, m.blocks.front().ice.gamma);
      EXPECT_EQ(b.ice.g, m.blocks.front().ice.g);
    }
    EXPECT_NE(m.blocks[0].ice.h, m.blocks[1].ice.h);
  }
}

TEST(RandomModel, ConstantSeparatingVectorIsShared) {
  for (auto frame : {BackgroundFrame::Raw, BackgroundFrame::Canonical}) {
    RandomModelOptions o;
    o.dim = 3;
    o.blocks = 4;
    o.sharing = Sharing::ConstantSeparatingVector;
    o.frame = frame;
    const PiecewiseModel m = random_model(o, 6);
    const CVector w0 = ice_demixing(m.blocks.front().ice).row(0);
    for (const auto& b : m.blocks) {
      EXPECT_LT((CVector(ice_demixing(b.ice).row(0)) - w0).norm(), 1e-14);
      EXPECT_EQ(b.ice.beta, cplx(1.0));
    }
  }
}

TEST(RandomModel, Reproducible) {
  RandomModelOptions o;
  o.blocks = 3;
  o.sharing = Sharing::ConstantMixingVector;
  EXPECT_EQ(to_json(random_model(o, 42)).dump(), to_json(random_model(o, 42)).dump());
  EXPECT_NE(to_json(random_model(o, 42)).dump(), to_json(random_model(o, 43)).dump());
}

TEST(RandomModel, RejectsBadOptions) {
  RandomModelOptions o;
  o.dim = 1;
  EXPECT_THROW(random_model(o, 1), Error);
  o.dim = 3;
  o.blocks = 2;
  o.soi = {GgdSpec{}, GgdSpec{}, GgdSpec{}};
  EXPECT_THROW(random_model(o, 1), Error);
}

TEST(PiecewiseModel, ValidateRejectsBrokenSharing) {
  RandomModelOptions o;
  o.dim = 3;
  o.blocks = 2;
  o.sharing = Sharing::ConstantMixingVector;
  PiecewiseModel m = random_model(o, 3);
  m.blocks[1].ice = IceParams::from_gamma(1.0, m.blocks[1].ice.g + CVector::Ones(2), m.blocks[1].ice.h);
  EXPECT_THROW(m.validate(), Error);
}

TEST(Synthesize, IdentityMixingGivesSourceAndNegatedBackground) {
  const Dataset ds = synthesize(identity_model(3, 500, CMatrix::Identity(2, 2)), 4);
  EXPECT_EQ(CVector(ds.observations.row(0).transpose()), ds.soi.front());
  EXPECT_EQ(CMatrix(ds.observations.bottomRows(2)), CMatrix(-ds.background.front()));
}

TEST(Synthesize, BlockingRecoversBackground) {
  RandomModelOptions o;
  o.dim = 4;
  o.n_per_block = 10000;
  const PiecewiseModel m = random_model(o, 12);
  const Dataset ds = synthesize(m, 13);
  const CMatrix z = blocking_matrix(m.blocks.front().ice) * ds.block(0);
  EXPECT_LT((z - ds.background.front()).norm() / z.norm(), 1e-12);
  const CMatrix c = z * z.adjoint() / 10000.0;
  EXPECT_LT(linalg::rel_frobenius(c, m.blocks.front().bg_cov), 0.05);
}

TEST(Synthesize, BlockCovariancesFollowTheirBackgrounds) {
  PiecewiseModel m = identity_model(3, 20000, CMatrix::Identity(2, 2));
  m.blocks.push_back(m.blocks.front());
  m.blocks[1].bg_cov = 4.0 * CMatrix::Identity(2, 2);
  const Dataset ds = synthesize(m, 5);
  for (int k = 0; k < 2; ++k) {
    const CMatrix z = ds.block(k).bottomRows(2);
    const CMatrix c = z * z.adjoint() / 20000.0;
    EXPECT_LT(linalg::rel_frobenius(c, m.blocks[static_cast<std::size_t>(k)].bg_cov), 0.05);
  }
}

TEST(Synthesize, Reproducible) {
  RandomModelOptions o;
  o.blocks = 2;
  o.sharing = Sharing::ConstantSeparatingVector;
  o.n_per_block = 300;
  const PiecewiseModel m = random_model(o, 1);
  const CMatrix a = synthesize(m, 77).observations;
  const CMatrix b = synthesize(m, 77).observations;
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(cplx) * a.size()), 0);
}
