#include "bse/crlb.hpp"
#include "bse/linalg.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace bse;

namespace {

constexpr double kPi = std::numbers::pi;

SourceStats src_of(double kbar, double var = 1.0) {
  SourceStats s;
  s.sigma2 = var;
  s.kappa_bar = kbar;
  s.kappa = kbar / var;
  return s;
}

CMatrix eye(Eigen::Index k) { return CMatrix::Identity(k, k); }

std::vector<BlockBound> iid_blocks(int m, int d, double kbar, double var = 1.0) {
  return std::vector<BlockBound>(static_cast<std::size_t>(m), BlockBound{src_of(kbar, var), eye(d - 1)});
}

std::vector<BlockStats> to_stats(const std::vector<BlockBound>& bb) {
  std::vector<BlockStats> out;
  for (const auto& b : bb) out.push_back({b.src, bg_stats_gaussian(b.cz)});
  return out;
}

double brute(const FimBlocks& fim, Sharing sharing, const std::vector<BlockBound>& bb, std::size_t nb) {
  std::vector<CMatrix> cz;
  std::vector<double> s2;
  for (const auto& b : bb) {
    cz.push_back(b.cz);
    s2.push_back(b.src.sigma2);
  }
  return oracle::brute_force_crib(fim, nb, oracle::h_slots(sharing, static_cast<int>(bb.size())), cz, s2);
}

// Random admissible block statistics: GGD SOI with random shape, circularity
// and power, random background covariance.
std::vector<BlockBound> random_blocks(int m, int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> alpha(0.4, 4.0), circ(0.0, 0.7), var(0.3, 3.0);
  std::vector<BlockBound> out;
  for (int i = 0; i < m; ++i) {
    double a = alpha(rng);
    if (std::abs(a - 1.0) < 0.05) a = 1.5;
    out.push_back({source_stats({a, circ(rng), var(rng)}), oracle::random_hpd(d - 1, rng)});
  }
  return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

// --- Fisher information ------------------------------------------------------------

TEST(FimIce, GaussianSourceIsSingular) {
  const FimBlocks f = fim_ice(source_stats({1.0, 0.0, 1.0}), bg_stats_gaussian(eye(2)));
  CMatrix expect(4, 4);
  expect << eye(2), -eye(2), -eye(2), eye(2);
  EXPECT_LT((f.F - expect).norm(), 1e-14);
  EXPECT_LT(f.P.norm(), 1e-14);
  EXPECT_LT(linalg::eig_ratio(f.augmented()), 1e-12);
}

TEST(FimIce, NonGaussianSourceIsPositiveDefinite) {
  const FimBlocks f = fim_ice(source_stats({2.0, 0.0, 1.0}), bg_stats_gaussian(eye(3)));
  CMatrix expect(6, 6);
  expect << eye(3), -eye(3), -eye(3), (4.0 / kPi) * eye(3);
  EXPECT_LT((f.F - expect).norm(), 1e-12);
  EXPECT_TRUE(linalg::is_hermitian_pd(f.augmented()));
}

TEST(FimIce, CircularBackgroundGivesZeroPseudoInformation) {
  for (double circ : {0.0, 0.3, 0.9}) {
    const FimBlocks f = fim_ice(source_stats({0.7, circ, 2.0}), bg_stats_gaussian(2.0 * eye(2)));
    EXPECT_LT(f.P.norm(), 1e-14) << circ;
  }
}

TEST(FimEmpirical, IceMatchesClosedForm) {
  RandomModelOptions o;
  o.dim = 3;
  o.frame = BackgroundFrame::Canonical;
  const PiecewiseModel m = random_model(o, 3);
  const FimBlocks closed = fim_closed_form(m);
  const FimBlocks emp = fim_empirical(m, 1000000, 4);
  EXPECT_LT(linalg::rel_frobenius(emp.F, closed.F), 0.02);
  EXPECT_LT(emp.P.norm() / closed.F.norm(), 0.02);
}

TEST(FimEmpirical, BlockStructureOfSharedModels) {
  for (auto sharing : {Sharing::ConstantMixingVector, Sharing::ConstantSeparatingVector}) {
    RandomModelOptions o;
    o.dim = 3;
    o.blocks = 2;
    o.sharing = sharing;
    o.frame = BackgroundFrame::Canonical;
    const PiecewiseModel m = random_model(o, 9);
    const FimBlocks emp = fim_empirical(m, 200000, 10);
    const FimBlocks closed = fim_closed_form(m);
    ASSERT_EQ(emp.layout.size(), 3u);
    for (int b = 1; b <= 2; ++b) {
      const std::string shared = sharing == Sharing::ConstantMixingVector ? "g" : "h";
      const std::string own = (sharing == Sharing::ConstantMixingVector ? "h^" : "g^") + std::to_string(b);
      const ParamSlot& s = emp.slot(shared);
      const ParamSlot& o2 = emp.slot(own);
      const CMatrix blk = emp.F.block(s.offset, o2.offset, s.size, o2.size);
      EXPECT_LT((blk + eye(2)).norm(), 0.05) << to_string(sharing) << " block " << b;
      EXPECT_LT((closed.F.block(s.offset, o2.offset, s.size, o2.size) + eye(2)).norm(), 1e-14);
    }
    EXPECT_LT(linalg::rel_frobenius(emp.F, closed.F), 0.03);
  }
}

// --- single-block bounds ------------------------------------------------------------

TEST(CrlbH, ReferenceValues) {
  EXPECT_LT((crlb_h_gauss(src_of(2.0), eye(3)) - eye(3)).norm(), 1e-14);
  const CMatrix c = crlb_h_gauss(source_stats({2.0, 0.0, 1.0}), 2.0 * eye(2));
  EXPECT_NEAR(c(0, 0).real(), 1.0 / (4.0 / kPi - 1.0) / 2.0, 1e-12);
  EXPECT_NEAR(c(0, 0).real(), 1.83, 0.01);
  try {
    crlb_h_gauss(src_of(1.0), eye(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unidentifiable);
  }
}

TEST(CribIceGauss, ReferenceValues) {
  const CribReport r = crib_ice_gauss(5, 2500, 4.0 / kPi);
  EXPECT_NEAR(r.value, 4.0 / (2500 * (4.0 / kPi - 1.0)), 1e-15);
  EXPECT_NEAR(r.value, 5.857e-3, 2e-6);
  EXPECT_NEAR(r.value_db, -22.32, 0.01);
  EXPECT_DOUBLE_EQ(crib_ice_gauss(2, 1, 2.0).value, 1.0);
  const CribReport u = crib_ice_gauss(5, 2500, 1.0);
  EXPECT_FALSE(u.identifiable);
  EXPECT_TRUE(std::isinf(u.value));
}

TEST(CribIceCircular, IndependentBackgroundSumsPerComponentTerms) {
  const SourceStats s = source_stats({2.0, 0.0, 1.0});
  const std::vector<double> kb = {1.0, 1.3, 2.5};
  CMatrix kt = CMatrix::Zero(3, 3);
  double expect = 0.0;
  for (int j = 0; j < 3; ++j) {
    kt(j, j) = kb[static_cast<std::size_t>(j)];
    expect += kb[static_cast<std::size_t>(j)] / (s.kappa_bar * kb[static_cast<std::size_t>(j)] - 1.0) / 1000.0;
  }
  EXPECT_NEAR(crib_ice_circular(s, kt, 1000).value, expect, 1e-15);
}

TEST(CribIceCircular, GaussianBackgroundReducesToGaussCase) {
  const SourceStats s = source_stats({0.5, 0.2, 1.0});
  EXPECT_NEAR(crib_ice_circular(s, eye(4), 777).value, crib_ice_gauss(5, 777, s.kappa_bar).value, 1e-15);
}

TEST(CribIceCircular, MatchesFullInverse) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    const CMatrix kt = oracle::random_hpd(2, rng);
    const CMatrix c = oracle::random_hpd(2, rng);
    const SourceStats s = source_stats({1.8, 0.0, 1.7});
    BgStats bg = bg_stats_gaussian(c);
    const CMatrix ci = linalg::inv_sqrtm_hpd(c);
    bg.kappa_z = ci * kt * ci;
    const double b = oracle::brute_force_crib(fim_ice(s, bg), 500, {"h"}, {c}, {s.sigma2});
    EXPECT_LT(rel(crib_ice_circular(s, kt, 500).value, b), 1e-8);
  }
}

// --- piecewise bounds ---------------------------------------------------------------

TEST(CribPiecewise, SingleBlockCoincidesWithIce) {
  for (double kbar : {1.2, 4.0 / kPi, 3.0}) {
    const double ice = crib_ice_gauss(4, 900, kbar).value;
    const auto bb = iid_blocks(1, 4, kbar);
    EXPECT_NEAR(crib_bice({bb[0].src}, 4, 900).value, ice, 1e-12 * ice);
    EXPECT_NEAR(crib_cmv(bb, 900).value, ice, 1e-12 * ice);
    EXPECT_NEAR(crib_csv(bb, 900).value, ice, 1e-12 * ice);
  }
}

TEST(CribPiecewise, IidSourceClosedForms) {
  const int d = 5, m = 4;
  const double kbar = 1.7;
  const std::size_t nb = 250, n = nb * m;
  const auto bb = iid_blocks(m, d, kbar);
  std::vector<SourceStats> src(m, src_of(kbar));
  EXPECT_NEAR(crib_bice(src, d, nb).value, double(m) / n * (d - 1) / (kbar - 1), 1e-15);
  EXPECT_NEAR(crib_cmv(bb, nb).value, (d - 1.0) / n * (1 / (kbar - 1) + (m - 1) / kbar), 1e-15);
  EXPECT_NEAR(crib_csv(bb, nb).value, 1.0 / n * (d - 1) / (kbar - 1), 1e-15);
}

TEST(CribPiecewise, ArithmeticExamples) {
  EXPECT_NEAR(crib_bice({src_of(2.0), src_of(2.0)}, 5, 500).value, 8e-3, 1e-15);
  EXPECT_NEAR(crib_cmv(iid_blocks(2, 5, 2.0), 500).value, 6e-3, 1e-15);
  EXPECT_NEAR(crib_csv(iid_blocks(4, 5, 2.0), 250).value, 4e-3, 1e-15);
}

TEST(CribPiecewise, CsvIsIndependentOfBlockCount) {
  const double ref = crib_csv(iid_blocks(1, 5, 1.5), 5040).value;
  for (int m : {2, 5, 10}) EXPECT_NEAR(crib_csv(iid_blocks(m, 5, 1.5), 5040 / m).value, ref, 1e-14);
}

TEST(CribPiecewise, VaryingVarianceHelpsCsv) {
  std::vector<BlockBound> vary = {{src_of(1.5, 1.0), eye(3)}, {src_of(1.5, 2.0), eye(3)}, {src_of(1.5, 3.0), eye(3)}};
  EXPECT_LT(crib_csv(vary, 400).value, crib_csv(iid_blocks(3, 4, 1.5, 2.0), 400).value);
  EXPECT_GT(crib_cmv(vary, 400).value, crib_cmv(iid_blocks(3, 4, 1.5, 2.0), 400).value);
}

TEST(CribPiecewise, StrictOrderingForIidSources) {
  for (int m : {2, 3, 7})
    for (double kbar : {1.05, 1.5, 4.0}) {
      const auto bb = iid_blocks(m, 4, kbar);
      const double csv = crib_csv(bb, 100).value, cmv = crib_cmv(bb, 100).value;
      const double bice = crib_bice(std::vector<SourceStats>(m, src_of(kbar)), 4, 100).value;
      EXPECT_LT(csv, cmv);
      EXPECT_LT(cmv, bice);
    }
}

TEST(CribPiecewise, GaussianEverywhereIsUnidentifiable) {
  const auto bb = iid_blocks(3, 3, 1.0);
  EXPECT_FALSE(crib_cmv(bb, 10).identifiable);
  EXPECT_FALSE(crib_csv(bb, 10).identifiable);
  EXPECT_FALSE(crib_bice({bb[0].src, bb[1].src, bb[2].src}, 3, 10).identifiable);
}

TEST(CribPiecewise, BiceNeedsEveryBlockNonGaussian) {
  const CribReport r = crib_bice({src_of(2.0), src_of(1.0)}, 3, 10);
  EXPECT_FALSE(r.identifiable);
}

TEST(CribPiecewise, ClosedFormsMatchFullInverse) {
  std::mt19937_64 rng(33);
  for (int d : {2, 3})
    for (int m : {1, 2, 3})
      for (int t = 0; t < 10; ++t) {
        const auto bb = random_blocks(m, d, rng);
        const auto st = to_stats(bb);
        std::vector<SourceStats> src;
        for (const auto& b : bb) src.push_back(b.src);
        const std::size_t nb = 300;
        EXPECT_LT(rel(crib_bice(src, d, nb).value, brute(fim_bice(st), Sharing::Independent, bb, nb)), 1e-8);
        EXPECT_LT(rel(crib_cmv(bb, nb).value, brute(fim_cmv(st), Sharing::ConstantMixingVector, bb, nb)), 1e-8);
        EXPECT_LT(rel(crib_csv(bb, nb).value, brute(fim_csv(st), Sharing::ConstantSeparatingVector, bb, nb)), 1e-8);
      }
}

// --- trace factors -----------------------------------------------------------------

TEST(TFactors, ConstantVarianceEquality) {
  for (int m : {1, 2, 5}) {
    const TFactors t = t_factors(iid_blocks(m, 5, 2.0, 1.7));
    EXPECT_NEAR(t.t_cmv, 4.0 / m, 1e-12);
    EXPECT_NEAR(t.t_csv, 4.0 / m, 1e-12);
  }
}

// Varying SOI power over a common background covariance.
TEST(TFactors, BoundsHoldOverRandomConfigurations) {
  std::mt19937_64 rng(44);
  std::uniform_int_distribution<int> dd(2, 6), mm(1, 8);
  std::uniform_real_distribution<double> var(0.1, 10.0);
  for (int t = 0; t < 1000; ++t) {
    const int d = dd(rng), m = mm(rng);
    const CMatrix c = oracle::random_hpd(d - 1, rng);
    std::vector<BlockBound> bb;
    for (int i = 0; i < m; ++i) bb.push_back({src_of(1.5, var(rng)), c});
    const TFactors f = t_factors(bb);
    const double lo = (d - 1.0) / m;
    EXPECT_GE(f.t_cmv, lo * (1 - 1e-12));
    EXPECT_LE(f.t_cmv, (d - 1) * (1 + 1e-12));
    EXPECT_LE(f.t_csv, lo * (1 + 1e-12));
  }
}

// When the background covariance changes together with the SOI power the
// inequalities no longer hold.
TEST(TFactors, BlockVaryingBackgroundCanCrossTheBounds) {
  std::vector<BlockBound> bb = {{src_of(1.5, 1.0), eye(2)}, {src_of(1.5, 4.0), 8.0 * eye(2)}};
  const TFactors f = t_factors(bb);
  EXPECT_LT(f.t_cmv, 2.0 / 2.0);
  EXPECT_GT(f.t_csv, 2.0 / 2.0);
}

TEST(TFactors, RecomposeVaryingVarianceBounds) {
  std::mt19937_64 rng(45);
  const double kbar = 1.6;
  for (int t = 0; t < 20; ++t) {
    const int d = 3 + t % 3, m = 2 + t % 4;
    std::vector<BlockBound> bb;
    std::uniform_real_distribution<double> var(0.2, 5.0);
    for (int i = 0; i < m; ++i) bb.push_back({src_of(kbar, var(rng)), oracle::random_hpd(d - 1, rng)});
    const std::size_t nb = 200, n = nb * m;
    const TFactors f = t_factors(bb);
    const double cmv = m * (d - 1.0) / (n * kbar) + m / (n * kbar * (kbar - 1)) * f.t_cmv;
    const double csv = m / (n * (kbar - 1)) * f.t_csv;
    EXPECT_LT(rel(crib_cmv(bb, nb).value, cmv), 1e-12);
    EXPECT_LT(rel(crib_csv(bb, nb).value, csv), 1e-12);
  }
}

TEST(TFactors, TwoBlockExample) {
  std::vector<BlockBound> bb = {{src_of(2.0, 1.0), eye(2)}, {src_of(2.0, 4.0), eye(2)}};
  const TFactors f = t_factors(bb);
  // (sum C/sigma^2)^{-1} sum C / sum sigma^2 = 2 * (1/(1 + 1/4)) * 2 / 5
  EXPECT_NEAR(f.t_csv, 2.0 * (1.0 / 1.25) * 2.0 / 5.0, 1e-14);
  EXPECT_NEAR(crib_csv(bb, 100).value, 2.0 / (200 * 1.0) * f.t_csv, 1e-15);
}

// --- special cases -----------------------------------------------------------------

TEST(SpecialAllButOne, MatchesGeneralFormula) {
  std::mt19937_64 rng(51);
  for (int m : {1, 2, 3}) {
    std::vector<BlockBound> bb;
    for (int i = 0; i < m; ++i) bb.push_back({src_of(1.0, 0.5 + i), oracle::random_hpd(2, rng)});
    const int k = m - 1;
    bb[static_cast<std::size_t>(k)].src = source_stats({2.5, 0.3, 1.2});
    const auto r = crib_special_allbutone_gaussian(bb, k, 400);
    EXPECT_LT(rel(r.cmv.value, crib_cmv(bb, 400).value), 1e-12);
    EXPECT_LT(rel(r.csv.value, crib_csv(bb, 400).value), 1e-12);
    EXPECT_LT(rel(r.csv.value, brute(fim_csv(to_stats(bb)), Sharing::ConstantSeparatingVector, bb, 400)), 1e-8);
    if (m == 1) {
      EXPECT_LT(rel(r.cmv.value, crib_ice_gauss(3, 400, bb[0].src.kappa_bar).value), 1e-12);
    }
  }
}

TEST(SpecialAllButOne, TwoBlockExample) {
  std::vector<BlockBound> bb = {{src_of(2.0), eye(2)}, {src_of(1.0), eye(2)}};
  const auto r = crib_special_allbutone_gaussian(bb, 0, 500);
  // (1/500)(1/2)(1/(2-1)) tr(I * 2I)
  EXPECT_NEAR(r.csv.value, 1.0 / 500 * 0.5 * 4.0, 1e-15);
}

TEST(SpecialAllButOne, Preconditions) {
  std::vector<BlockBound> bb = {{src_of(1.0), eye(2)}, {src_of(1.0), eye(2)}};
  const auto r = crib_special_allbutone_gaussian(bb, 0, 100);
  EXPECT_FALSE(r.cmv.identifiable);
  EXPECT_FALSE(r.csv.identifiable);
  bb[1].src = src_of(1.5);
  bb[0].src = src_of(1.5);
  try {
    crib_special_allbutone_gaussian(bb, 0, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WrongSpecialCase);
  }
}

TEST(SpecialVanishing, BiceAndCsvDoNotExist) {
  std::vector<BlockBound> bb = {{src_of(1.0), eye(2)}, {src_of(1.8), eye(2)}};
  const auto r = crib_special_vanishing_bg(bb, 1, eye(2), 100);
  EXPECT_FALSE(r.bice.identifiable);
  EXPECT_FALSE(r.csv.identifiable);
  EXPECT_TRUE(r.cmv.identifiable);
}

TEST(SpecialVanishing, SingleBlockIsCmvWithScaledBackground) {
  const SourceStats s = src_of(1.4);
  const auto r = crib_special_vanishing_bg({{s, eye(3)}}, 0, eye(3), 250);
  const double expect = crib_cmv({{s, (s.kappa_bar - 1) / s.kappa * eye(3)}}, 250).value;
  EXPECT_NEAR(r.cmv.value, expect, 1e-14);
}

TEST(SpecialVanishing, TraceTermIsLinearInT) {
  std::mt19937_64 rng(61);
  std::vector<BlockBound> bb = {{src_of(1.0, 2.0), oracle::random_hpd(3, rng)},
                                {src_of(1.3), eye(3)},
                                {src_of(1.0, 0.5), oracle::random_hpd(3, rng)}};
  const CMatrix t = oracle::random_hpd(3, rng);
  const std::size_t nb = 100;
  // affine in T: a constant part plus a trace term linear in T
  auto f = [&](double c) { return crib_special_vanishing_bg(bb, 1, c * t, nb).cmv.value; };
  EXPECT_NEAR(f(3.0) - f(1.0), 2.0 * (f(2.0) - f(1.0)), 1e-12 * f(3.0));
  EXPECT_GT(f(2.0), f(1.0));
}

// The special case is crib_cmv with C_k = (kbar_k - 1)/kappa_k T substituted.
// As block k approaches Gaussian both CMV and CSV grow without bound, CSV faster.
TEST(SpecialVanishing, EqualsCmvAtSubstitutedBackground) {
  const CMatrix t = 2.0 * eye(2);
  double prev_cmv = 0.0, prev_csv = 0.0;
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    const SourceStats sk = src_of(1.0 + eps);
    std::vector<BlockBound> bb = {{src_of(1.0), eye(2)}, {sk, eps / sk.kappa * t}};
    const double cmv = crib_cmv(bb, 100).value;
    EXPECT_LT(rel(cmv, crib_special_vanishing_bg(bb, 1, t, 100).cmv.value), 1e-9);
    const double csv = crib_csv(bb, 100).value;
    EXPECT_GT(cmv, 50.0 * prev_cmv);
    EXPECT_GT(csv, 50.0 * prev_csv);
    EXPECT_GT(csv, cmv);
    prev_cmv = cmv;
    prev_csv = csv;
  }
}

// --- numeric bound at arbitrary parameters ---------------------------------------

TEST(GeneralPoint, ReproducesClosedFormsAtIdentity) {
  for (auto sharing : {Sharing::ConstantMixingVector, Sharing::ConstantSeparatingVector}) {
    PiecewiseModel m;
    m.sharing = sharing;
    m.n_per_block = 500;
    for (int b = 0; b < 2; ++b) {
      BlockSpec s;
      s.ice = sharing == Sharing::ConstantSeparatingVector
                  ? IceParams::from_beta(1.0, CVector::Zero(2), CVector::Zero(2))
                  : IceParams::from_gamma(1.0, CVector::Zero(2), CVector::Zero(2));
      s.soi = {2.0, 0.0, 1.0 + b};
      s.bg_cov = (1.0 + 0.5 * b) * eye(2);
      m.blocks.push_back(s);
    }
    m.scaling_fix = sharing == Sharing::ConstantSeparatingVector ? "beta=1" : "gamma=1";
    std::vector<BlockBound> bb;
    for (const auto& b : m.blocks) bb.push_back({source_stats(b.soi), b.bg_cov});
    const double closed = sharing == Sharing::ConstantMixingVector ? crib_cmv(bb, 500).value : crib_csv(bb, 500).value;
    const CribReport r = crib_general_point(m, 400000, 3);
    EXPECT_LT(rel(r.value, closed), 0.04) << to_string(sharing);
  }
}

TEST(GeneralPoint, IceBoundIsEquivariant) {
  RandomModelOptions o;
  o.dim = 3;
  o.n_per_block = 1000;
  const PiecewiseModel m = random_model(o, 8);
  const double closed = crib_ice_gauss(3, 1000, ggd_kappa_bar(o.soi.front())).value;
  EXPECT_LT(rel(crib_general_point(m, 400000, 4).value, closed), 0.05);
}

TEST(GeneralPoint, RejectsDependentBackground) {
  RandomModelOptions o;
  o.dim = 3;
  o.dep_bg = DependentBgSpec{2.0, 2};
  EXPECT_THROW(crib_general_point(random_model(o, 1), 10000, 1), Error);
}

// --- equivariance ------------------------------------------------------------------

TEST(Equivariance, IdentityIsExact) {
  const IceParams p = IceParams::from_gamma(1.0, CVector::Zero(3), CVector::Zero(3));
  EXPECT_LT(equivariance_check(p, {2.0, 0.0, 1.0}, eye(3), 10000, 1), 1e-12);
}

// Same draws on both sides, so the identity is exact at any sample size.
TEST(Equivariance, RandomPointMatchesIdentity) {
  std::mt19937_64 rng(71);
  const IceParams p =
      IceParams::from_gamma(1.0, oracle::random_cvector(2, rng, 0.5), oracle::random_cvector(2, rng, 0.5));
  const double small = equivariance_check(p, {2.0, 0.0, 1.0}, eye(2), 10000, 2);
  const double large = equivariance_check(p, {2.0, 0.0, 1.0}, eye(2), 1000000, 2);
  EXPECT_LT(small, 1e-10);
  EXPECT_LT(large, 1e-10);
}
