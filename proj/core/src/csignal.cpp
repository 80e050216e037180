#include "bse/csignal.hpp"

#include "bse/linalg.hpp"

#include <atomic>
#include <cmath>
#include <numbers>

namespace bse {

namespace {

constexpr double kClampRadius = 1e-12;
std::atomic<std::uint64_t> g_clamp_events{0};

double ggd_rho(double alpha) { return std::tgamma(2.0 / alpha) / std::tgamma(1.0 / alpha); }

cplx standard_normal_c(Rng& rng) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  const double re = nd(rng);
  const double im = nd(rng);
  return {re, im};
}

// Unit-variance score evaluated at the standardized point s.
cplx unit_score(double alpha, double circ, cplx s) {
  const double rho = ggd_rho(alpha);
  const double x = s.real();
  const double y = s.imag();
  const double q = rho * (x * x / (1.0 + circ) + y * y / (1.0 - circ));
  const double mag = alpha * rho * std::pow(q, alpha - 1.0);
  return mag * cplx(x / (1.0 + circ), y / (1.0 - circ));
}

}  // namespace

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void GgdSpec::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw Error(ErrorCode::InvalidSpec, "GGD shape must be positive");
  if (!(circ >= 0.0 && circ <= 1.0))
    throw Error(ErrorCode::InvalidSpec, "circularity coefficient must lie in [0,1]");
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw Error(ErrorCode::InvalidSpec, "variance must be positive");
  if (circ >= 1.0)
    throw Error(ErrorCode::UnsupportedSpec, "circularity 1 has degenerate real-line support");
}

void DependentBgSpec::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw Error(ErrorCode::InvalidSpec, "dependent background shape must be positive");
  if (dim < 1) throw Error(ErrorCode::InvalidSpec, "dependent background dimension must be >= 1");
}

double DependentBgSpec::lambda() const {
  // E|z_i|^2 = Gamma((D+1)/alpha) / (D Gamma(D/alpha) lambda) = 1
  const double d = dim;
  return std::exp(std::lgamma((d + 1.0) / alpha) - std::lgamma(d / alpha)) / d;
}

CVector sample_ggd(const GgdSpec& spec, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_ggd(spec, n, rng);
}

CVector sample_ggd(const GgdSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  const double rho = ggd_rho(spec.alpha);
  std::gamma_distribution<double> gamma(1.0 / spec.alpha, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double re_scale = std::sqrt(spec.variance * (1.0 + spec.circ));
  const double im_scale = std::sqrt(spec.variance * (1.0 - spec.circ));
  CVector out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = gamma(rng);
    const double r = std::sqrt(std::pow(t, 1.0 / spec.alpha) / rho);
    const double phi = phase(rng);
    out(static_cast<Eigen::Index>(i)) = cplx(re_scale * r * std::cos(phi), im_scale * r * std::sin(phi));
  }
  return out;
}

double ggd_log_pdf(const GgdSpec& spec, cplx s) {
  const double a = spec.alpha;
  const double g = spec.circ;
  const double rho = ggd_rho(a);
  const double sd = std::sqrt(spec.variance);
  const double x = s.real() / sd;
  const double y = s.imag() / sd;
  const double q = rho * (x * x / (1.0 + g) + y * y / (1.0 - g));
  return std::log(a * rho) - std::log(std::numbers::pi) - std::lgamma(1.0 / a) -
         0.5 * std::log(1.0 - g * g) - std::pow(q, a) - std::log(spec.variance);
}

cplx ggd_score(const GgdSpec& spec, cplx s) {
  if (spec.alpha < 1.0 && s == cplx(0.0))
    throw Error(ErrorCode::SingularPoint, "GGD score is singular at the origin for alpha < 1");
  const double sd = std::sqrt(spec.variance);
  return unit_score(spec.alpha, spec.circ, s / sd) / sd;
}

cplx ggd_score_clamped(const GgdSpec& spec, cplx s) {
  const double sd = std::sqrt(spec.variance);
  cplx u = s / sd;
  if (spec.alpha < 1.0 && std::abs(u) < kClampRadius) {
    g_clamp_events.fetch_add(1, std::memory_order_relaxed);
    u = std::abs(u) > 0.0 ? u * (kClampRadius / std::abs(u)) : cplx(kClampRadius, 0.0);
  }
  return unit_score(spec.alpha, spec.circ, u) / sd;
}

std::uint64_t ggd_clamp_events() { return g_clamp_events.load(); }

double ggd_kappa_bar(const GgdSpec& spec) {
  spec.validate();
  const double a = spec.alpha;
  const double lg1 = std::lgamma(1.0 / a);
  return a * a * std::exp(std::lgamma(2.0 / a) - 2.0 * lg1) / (1.0 - spec.circ * spec.circ);
}

CMatrix sample_dependent_bg(const DependentBgSpec& spec, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_dependent_bg(spec, n, rng);
}

CMatrix sample_dependent_bg(const DependentBgSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  const double lambda = spec.lambda();
  std::gamma_distribution<double> gamma(spec.dim / spec.alpha, 1.0);
  CMatrix out(spec.dim, static_cast<Eigen::Index>(n));
  CVector dir(spec.dim);
  for (std::size_t j = 0; j < n; ++j) {
    const double t = gamma(rng);
    const double radius = std::sqrt(std::pow(t, 1.0 / spec.alpha) / lambda);
    for (int i = 0; i < spec.dim; ++i) dir(i) = standard_normal_c(rng);
    out.col(static_cast<Eigen::Index>(j)) = radius * dir / dir.norm();
  }
  return out;
}

double dependent_bg_log_pdf(const DependentBgSpec& spec, const CVector& z) {
  const double d = spec.dim;
  const double lambda = spec.lambda();
  const double log_norm = d * std::log(std::numbers::pi) + std::lgamma(d / spec.alpha) -
                          std::lgamma(d) - std::log(spec.alpha) - d * std::log(lambda);
  return -std::pow(lambda * z.squaredNorm(), spec.alpha) - log_norm;
}

CVector dependent_bg_score(const DependentBgSpec& spec, const CVector& z) {
  const double u = z.squaredNorm();
  if (u == 0.0) {
    if (spec.alpha < 1.0)
      throw Error(ErrorCode::SingularPoint, "dependent background score is singular at the origin");
    return CVector::Zero(z.size());
  }
  const double lambda = spec.lambda();
  return (spec.alpha * lambda * std::pow(lambda * u, spec.alpha - 1.0)) * z;
}

double dependent_bg_kappa(const DependentBgSpec& spec) {
  // omega = alpha^2 lambda Gamma(D/alpha + 2 - 1/alpha) / (D Gamma(D/alpha))
  const double d = spec.dim;
  const double a = spec.alpha;
  return a * a * spec.lambda() * std::exp(std::lgamma(d / a + 2.0 - 1.0 / a) - std::lgamma(d / a)) / d;
}

CMatrix empirical_kappa_z(const VectorScore& score, const CMatrix& samples) {
  const Eigen::Index dim = samples.rows();
  CMatrix acc = CMatrix::Zero(dim, dim);
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    const CVector psi = score(samples.col(j));
    acc.noalias() += psi * psi.adjoint();
  }
  acc /= static_cast<double>(samples.cols());
  return linalg::hermitian_part(acc);
}

RMatrix empirical_kappa_z_stderr(const VectorScore& score, const CMatrix& samples) {
  const Eigen::Index dim = samples.rows();
  const double n = static_cast<double>(samples.cols());
  CMatrix mean = CMatrix::Zero(dim, dim);
  RMatrix second = RMatrix::Zero(dim, dim);
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    const CVector psi = score(samples.col(j));
    const CMatrix outer = psi * psi.adjoint();
    mean += outer;
    second += outer.cwiseAbs2();
  }
  mean /= n;
  second /= n;
  RMatrix var = (second - mean.cwiseAbs2()).cwiseMax(0.0);
  return (var / n).cwiseSqrt();
}

SourceStats source_stats(const GgdSpec& spec) {
  spec.validate();
  SourceStats st;
  st.sigma2 = spec.variance;
  st.kappa_bar = ggd_kappa_bar(spec);
  st.kappa = st.kappa_bar / spec.variance;
  st.pseudo_moment = cplx(spec.circ * spec.variance, 0.0);
  // E[psi^2] = -circ * kappa for the GGD family (real-valued, so equal to its conjugate)
  st.score_pseudo = cplx(-spec.circ * st.kappa, 0.0);
  st.provenance = "closed-form";
  return st;
}

BgStats bg_stats_gaussian(const CMatrix& cov) {
  if (!linalg::is_hermitian_pd(cov))
    throw Error(ErrorCode::InvalidCovariance, "background covariance must be Hermitian PD");
  BgStats st;
  st.cov = linalg::hermitian_part(cov);
  st.kappa_z = linalg::inv_hpd(cov);
  st.pseudo_score = CMatrix::Zero(cov.rows(), cov.cols());
  st.pseudo_cov = CMatrix::Zero(cov.rows(), cov.cols());
  st.provenance = "closed-form";
  return st;
}

BgStats bg_stats_dependent(const DependentBgSpec& spec, const CMatrix& cov) {
  spec.validate();
  if (cov.rows() != spec.dim)
    throw Error(ErrorCode::InvalidInput, "covariance dimension does not match background");
  BgStats st = bg_stats_gaussian(cov);
  st.kappa_z = dependent_bg_kappa(spec) * st.kappa_z;
  st.provenance = "closed-form";
  return st;
}

CMatrix sample_complex_gaussian(const CMatrix& cov, std::size_t n, Rng& rng) {
  Eigen::LLT<CMatrix> llt(linalg::hermitian_part(cov));
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::InvalidCovariance, "background covariance must be Hermitian PD");
  const CMatrix l = llt.matrixL();
  CMatrix w(cov.rows(), static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = standard_normal_c(rng);
  return l * w;
}

}  // namespace bse
