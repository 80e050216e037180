#ifndef BSE_TESTS_ORACLES_HPP
#define BSE_TESTS_ORACLES_HPP

// Independent reference computations used by the unit and acceptance tests.
// None of them calls the closed-form bound code they are compared against.

#include "bse/crlb.hpp"
#include "bse/csignal.hpp"
#include "bse/mixmodel.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace bse::oracle {

/// -d f / d s* by central differences, f real-valued on the complex plane.
inline cplx neg_wirtinger_conj(const std::function<double(cplx)>& f, cplx s, double h = 1e-6) {
  const double dx = (f(s + cplx(h, 0)) - f(s - cplx(h, 0))) / (2 * h);
  const double dy = (f(s + cplx(0, h)) - f(s - cplx(0, h))) / (2 * h);
  return -0.5 * cplx(dx, dy);
}

/// Vector version: component j is -d f / d z_j*.
inline CVector neg_wirtinger_conj(const std::function<double(const CVector&)>& f, const CVector& z,
                                  double h = 1e-6) {
  CVector out(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    auto fj = [&](cplx v) {
      CVector t = z;
      t(j) = v;
      return f(t);
    };
    out(j) = neg_wirtinger_conj(fj, z(j), h);
  }
  return out;
}

/// Moments of the GGD by trapezoid quadrature of its density on [-L, L]^2,
/// with the score taken by finite differences of the log-density.
struct QuadMoments {
  double mass = 0.0;
  double power = 0.0;      // E|s|^2
  cplx pseudo{0.0};        // E s^2
  double score_power = 0.0;  // E|psi|^2
  cplx score_pseudo{0.0};    // E psi^2
};

inline QuadMoments ggd_quadrature(const GgdSpec& spec, double half_width = 7.0, int n = 700) {
  const double step = 2 * half_width / n;
  auto logp = [&](cplx s) { return ggd_log_pdf(spec, s); };
  QuadMoments q;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const cplx s(-half_width + i * step, -half_width + j * step);
      const double w = (i == 0 || i == n ? 0.5 : 1.0) * (j == 0 || j == n ? 0.5 : 1.0) * step * step;
      const double p = std::exp(logp(s));
      if (p < 1e-300) continue;
      q.mass += w * p;
      q.power += w * p * std::norm(s);
      q.pseudo += w * p * s * s;
      const cplx psi = neg_wirtinger_conj(logp, s, 1e-5);
      q.score_power += w * p * std::norm(psi);
      q.score_pseudo += w * p * psi * psi;
    }
  }
  return q;
}

/// Bound on the aggregate ISR by brute force: invert the full augmented FIM
/// of N_b samples per block, read off cov(h^m) and average tr(C_m cov(h^m))
/// with SOI-power weights. Valid at the identity point where q_2 = -delta h.
inline double brute_force_crib(const FimBlocks& fim, std::size_t n_block, const std::vector<std::string>& h_slots,
                               const std::vector<CMatrix>& cz, const std::vector<double>& sigma2) {
  const Eigen::Index k = fim.F.rows();
  const CMatrix j = static_cast<double>(n_block) * fim.augmented();
  const CMatrix cov = j.fullPivLu().inverse().topLeftCorner(k, k);
  double num = 0.0, den = 0.0;
  for (std::size_t m = 0; m < cz.size(); ++m) {
    const ParamSlot& s = fim.slot(h_slots[m]);
    num += (cz[m] * cov.block(s.offset, s.offset, s.size, s.size)).trace().real();
    den += sigma2[m];
  }
  return num / den;
}

/// Slot names of h^m in each layout.
inline std::vector<std::string> h_slots(Sharing sharing, int blocks) {
  std::vector<std::string> out;
  for (int m = 0; m < blocks; ++m) {
    if (sharing == Sharing::ConstantSeparatingVector) out.push_back("h");
    else out.push_back("h^" + std::to_string(m + 1));
  }
  return out;
}

/// Random Hermitian positive definite matrix with condition number below ~10.
inline CMatrix random_hpd(Eigen::Index k, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CMatrix a(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) a(i, j) = cplx(nd(rng), nd(rng));
  CMatrix c = a * a.adjoint() / static_cast<double>(k) + CMatrix::Identity(k, k);
  return c;
}

inline CVector random_cvector(Eigen::Index k, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  CVector v(k);
  for (Eigen::Index i = 0; i < k; ++i) v(i) = cplx(nd(rng), nd(rng));
  return v;
}

/// Exact ISR from first principles: rebuild A, take y = w^H A [s; z].
inline double isr_direct(const CVector& w, const BlockSpec& b) {
  const CMatrix a = ice_mixing(b.ice);
  const CVector q = a.adjoint() * w;  // q_i = a_i^H w, so |q_i| = |w^H a_i|
  const CVector q2 = q.tail(q.size() - 1);
  const double sig = std::norm(q(0)) * b.soi.variance;
  return (q2.adjoint() * b.bg_cov * q2).value().real() / sig;
}

}  // namespace bse::oracle

#endif
