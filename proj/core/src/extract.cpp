#include "bse/extract.hpp"

#include "bse/linalg.hpp"
#include "bse/mixmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace bse {

namespace {

constexpr int kMaxHalvings = 40;

struct AscentOutcome {
  CVector theta;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

// Backtracking ascent shared by every algorithm. `direction` returns an ascent
// direction at theta, `objective` the value to be maximized and `normalize`
// maps theta to its canonical scale (objectives are invariant under it).
// `change` measures the relative size of a step for the stopping rule.
template <class Objective, class Direction, class Normalize, class Change>
AscentOutcome ascend(CVector theta, const ExtractOptions& opts, double max_step, Objective objective,
                     Direction direction, Normalize normalize, Change change) {
  AscentOutcome out;
  theta = normalize(theta);
  double f = objective(theta);
  if (!std::isfinite(f)) throw Error(ErrorCode::InvalidInput, "objective not finite at the initial point");
  out.trace.push_back(f);
  double mu = opts.step;
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    const CVector d = direction(theta);
    bool accepted = false;
    CVector next;
    double f_next = f;
    for (int k = 0; k < kMaxHalvings; ++k, mu *= 0.5) {
      next = normalize(theta + mu * d);
      f_next = objective(next);
      if (std::isfinite(f_next) && f_next >= f) {
        accepted = true;
        break;
      }
    }
    out.iterations = it + 1;
    if (!accepted) {
      // No representable ascent remains: numerically stationary.
      out.converged = true;
      break;
    }
    const double moved = change(next, theta);
    theta = next;
    f = f_next;
    out.trace.push_back(f);
    if (moved < opts.tol) {
      out.converged = true;
      break;
    }
    mu = std::min(2.0 * mu, max_step);
  }
  out.theta = theta;
  return out;
}

double relative_change(const CVector& next, const CVector& theta) {
  return (next - theta).norm() / std::max(theta.norm(), 1e-300);
}

void check_block(const CMatrix& x) {
  if (x.rows() < 2) throw Error(ErrorCode::InvalidInput, "need at least two channels");
  if (x.cols() <= x.rows()) throw Error(ErrorCode::InsufficientData, "need N > d samples");
}

CMatrix checked_cov(const CMatrix& x) {
  const CMatrix c = sample_cov(x);
  if (!linalg::is_hermitian_pd(c, 1e-13))
    throw Error(ErrorCode::DataDegenerate, "sample covariance is singular");
  return c;
}

// Per-block quantities of the profiled OC contrast at separating vector v.
struct BlockEval {
  double value = 0.0;  // mean log p(s_hat)
  double nu = 0.0;     // v^H C v
  CVector e;           // mean x conj(psi)
  double r = 0.0;      // Re mean s_hat conj(psi)
};

CVector project(const CMatrix& x, const CVector& v) { return (x.adjoint() * v).conjugate(); }

double contrast(const CMatrix& x, const CMatrix& cov, const CVector& v, const Nonlinearity& nl) {
  const double nu = v.dot(cov * v).real();
  if (!(nu > 0.0)) return -std::numeric_limits<double>::infinity();
  const CVector s = project(x, v) / std::sqrt(nu);
  double acc = 0.0;
  for (Eigen::Index n = 0; n < s.size(); ++n) acc += nl.log_density(s(n));
  return acc / static_cast<double>(s.size());
}

BlockEval contrast_grad(const CMatrix& x, const CMatrix& cov, const CVector& v, const Nonlinearity& nl) {
  BlockEval b;
  b.nu = v.dot(cov * v).real();
  if (!(b.nu > 0.0)) throw Error(ErrorCode::InvalidInput, "separating vector annihilates the data");
  const double n = static_cast<double>(x.cols());
  const CVector s = project(x, v) / std::sqrt(b.nu);
  CVector psi_c(s.size());
  cplx sp{0.0};
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    psi_c(k) = std::conj(nl.score(s(k)));
    sp += s(k) * psi_c(k);
  }
  b.e = x * psi_c / n;
  b.r = sp.real() / n;
  return b;
}

// d f / d v^* of the scale-invariant block contrast.
CVector block_gradient(const BlockEval& b, const CMatrix& cov, const CVector& v) {
  return -b.e / std::sqrt(b.nu) + (b.r / b.nu) * (cov * v);
}

CVector solve_hpd(const CMatrix& p, const CVector& g) {
  Eigen::LLT<CMatrix> llt(linalg::hermitian_part(p));
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::DataDegenerate, "preconditioner not PD");
  return llt.solve(g);
}

// Scale fix: mean over blocks of w^H C_m w equals 1.
CVector unit_variance(const CVector& w, const std::vector<CMatrix>& covs) {
  double nu = 0.0;
  for (const auto& c : covs) nu += w.dot(c * w).real();
  nu /= static_cast<double>(covs.size());
  if (!(nu > 0.0)) return w;
  return w / std::sqrt(nu);
}

void check_blocks(const std::vector<CMatrix>& blocks) {
  if (blocks.empty()) throw Error(ErrorCode::InvalidInput, "no blocks");
  for (const auto& b : blocks) {
    check_block(b);
    if (b.rows() != blocks.front().rows()) throw Error(ErrorCode::InvalidInput, "blocks differ in dimension");
  }
}

}  // namespace

Nonlinearity ggd_nonlinearity(const GgdSpec& spec) {
  GgdSpec unit = spec;
  unit.variance = 1.0;
  unit.validate();
  Nonlinearity nl;
  nl.log_density = [unit](cplx s) { return ggd_log_pdf(unit, s); };
  nl.score = [unit](cplx s) { return ggd_score_clamped(unit, s); };
  return nl;
}

void ExtractOptions::validate() const {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidInput, "tol must be positive");
  if (max_iter < 1) throw Error(ErrorCode::InvalidInput, "max_iter must be >= 1");
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidInput, "step must be positive");
  if (!nonlinearity.log_density || !nonlinearity.score)
    throw Error(ErrorCode::InvalidInput, "nonlinearity is incomplete");
}

BackgroundModel gaussian_background(int dim) {
  if (dim < 1) throw Error(ErrorCode::InvalidInput, "background dimension must be >= 1");
  const double log_norm = dim * std::log(std::numbers::pi);
  BackgroundModel bg;
  bg.dim = dim;
  bg.log_radial = [log_norm](double r) { return -r - log_norm; };
  bg.eta = [](double) { return 1.0; };
  return bg;
}

BackgroundModel dependent_background(const DependentBgSpec& spec) {
  spec.validate();
  const double lambda = spec.lambda();
  const double alpha = spec.alpha;
  CVector origin = CVector::Zero(spec.dim);
  const double log_norm = dependent_bg_log_pdf(spec, origin);
  BackgroundModel bg;
  bg.dim = spec.dim;
  bg.log_radial = [=](double r) { return log_norm - std::pow(lambda * r, alpha); };
  bg.eta = [=](double r) {
    // clamp the radius as the SOI score does for alpha < 1
    return alpha * lambda * std::pow(std::max(lambda * r, 1e-24), alpha - 1.0);
  };
  return bg;
}

CMatrix sample_cov(const CMatrix& x) {
  if (x.cols() == 0) throw Error(ErrorCode::InsufficientData, "no samples");
  return linalg::hermitian_part(x * x.adjoint() / static_cast<double>(x.cols()));
}

CVector oc_separating(const CMatrix& cov, const CVector& a) {
  const CVector v = linalg::inv_hpd(cov) * a;
  return v / a.dot(v);
}

CVector oc_mixing(const CMatrix& cov, const CVector& w) {
  const CVector cw = cov * w;
  return cw / w.dot(cw);
}

ExtractionResult bogice_csv(const std::vector<CMatrix>& blocks, const ExtractOptions& opts,
                            const CVector& init_w) {
  opts.validate();
  check_blocks(blocks);
  if (init_w.size() != blocks.front().rows()) throw Error(ErrorCode::InvalidInput, "init_w has wrong size");
  std::vector<CMatrix> covs;
  for (const auto& b : blocks) covs.push_back(checked_cov(b));
  const Nonlinearity& nl = opts.nonlinearity;

  auto objective = [&](const CVector& w) {
    double f = 0.0;
    for (std::size_t m = 0; m < blocks.size(); ++m) f += contrast(blocks[m], covs[m], w, nl);
    return f;
  };
  auto direction = [&](const CVector& w) {
    const Eigen::Index d = w.size();
    CVector g = CVector::Zero(d);
    CMatrix p = CMatrix::Zero(d, d);
    for (std::size_t m = 0; m < blocks.size(); ++m) {
      const BlockEval b = contrast_grad(blocks[m], covs[m], w, nl);
      g += block_gradient(b, covs[m], w);
      p += covs[m] / b.nu;
    }
    return solve_hpd(p, g);
  };
  auto normalize = [&](const CVector& w) { return unit_variance(w, covs); };

  // Measured on the extracted signal, so the iteration does not depend on the
  // coordinates of the data.
  CMatrix cbar = CMatrix::Zero(init_w.size(), init_w.size());
  for (const auto& c : covs) cbar += c;
  auto change = [&](const CVector& next, const CVector& w) {
    const CVector dw = next - w;
    return std::sqrt(dw.dot(cbar * dw).real() / std::max(w.dot(cbar * w).real(), 1e-300));
  };

  if (init_w.norm() == 0.0) throw Error(ErrorCode::InvalidInput, "init_w is zero");
  const AscentOutcome run = ascend(init_w, opts, 1.0, objective, direction, normalize, change);

  ExtractionResult res;
  res.iterations = run.iterations;
  res.converged = run.converged;
  res.contrast_trace = run.trace;
  for (std::size_t m = 0; m < blocks.size(); ++m) {
    res.w_per_block.push_back(run.theta);
    res.a_per_block.push_back(oc_mixing(covs[m], run.theta));
    res.extracted.push_back(project(blocks[m], run.theta));
  }
  return res;
}

ExtractionResult ogice(const CMatrix& x, const ExtractOptions& opts, const CVector& init_w) {
  return bogice_csv({x}, opts, init_w);
}

ExtractionResult bice(const std::vector<CMatrix>& blocks, const ExtractOptions& opts,
                      const std::vector<CVector>& init_w_per_block) {
  check_blocks(blocks);
  if (init_w_per_block.size() != blocks.size())
    throw Error(ErrorCode::InvalidInput, "one initial vector per block required");
  std::vector<ExtractionResult> parts;
  for (std::size_t m = 0; m < blocks.size(); ++m) parts.push_back(ogice(blocks[m], opts, init_w_per_block[m]));
  if (parts.size() == 1) return parts.front();
  ExtractionResult res;
  res.converged = true;
  std::size_t longest = 0;
  for (const auto& p : parts) {
    res.w_per_block.push_back(p.w_per_block.front());
    res.a_per_block.push_back(p.a_per_block.front());
    res.extracted.push_back(p.extracted.front());
    res.iterations = std::max(res.iterations, p.iterations);
    res.converged = res.converged && p.converged;
    longest = std::max(longest, p.contrast_trace.size());
  }
  // Summed trace; finished blocks hold their final value.
  res.contrast_trace.assign(longest, 0.0);
  for (const auto& p : parts)
    for (std::size_t i = 0; i < longest; ++i)
      res.contrast_trace[i] += p.contrast_trace[std::min(i, p.contrast_trace.size() - 1)];
  return res;
}

ExtractionResult bogice_cmv(const std::vector<CMatrix>& blocks, const ExtractOptions& opts,
                            const CVector& init_a) {
  opts.validate();
  check_blocks(blocks);
  if (init_a.size() != blocks.front().rows()) throw Error(ErrorCode::InvalidInput, "init_a has wrong size");
  if (init_a.norm() == 0.0) throw Error(ErrorCode::InvalidInput, "init_a is zero");
  std::vector<CMatrix> covs, cinvs;
  for (const auto& b : blocks) {
    covs.push_back(checked_cov(b));
    cinvs.push_back(linalg::inv_hpd(covs.back()));
  }
  const Nonlinearity& nl = opts.nonlinearity;

  auto objective = [&](const CVector& a) {
    double f = 0.0;
    for (std::size_t m = 0; m < blocks.size(); ++m) f += contrast(blocks[m], covs[m], cinvs[m] * a, nl);
    return f;
  };
  auto direction = [&](const CVector& a) {
    const Eigen::Index d = a.size();
    CVector g = CVector::Zero(d);
    CMatrix p = CMatrix::Zero(d, d);
    for (std::size_t m = 0; m < blocks.size(); ++m) {
      const CVector v = cinvs[m] * a;
      const BlockEval b = contrast_grad(blocks[m], covs[m], v, nl);
      g += cinvs[m] * block_gradient(b, covs[m], v);
      p += cinvs[m] / b.nu;
    }
    return solve_hpd(p, g);
  };
  auto normalize = [](const CVector& a) -> CVector { return a / a.norm(); };

  const AscentOutcome run = ascend(init_a, opts, 1.0, objective, direction, normalize, relative_change);

  ExtractionResult res;
  res.iterations = run.iterations;
  res.converged = run.converged;
  res.contrast_trace = run.trace;
  for (std::size_t m = 0; m < blocks.size(); ++m) {
    const CVector w = oc_separating(covs[m], run.theta);
    res.a_per_block.push_back(run.theta);
    res.w_per_block.push_back(w);
    res.extracted.push_back(project(blocks[m], w));
  }
  return res;
}

ExtractionResult ngice(const CMatrix& x, const ExtractOptions& opts, const CVector& init_w,
                       const BackgroundModel& bg) {
  opts.validate();
  check_block(x);
  if (!bg.log_radial || !bg.eta) throw Error(ErrorCode::InvalidInput, "background model is incomplete");
  const Eigen::Index d = x.rows();
  const Eigen::Index k = d - 1;
  if (bg.dim != k) throw Error(ErrorCode::InvalidInput, "background dimension must be d - 1");
  if (init_w.size() != d) throw Error(ErrorCode::InvalidInput, "init_w has wrong size");
  const CMatrix cov = checked_cov(x);
  const Nonlinearity& nl = opts.nonlinearity;
  const double n = static_cast<double>(x.cols());

  // gamma = 1 coordinates: a = [1; g], w = [beta; h] with beta* = 1 - h^H g.
  const CVector a0 = oc_mixing(cov, init_w);
  if (std::abs(a0(0)) < 1e-12) throw Error(ErrorCode::InvalidInput, "initial mixing vector has no SOI gain");
  CVector theta(2 * k);
  theta.head(k) = a0.tail(k) / a0(0);
  theta.tail(k) = std::conj(a0(0)) * init_w.tail(k) / init_w.dot(a0);

  struct Eval {
    CVector s;
    CMatrix z;
    double sigma2 = 0.0;
    CMatrix scatter;
    Eigen::LLT<CMatrix> llt;
    bool ok = false;
  };
  auto evaluate = [&](const CVector& th) {
    const CVector g = th.head(k);
    const CVector h = th.tail(k);
    const cplx beta_c = cplx(1.0) - h.dot(g);
    Eval e;
    e.s = beta_c * x.row(0).transpose() + (x.bottomRows(k).adjoint() * h).conjugate();
    e.z = g * x.row(0) - x.bottomRows(k);
    e.sigma2 = e.s.squaredNorm() / n;
    e.scatter = linalg::hermitian_part(e.z * e.z.adjoint() / n);
    e.llt.compute(e.scatter);
    e.ok = e.sigma2 > 0.0 && e.llt.info() == Eigen::Success;
    return e;
  };
  auto objective = [&](const CVector& th) {
    const Eval e = evaluate(th);
    if (!e.ok) return -std::numeric_limits<double>::infinity();
    const double sd = std::sqrt(e.sigma2);
    const CMatrix y = e.llt.solve(e.z);
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) log_det += 2.0 * std::log(std::real(e.llt.matrixL()(i, i)));
    double acc = 0.0;
    for (Eigen::Index j = 0; j < e.s.size(); ++j)
      acc += nl.log_density(e.s(j) / sd) + bg.log_radial(e.z.col(j).dot(y.col(j)).real());
    return acc / n - std::log(e.sigma2) - log_det;
  };
  struct {
    bool started = false;
    RVector x, grad;
    RMatrix hinv;
  } bfgs;
  auto direction = [&](const CVector& th) {
    const CVector h = th.tail(k);
    const Eval e = evaluate(th);
    if (!e.ok) throw Error(ErrorCode::DataDegenerate, "degenerate iterate");
    const double sd = std::sqrt(e.sigma2);
    const Eigen::Index cols = e.s.size();
    CVector psi(cols);
    cplx sp{0.0};
    for (Eigen::Index j = 0; j < cols; ++j) {
      psi(j) = nl.score(e.s(j) / sd);
      sp += e.s(j) / sd * std::conj(psi(j));
    }
    const double c = (sp.real() / n - 1.0) / e.sigma2;
    // Profiled scatter: per-sample background direction e_j = M z_j - (eta_j + 1) y_j
    // with y = C^{-1} z and M the eta-weighted mean of y y^H.
    const CMatrix y = e.llt.solve(e.z);
    RVector eta(cols);
    CMatrix weighted(k, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      eta(j) = bg.eta(e.z.col(j).dot(y.col(j)).real());
      weighted.col(j) = eta(j) * y.col(j);
    }
    const CMatrix mbar = weighted * y.adjoint() / n;
    const CMatrix mz = mbar * e.z;
    // Per-sample gradients in real coordinates [Re g; Im g; Re h; Im h].
    RMatrix r(4 * k, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      const cplx x1c = std::conj(x(0, j));
      const CVector bgdir = mz.col(j) - (eta(j) + 1.0) * y.col(j);
      const CVector gg = (psi(j) / sd - c * e.s(j)) * x1c * h + x1c * bgdir;
      const CVector gh = (std::conj(psi(j)) / sd - c * std::conj(e.s(j))) * e.z.col(j);
      r.col(j) << gg.real(), gg.imag(), gh.real(), gh.imag();
    }
    const RVector mean = r.rowwise().sum() / n;
    RVector xr(4 * k);
    xr << th.head(k).real(), th.head(k).imag(), h.real(), h.imag();
    // BFGS on the inverse curvature, seeded with the outer-product (scoring) matrix.
    bool updated = false;
    if (bfgs.started) {
      const RVector sv = xr - bfgs.x;
      const RVector yv = bfgs.grad - mean;
      const double sy = sv.dot(yv);
      if (sy > 1e-12 * sv.norm() * yv.norm()) {
        const double rho = 1.0 / sy;
        const RVector hy = bfgs.hinv * yv;
        bfgs.hinv += rho * rho * (yv.dot(hy) + sy) * sv * sv.transpose() - rho * (hy * sv.transpose() + sv * hy.transpose());
        updated = true;
      }
    }
    if (!updated) {
      RMatrix outer = r * r.transpose() / n;
      outer.diagonal().array() += 1e-12 * outer.diagonal().mean();
      bfgs.hinv = outer.ldlt().solve(RMatrix::Identity(4 * k, 4 * k));
    }
    bfgs.started = true;
    bfgs.x = xr;
    bfgs.grad = mean;
    const RVector step = bfgs.hinv * mean;
    CVector out(2 * k);
    for (Eigen::Index i = 0; i < k; ++i) {
      out(i) = cplx(step(i), step(k + i));
      out(k + i) = cplx(step(2 * k + i), step(3 * k + i));
    }
    return out;
  };
  auto normalize = [](const CVector& th) { return th; };

  ExtractOptions scoring = opts;
  scoring.step = std::max(opts.step, 1.0);
  const AscentOutcome run = ascend(theta, scoring, 1.0, objective, direction, normalize, relative_change);

  const CVector g = run.theta.head(k);
  const CVector h = run.theta.tail(k);
  const IceParams p = IceParams::from_gamma(cplx(1.0), g, h);
  ExtractionResult res;
  res.iterations = run.iterations;
  res.converged = run.converged;
  res.contrast_trace = run.trace;
  res.w_per_block.push_back(separating_vector(p));
  res.a_per_block.push_back(mixing_vector(p));
  res.extracted.push_back(project(x, res.w_per_block.front()));
  return res;
}

CVector perturbed_init(const CVector& a_true, double eps, std::uint64_t seed) {
  if (!(eps >= 0.0)) throw Error(ErrorCode::InvalidInput, "eps must be >= 0");
  if (eps == 0.0) return a_true;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CVector v(a_true.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cplx(normal(rng), normal(rng));
  return a_true + eps * a_true.norm() * v / v.norm();
}

}  // namespace bse
