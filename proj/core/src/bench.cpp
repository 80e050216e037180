#include "bse/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

namespace bse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CMatrix kappa_tilde(const ScenarioConfig& cfg, std::uint64_t seed) {
  const Eigen::Index k = cfg.dim - 1;
  if (!cfg.dep_bg_alpha) return CMatrix::Identity(k, k);
  const DependentBgSpec spec{*cfg.dep_bg_alpha, cfg.dim - 1};
  const CMatrix z = sample_dependent_bg(spec, cfg.kappa_samples, split_seed(seed, 0x6b617070));
  return empirical_kappa_z([&](const CVector& v) { return dependent_bg_score(spec, v); }, z);
}

std::vector<BlockBound> block_bounds(const PiecewiseModel& model) {
  std::vector<BlockBound> out;
  for (const auto& b : model.blocks) out.push_back({source_stats(b.soi), b.bg_cov});
  return out;
}

CribReport crib_for(const ScenarioConfig& cfg, const PiecewiseModel& model, const CMatrix& kt, std::uint64_t seed) {
  const std::size_t nb = cfg.n_per_block;
  if (cfg.bound_samples > 0) return crib_general_point(model, cfg.bound_samples, seed);
  switch (cfg.resolved_algorithm()) {
    case Algorithm::Ngice:
      return crib_ice_circular(source_stats(model.blocks.front().soi), kt, nb);
    case Algorithm::Ogice:
      if (cfg.dep_bg_alpha) return crib_ice_circular(source_stats(model.blocks.front().soi), kt, nb);
      return crib_ice_gauss(cfg.dim, nb, source_stats(model.blocks.front().soi).kappa_bar);
    case Algorithm::Bice: {
      std::vector<SourceStats> src;
      for (const auto& b : model.blocks) src.push_back(source_stats(b.soi));
      return crib_bice(src, cfg.dim, nb);
    }
    case Algorithm::BogiceCmv: return crib_cmv(block_bounds(model), nb);
    case Algorithm::BogiceCsv: return crib_csv(block_bounds(model), nb);
    case Algorithm::Auto: break;
  }
  throw Error(ErrorCode::InvalidInput, "unresolved algorithm");
}

TrialOutcome trial(const ScenarioConfig& cfg, std::uint64_t ts, const CMatrix& kt) {
  const PiecewiseModel model = random_model(cfg.model_options(), split_seed(ts, 0));
  const Dataset ds = synthesize(model, split_seed(ts, 1));
  const std::uint64_t init_seed = split_seed(ts, 2);
  ExtractOptions opts;
  opts.max_iter = cfg.max_iter;
  opts.tol = cfg.tol;
  opts.step = cfg.step;
  opts.nonlinearity = ggd_nonlinearity(model.blocks.front().soi);

  std::vector<CMatrix> blocks;
  for (int m = 0; m < model.num_blocks(); ++m) blocks.push_back(ds.block(m));
  auto init_a = [&](int m) {
    return perturbed_init(mixing_vector(model.blocks[static_cast<std::size_t>(m)].ice), cfg.init_eps,
                          split_seed(init_seed, static_cast<std::uint64_t>(m)));
  };
  auto init_w = [&](int m) {
    return oc_separating(sample_cov(blocks[static_cast<std::size_t>(m)]), init_a(m));
  };

  ExtractionResult res;
  switch (cfg.resolved_algorithm()) {
    case Algorithm::Ogice: res = ogice(blocks.front(), opts, init_w(0)); break;
    case Algorithm::Ngice: {
      const BlockSpec& b = model.blocks.front();
      const BackgroundModel bg = b.dep_bg ? dependent_background(*b.dep_bg) : gaussian_background(model.dim() - 1);
      res = ngice(blocks.front(), opts, init_w(0), bg);
      break;
    }
    case Algorithm::Bice: {
      std::vector<CVector> w0;
      for (int m = 0; m < model.num_blocks(); ++m) w0.push_back(init_w(m));
      res = bice(blocks, opts, w0);
      break;
    }
    case Algorithm::BogiceCmv: res = bogice_cmv(blocks, opts, init_a(0)); break;
    case Algorithm::BogiceCsv: res = bogice_csv(blocks, opts, init_w(0)); break;
    case Algorithm::Auto: throw Error(ErrorCode::InvalidInput, "unresolved algorithm");
  }

  TrialOutcome out;
  out.isr = model.num_blocks() == 1 ? isr_exact(res.w_per_block.front(), model.blocks.front())
                                    : isr_blocks(res.w_per_block, model);
  out.converged = res.converged;
  out.iterations = res.iterations;
  out.crib = crib_for(cfg, model, kt, split_seed(ts, 3)).value;
  return out;
}

}  // namespace

unsigned default_threads() {
  if (const char* env = std::getenv(kThreadsEnv)) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Auto: return "auto";
    case Algorithm::Ogice: return "ogice";
    case Algorithm::Ngice: return "ngice";
    case Algorithm::Bice: return "bice";
    case Algorithm::BogiceCmv: return "bogice-cmv";
    case Algorithm::BogiceCsv: return "bogice-csv";
  }
  return "auto";
}

Algorithm algorithm_from_string(const std::string& s) {
  for (Algorithm a : {Algorithm::Auto, Algorithm::Ogice, Algorithm::Ngice, Algorithm::Bice, Algorithm::BogiceCmv,
                      Algorithm::BogiceCsv})
    if (s == to_string(a)) return a;
  throw Error(ErrorCode::ConfigError, "unknown algorithm '" + s + "'");
}

void ScenarioConfig::validate() const {
  if (dim < 2) throw Error(ErrorCode::ConfigError, "dim must be >= 2");
  if (blocks < 1) throw Error(ErrorCode::ConfigError, "blocks must be >= 1");
  if (n_per_block <= static_cast<std::size_t>(dim)) throw Error(ErrorCode::ConfigError, "N per block must exceed d");
  if (soi.empty() || (soi.size() != 1 && static_cast<int>(soi.size()) != blocks))
    throw Error(ErrorCode::ConfigError, "soi must hold one spec or one per block");
  for (const auto& s : soi) s.validate();
  if (dep_bg_alpha) DependentBgSpec{*dep_bg_alpha, dim - 1}.validate();
  if (!(init_eps >= 0.0)) throw Error(ErrorCode::ConfigError, "init_eps must be >= 0");
  if (!(tol > 0.0) || max_iter < 1 || !(step > 0.0)) throw Error(ErrorCode::ConfigError, "bad iteration controls");
  const Algorithm a = resolved_algorithm();
  if (blocks > 1 && (a == Algorithm::Ogice || a == Algorithm::Ngice))
    throw Error(ErrorCode::ConfigError, "single-block algorithm on a multi-block scenario");
  if (a == Algorithm::BogiceCmv && blocks > 1 && sharing != Sharing::ConstantMixingVector)
    throw Error(ErrorCode::ConfigError, "bogice-cmv expects CMV data");
  if (a == Algorithm::BogiceCsv && blocks > 1 && sharing != Sharing::ConstantSeparatingVector)
    throw Error(ErrorCode::ConfigError, "bogice-csv expects CSV data");
  if (dep_bg_alpha && kappa_samples < 1000) throw Error(ErrorCode::ConfigError, "kappa_samples too small");
  if (bound_samples > 0 && bound_samples < 1000) throw Error(ErrorCode::ConfigError, "bound_samples too small");
  if (bound_samples > 0 && dep_bg_alpha)
    throw Error(ErrorCode::ConfigError, "the numeric bound needs a Gaussian background");
}

Algorithm ScenarioConfig::resolved_algorithm() const {
  if (algorithm != Algorithm::Auto) return algorithm;
  if (blocks == 1) return Algorithm::Ogice;
  switch (sharing) {
    case Sharing::Independent: return Algorithm::Bice;
    case Sharing::ConstantMixingVector: return Algorithm::BogiceCmv;
    case Sharing::ConstantSeparatingVector: return Algorithm::BogiceCsv;
  }
  return Algorithm::Ogice;
}

RandomModelOptions ScenarioConfig::model_options() const {
  RandomModelOptions o;
  o.dim = dim;
  o.blocks = blocks;
  o.sharing = sharing;
  o.soi = soi;
  o.n_per_block = n_per_block;
  o.frame = frame;
  if (dep_bg_alpha) o.dep_bg = DependentBgSpec{*dep_bg_alpha, dim - 1};
  return o;
}

double isr_exact(const CVector& w_hat, const BlockSpec& block) {
  if (w_hat.norm() == 0.0) throw Error(ErrorCode::InvalidInput, "w_hat is zero");
  const cplx q1 = w_hat.dot(mixing_vector(block.ice));
  const CVector q2 = background_basis(block.ice).adjoint() * w_hat;
  const double signal = std::norm(q1) * block.soi.variance;
  const double interference = q2.dot(block.bg_cov * q2).real();
  if (signal == 0.0) return kInf;
  return std::max(interference, 0.0) / signal;
}

double isr_blocks(const std::vector<CVector>& w_hats, const PiecewiseModel& model) {
  if (w_hats.size() != model.blocks.size()) throw Error(ErrorCode::InvalidInput, "one w per block required");
  double signal = 0.0;
  double interference = 0.0;
  for (std::size_t m = 0; m < w_hats.size(); ++m) {
    const BlockSpec& b = model.blocks[m];
    const cplx q1 = w_hats[m].dot(mixing_vector(b.ice));
    const CVector q2 = background_basis(b.ice).adjoint() * w_hats[m];
    signal += std::norm(q1) * b.soi.variance;
    interference += std::max(q2.dot(b.bg_cov * q2).real(), 0.0);
  }
  if (signal == 0.0) return kInf;
  return interference / signal;
}

double trimmed_mean(std::vector<double> values, double frac) {
  if (values.size() < 3) throw Error(ErrorCode::InsufficientData, "trimmed mean needs at least 3 values");
  if (!(frac >= 0.0 && frac < 0.5)) throw Error(ErrorCode::InvalidInput, "trim fraction must be in [0, 0.5)");
  std::sort(values.begin(), values.end());
  const auto cut = static_cast<std::size_t>(std::floor(frac * static_cast<double>(values.size())));
  const auto first = values.begin() + static_cast<std::ptrdiff_t>(cut);
  const auto last = values.end() - static_cast<std::ptrdiff_t>(cut);
  return std::accumulate(first, last, 0.0) / static_cast<double>(last - first);
}

CribReport scenario_crib(const ScenarioConfig& cfg, const PiecewiseModel& model, std::uint64_t seed) {
  return crib_for(cfg, model, kappa_tilde(cfg, seed), split_seed(seed, 3));
}

TrialOutcome run_trial(const ScenarioConfig& cfg, std::uint64_t trial_seed) {
  cfg.validate();
  return trial(cfg, trial_seed, kappa_tilde(cfg, trial_seed));
}

TrialStats run_scenario(const ScenarioConfig& cfg, std::size_t n_trials, std::uint64_t seed, unsigned threads) {
  cfg.validate();
  if (n_trials < 1) throw Error(ErrorCode::ConfigError, "n_trials must be >= 1");
  const CMatrix kt = kappa_tilde(cfg, seed);
  std::vector<TrialOutcome> outcomes(n_trials);
  std::vector<std::uint64_t> seeds(n_trials);
  for (std::size_t t = 0; t < n_trials; ++t) seeds[t] = split_seed(seed, t);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t t = next++; t < n_trials; t = next++) {
      try {
        outcomes[t] = trial(cfg, seeds[t], kt);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = n_trials;
      }
    }
  };
  const unsigned n_workers =
      static_cast<unsigned>(std::min<std::size_t>(threads == 0 ? default_threads() : threads, n_trials));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  TrialStats st;
  st.scenario_id = cfg.scenario_id;
  st.n_trials = n_trials;
  st.seeds = seeds;
  double crib_sum = 0.0;
  for (const auto& o : outcomes) {
    st.isr_linear.push_back(o.isr);
    st.isr_db.push_back(to_db(o.isr));
    st.converged.push_back(o.converged);
    st.iterations.push_back(o.iterations);
    st.crib_per_trial.push_back(o.crib);
    crib_sum += o.crib;
    if (!o.converged || !std::isfinite(o.isr)) ++st.n_diverged;
  }
  st.trimmed_mean_db = n_trials >= 3 ? to_db(trimmed_mean(st.isr_linear)) : to_db(st.isr_linear.front());

  // The bound report of the first model, carrying the trial-averaged value.
  const PiecewiseModel first = random_model(cfg.model_options(), split_seed(seeds.front(), 0));
  st.crib = crib_for(cfg, first, kt, split_seed(seeds.front(), 3));
  st.crib.value = crib_sum / static_cast<double>(n_trials);
  st.crib.value_db = to_db(st.crib.value);
  st.crib.identifiable = std::isfinite(st.crib.value);
  st.crib.notes.push_back("value averaged over " + std::to_string(n_trials) + " drawn models");
  return st;
}

}  // namespace bse
