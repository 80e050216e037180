#ifndef BSE_BENCH_HPP
#define BSE_BENCH_HPP

// Monte Carlo harness: trial orchestration, exact ISR against ground truth,
// trimmed-mean aggregation and the matching analytic bound.

#include "bse/crlb.hpp"
#include "bse/extract.hpp"
#include "bse/mixmodel.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bse {

/// Environment variable holding the default worker count.
inline constexpr const char* kThreadsEnv = "BSE_THREADS";

/// Worker count from BSE_THREADS, else the hardware concurrency (at least 1).
unsigned default_threads();

enum class Algorithm { Auto, Ogice, Ngice, Bice, BogiceCmv, BogiceCsv };

const char* to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

struct ScenarioConfig {
  std::string scenario_id = "scenario";
  int dim = 5;
  int blocks = 1;
  Sharing sharing = Sharing::Independent;
  std::size_t n_per_block = 1000;
  std::vector<GgdSpec> soi{GgdSpec{2.0, 0.0, 1.0}};  // one spec or one per block
  BackgroundFrame frame = BackgroundFrame::Raw;
  std::optional<double> dep_bg_alpha;  // non-Gaussian background of dimension d-1
  Algorithm algorithm = Algorithm::Auto;
  double init_eps = 0.1;
  std::size_t max_iter = 1000;
  double tol = 1e-6;
  double step = 0.5;
  std::size_t kappa_samples = 100000;  // Monte Carlo size for the background score power
  // 0: closed-form bound. Otherwise the numeric bound at each drawn model's
  // actual parameters, from this many Monte Carlo samples per block.
  std::size_t bound_samples = 0;

  void validate() const;
  /// Algorithm actually run (Auto resolved from the sharing mode).
  Algorithm resolved_algorithm() const;
  RandomModelOptions model_options() const;
};

struct TrialStats {
  std::string scenario_id;
  std::vector<double> isr_linear;
  std::vector<double> isr_db;
  std::vector<std::uint64_t> seeds;
  std::vector<bool> converged;
  std::vector<std::size_t> iterations;
  std::vector<double> crib_per_trial;
  double trimmed_mean_db = 0.0;
  std::size_t n_trials = 0;
  std::size_t n_diverged = 0;
  CribReport crib;  // bound averaged over trials (linear)
};

/// (w^H Q C_z Q^H w) / (|w^H a|^2 sigma^2); +inf when w^H a = 0.
double isr_exact(const CVector& w_hat, const BlockSpec& block);

/// Aggregate over blocks: summed interference over summed signal power.
double isr_blocks(const std::vector<CVector>& w_hats, const PiecewiseModel& model);

/// Mean after discarding floor(frac n) smallest and largest values. n >= 3.
double trimmed_mean(std::vector<double> values, double frac = 0.10);

/// Bound matching the scenario's model and algorithm for one drawn model.
CribReport scenario_crib(const ScenarioConfig& cfg, const PiecewiseModel& model, std::uint64_t seed);

struct TrialOutcome {
  double isr = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  double crib = 0.0;
};

/// One trial: draw model, synthesize, initialize, extract, score.
TrialOutcome run_trial(const ScenarioConfig& cfg, std::uint64_t trial_seed);

/// Runs n_trials trials in parallel (threads == 0: default_threads()).
TrialStats run_scenario(const ScenarioConfig& cfg, std::size_t n_trials, std::uint64_t seed,
                        unsigned threads = 0);

}  // namespace bse

#endif
