#ifndef BSE_CLI_COMMANDS_HPP
#define BSE_CLI_COMMANDS_HPP

// Subcommand bodies, kept apart from argument parsing so tests can call them.

#include "bse/crlb.hpp"
#include "bse/serialize.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bse::cli {

/// Exit status of a failure with this code: 1 validation, 2 runtime.
int exit_code(ErrorCode code);

struct CribArgs {
  std::string model;  // ice-gauss, ice-circular, bice, cmv, csv, {cmv,csv}-allbutone, {bice,cmv,csv}-vanishing
  int d = 5;
  std::size_t n = 1000;  // total samples; each of the M blocks gets n / M
  int blocks = 1;
  double alpha = 2.0;
  double circ = 0.0;
  std::optional<double> kappa_bar;  // overrides alpha/circ: a source with this normalized score power
  std::vector<double> alphas;       // per block
  std::vector<double> variances;    // per block
  double bg_variance = 1.0;
  std::optional<double> bg_alpha;   // ice-circular: dependent background shape
  std::size_t kappa_samples = 200000;
  int special_block = 0;            // 1-based block index for the special cases
  std::uint64_t seed = 1;

  Json to_json() const;
};

CribReport cmd_crib(const CribArgs& args);
std::string format_crib(const CribReport& r);

struct FimArgs {
  std::string model = "ice";  // ice, bice, cmv, csv
  int d = 3;
  int blocks = 2;
  double alpha = 2.0;
  double circ = 0.0;
  std::size_t samples = 1000000;
  std::uint64_t seed = 1;
  double tol = 0.02;

  Json to_json() const;
};

struct FimBlockCheck {
  std::string matrix;  // "F" or "P"
  std::string row, col;
  double deviation = 0.0;  // ||emp - closed|| / scale
  double scale = 0.0;
};

struct FimReport {
  std::vector<FimBlockCheck> checks;
  double max_deviation = 0.0;
  bool pass = false;
};

FimReport cmd_validate_fim(const FimArgs& args);
std::string format_fim(const FimReport& r, double tol);

}  // namespace bse::cli

#endif
