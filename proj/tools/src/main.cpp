#include "bse/cli/commands.hpp"
#include "bse/cli/experiment.hpp"
#include "bse/cli/svg.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#ifndef BSE_PRESET_DIR
#define BSE_PRESET_DIR "presets"
#endif

namespace {

using namespace bse;
using namespace bse::cli;

std::filesystem::path default_preset_dir() {
  if (const char* env = std::getenv("BSE_PRESET_DIR")) return env;
  return BSE_PRESET_DIR;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    // nlohmann reports the byte offset; give the line as well
    std::ifstream again(path);
    std::size_t line = 1, pos = 0;
    for (char c; pos < e.byte && again.get(c); ++pos)
      if (c == '\n') ++line;
    throw Error(ErrorCode::ConfigError, path + ":" + std::to_string(line) + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind source extraction bounds and Monte Carlo experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "bse 0.1.0");

  // crib
  CribArgs crib;
  bool crib_json = false;
  auto* c = app.add_subcommand("crib", "Evaluate a closed-form bound on the extraction ISR");
  c->add_option("model", crib.model,
                "ice-gauss | ice-circular | bice | cmv | csv | cmv-allbutone | csv-allbutone | "
                "bice-vanishing | cmv-vanishing | csv-vanishing")
      ->required();
  c->add_option("--d", crib.d, "Number of channels")->capture_default_str();
  c->add_option("--N", crib.n, "Total sample count (split evenly over blocks)")->capture_default_str();
  c->add_option("--M", crib.blocks, "Number of blocks")->capture_default_str();
  c->add_option("--alpha", crib.alpha, "GGD shape of the SOI (1 = Gaussian)")->capture_default_str();
  c->add_option("--circ", crib.circ, "SOI circularity coefficient")->capture_default_str();
  c->add_option("--kappa-bar", crib.kappa_bar, "Normalized score power (overrides alpha/circ)");
  c->add_option("--alphas", crib.alphas, "Per-block SOI shapes")->delimiter(',');
  c->add_option("--variances", crib.variances, "Per-block SOI variances")->delimiter(',');
  c->add_option("--bg-var", crib.bg_variance, "Background variance")->capture_default_str();
  c->add_option("--bg-alpha", crib.bg_alpha, "ice-circular: dependent background shape");
  c->add_option("--kappa-samples", crib.kappa_samples, "Monte Carlo size for the background score power")
      ->capture_default_str();
  c->add_option("--k", crib.special_block, "Special cases: the distinguished block (1-based)");
  c->add_option("--seed", crib.seed, "Seed for Monte Carlo parts")->capture_default_str();
  c->add_flag("--iid", "Identically distributed SOI in every block (the default)");
  c->add_flag("--json", crib_json, "Print JSON");

  // simulate
  std::string sim_config, sim_preset, sim_output;
  std::optional<std::size_t> sim_trials;
  std::optional<std::uint64_t> sim_seed;
  unsigned sim_threads = 0;
  std::string preset_dir = default_preset_dir().string();
  bool sim_list = false;
  auto* s = app.add_subcommand("simulate", "Run a Monte Carlo experiment and write JSON/CSV results");
  s->add_option("config", sim_config, "Experiment config (JSON)");
  s->add_option("--preset", sim_preset, "Run a named preset instead of a config file");
  s->add_option("--trials", sim_trials, "Override n_trials");
  s->add_option("--seed", sim_seed, "Override the seed");
  s->add_option("--output,-o", sim_output, "Output prefix (<prefix>.json, .csv, _trials.csv)");
  s->add_option("--threads", sim_threads, "Worker threads (default: $BSE_THREADS or all cores)");
  s->add_option("--preset-dir", preset_dir, "Preset directory")->capture_default_str();
  s->add_flag("--list-presets", sim_list, "List presets and exit");

  // validate-fim
  FimArgs fim;
  bool fim_json = false;
  auto* v = app.add_subcommand("validate-fim", "Compare the Monte Carlo FIM with its closed form");
  v->add_option("--model", fim.model, "ice | bice | cmv | csv")->capture_default_str();
  v->add_option("--d", fim.d)->capture_default_str();
  v->add_option("--M", fim.blocks)->capture_default_str();
  v->add_option("--alpha", fim.alpha)->capture_default_str();
  v->add_option("--circ", fim.circ)->capture_default_str();
  v->add_option("--samples", fim.samples, "Samples per block")->capture_default_str();
  v->add_option("--seed", fim.seed)->capture_default_str();
  v->add_option("--tol", fim.tol, "Relative Frobenius tolerance per block")->capture_default_str();
  v->add_flag("--json", fim_json, "Print JSON");

  // plot
  std::vector<std::string> plot_inputs;
  std::string plot_out = "plot.svg";
  std::string plot_title;
  auto* p = app.add_subcommand("plot", "Render experiment results as an SVG chart");
  p->add_option("results", plot_inputs, "Result JSON files sharing a sweep axis")->required();
  p->add_option("--output,-o", plot_out, "SVG path")->capture_default_str();
  p->add_option("--title", plot_title, "Chart title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (c->parsed()) {
      const CribReport r = cmd_crib(crib);
      const Json args = crib.to_json();
      if (crib_json) {
        Json j = to_json(r);
        j["config"] = args;
        j["config_hash"] = config_hash(args);
        j["seed"] = crib.seed;
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << format_crib(r) << "config_hash: " << config_hash(args) << " seed: " << crib.seed << "\n";
      }
      return 0;
    }
    if (s->parsed()) {
      if (sim_list) {
        for (const auto& name : list_presets(preset_dir)) std::cout << name << "\n";
        return 0;
      }
      Json j;
      if (!sim_preset.empty() && !sim_config.empty())
        throw Error(ErrorCode::ConfigError, "give either a config file or --preset, not both");
      if (!sim_preset.empty()) j = {{"scenario", sim_preset}};
      else if (!sim_config.empty()) j = read_json_file(sim_config);
      else throw Error(ErrorCode::ConfigError, "simulate needs a config file or --preset");
      if (sim_trials) j["n_trials"] = *sim_trials;
      if (sim_seed) j["seed"] = *sim_seed;
      if (!sim_output.empty()) j["output"] = sim_output;
      const ExperimentConfig cfg = experiment_from_json(j, preset_dir);
      const ExperimentResult res = run_experiment(cfg, sim_threads);
      write_results(res);
      std::cout << res.summary_csv();
      std::cerr << "wrote " << cfg.output << ".json, " << cfg.output << ".csv, " << cfg.output << "_trials.csv\n";
      return 0;
    }
    if (v->parsed()) {
      const FimReport r = cmd_validate_fim(fim);
      const Json args = fim.to_json();
      if (fim_json) {
        Json checks = Json::array();
        for (const auto& ch : r.checks)
          checks.push_back({{"matrix", ch.matrix}, {"row", ch.row}, {"col", ch.col}, {"deviation", ch.deviation}});
        std::cout << Json{{"config", args},
                          {"config_hash", config_hash(args)},
                          {"seed", fim.seed},
                          {"checks", checks},
                          {"max_deviation", r.max_deviation},
                          {"pass", r.pass}}
                         .dump(2)
                  << "\n";
      } else {
        std::cout << format_fim(r, fim.tol) << "config_hash: " << config_hash(args) << " seed: " << fim.seed << "\n";
      }
      return r.pass ? 0 : 1;
    }
    if (p->parsed()) {
      std::vector<Json> docs;
      for (const auto& f : plot_inputs) docs.push_back(read_json_file(f));
      PlotSpec spec = plot_from_results(docs);
      if (!plot_title.empty()) spec.title = plot_title;
      write_text(plot_out, render_svg(spec));
      std::cerr << "wrote " << plot_out << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
