#include "bse/cli/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace bse::cli {

namespace {

struct AxisName {
  SweepAxis axis;
  const char* name;
};

constexpr AxisName kAxes[] = {
    {SweepAxis::N, "n_per_block"},          {SweepAxis::Alpha, "alpha"},
    {SweepAxis::Circ, "circ"},              {SweepAxis::Blocks, "blocks"},
    {SweepAxis::VariancePattern, "variance_pattern"}, {SweepAxis::CoupledAlpha, "coupled_alpha"},
};

std::string value_label(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return format_double(v.get<double>());
}

Json merged(Json base, const Json& over) {
  for (const auto& [k, v] : over.items()) base[k] = v;
  return base;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + p.string());
}

CribReport extra_bound(const std::string& kind, const ScenarioConfig& sc) {
  const auto k = static_cast<Eigen::Index>(sc.dim - 1);
  std::vector<SourceStats> src;
  std::vector<BlockBound> bb;
  for (int m = 0; m < sc.blocks; ++m) {
    const GgdSpec& g = sc.soi.size() == 1 ? sc.soi.front() : sc.soi[static_cast<std::size_t>(m)];
    src.push_back(source_stats(g));
    bb.push_back({src.back(), CMatrix::Identity(k, k)});
  }
  if (kind == "bice") return crib_bice(src, sc.dim, sc.n_per_block);
  if (kind == "cmv") return crib_cmv(bb, sc.n_per_block);
  if (kind == "csv") return crib_csv(bb, sc.n_per_block);
  throw Error(ErrorCode::ConfigError, "unknown reference bound '" + kind + "'");
}

}  // namespace

const char* to_string(SweepAxis a) {
  for (const auto& e : kAxes)
    if (e.axis == a) return e.name;
  return "?";
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  for (const auto& e : kAxes)
    if (s == e.name) return e.axis;
  if (s == "N") return SweepAxis::N;
  if (s == "M") return SweepAxis::Blocks;
  throw Error(ErrorCode::ConfigError, "unknown sweep axis '" + s + "'");
}

std::vector<double> variance_pattern(const std::string& type, int blocks) {
  if (blocks < 1) throw Error(ErrorCode::ConfigError, "variance pattern needs blocks >= 1");
  std::vector<double> v;
  if (type == "A") {
    v.assign(static_cast<std::size_t>(blocks), 1.0);
  } else if (type == "B") {
    if (blocks != 5) throw Error(ErrorCode::ConfigError, "variance pattern B is defined for 5 blocks");
    v = {1.0, 1.0, 2.0, 3.0, 3.0};
  } else if (type == "C" || type == "D") {
    for (int m = 1; m <= blocks; ++m) v.push_back(type == "C" ? m : static_cast<double>(m) * m);
  } else {
    throw Error(ErrorCode::ConfigError, "variance pattern must be one of A, B, C, D");
  }
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  for (double& x : v) x /= mean;
  return v;
}

void ExperimentConfig::validate() const {
  if (name.empty()) throw Error(ErrorCode::ConfigError, "experiment name is empty");
  if (values.empty()) throw Error(ErrorCode::ConfigError, "sweep needs at least one value");
  if (series.empty()) throw Error(ErrorCode::ConfigError, "experiment needs at least one series");
  if (n_trials < 3) throw Error(ErrorCode::ConfigError, "n_trials must be >= 3 for the trimmed mean");
  if (output.empty()) throw Error(ErrorCode::ConfigError, "output prefix is empty");
  std::set<std::string> labels;
  for (const auto& s : series)
    if (!labels.insert(s.label).second) throw Error(ErrorCode::ConfigError, "duplicate series label '" + s.label + "'");
  for (const auto& v : values) {
    const bool want_string = axis == SweepAxis::VariancePattern;
    if (want_string ? !v.is_string() : !v.is_number())
      throw Error(ErrorCode::ConfigError, std::string("bad value for sweep axis ") + to_string(axis) + ": " + v.dump());
  }
  for (const auto& b : extra_bounds)
    if (b != "bice" && b != "cmv" && b != "csv") throw Error(ErrorCode::ConfigError, "unknown reference bound '" + b + "'");
  for (std::size_t p = 0; p < values.size(); ++p)
    for (std::size_t s = 0; s < series.size(); ++s) cell_scenario(*this, p, s).validate();
}

std::filesystem::path preset_path(const std::string& name, const std::filesystem::path& dir) {
  return dir / (name + ".json");
}

Json load_preset(const std::string& name, const std::filesystem::path& preset_dir) {
  const auto p = preset_path(name, preset_dir);
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::IoError, "unknown preset '" + name + "' (looked in " + preset_dir.string() + ")");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, p.string() + ": " + e.what());
  }
}

std::vector<std::string> list_presets(const std::filesystem::path& preset_dir) {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(preset_dir, ec))
    if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

ExperimentConfig experiment_from_json(const Json& j_in, const std::filesystem::path& preset_dir) {
  static const std::set<std::string> known = {"name",   "scenario", "sweep",  "series", "algorithm",
                                              "bounds", "n_trials", "seed",   "output"};
  if (!j_in.is_object()) throw Error(ErrorCode::ConfigError, "experiment must be a JSON object");
  Json j = j_in;
  if (j.contains("scenario") && j["scenario"].is_string()) {
    Json base = load_preset(j["scenario"].get<std::string>(), preset_dir);
    if (base.contains("scenario") && base["scenario"].is_string())
      throw Error(ErrorCode::ConfigError, "presets may not reference other presets");
    j.erase("scenario");
    j = merged(base, j);
  }
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw Error(ErrorCode::ConfigError, "unknown experiment field '" + key + "'");
  try {
    ExperimentConfig cfg;
    if (j.contains("name")) cfg.name = j["name"].get<std::string>();
    if (j.contains("scenario")) {
      if (!j["scenario"].is_object()) throw Error(ErrorCode::ConfigError, "scenario must be a preset name or an object");
      cfg.scenario = j["scenario"];
      scenario_from_json(cfg.scenario);  // field check
    }
    if (!j.contains("sweep")) throw Error(ErrorCode::ConfigError, "missing field 'sweep'");
    const Json& sw = j["sweep"];
    if (!sw.is_object()) throw Error(ErrorCode::ConfigError, "sweep must be an object");
    for (const auto& [key, _] : sw.items())
      if (key != "axis" && key != "values" && key != "total_n")
        throw Error(ErrorCode::ConfigError, "unknown sweep field '" + key + "' (exactly one axis per run)");
    cfg.axis = sweep_axis_from_string(sw.at("axis").get<std::string>());
    for (const auto& v : sw.at("values")) cfg.values.push_back(v);
    if (sw.contains("total_n")) cfg.total_n = sw["total_n"].get<std::size_t>();
    if (j.contains("series")) {
      for (const auto& s : j["series"]) {
        Series se;
        se.label = s.at("label").get<std::string>();
        if (s.contains("overrides")) se.overrides = s["overrides"];
        for (const auto& [key, _] : s.items())
          if (key != "label" && key != "overrides") throw Error(ErrorCode::ConfigError, "unknown series field '" + key + "'");
        cfg.series.push_back(std::move(se));
      }
    } else {
      Series se;
      se.label = j.contains("algorithm") ? j["algorithm"].get<std::string>() : "auto";
      if (j.contains("algorithm")) se.overrides["algorithm"] = j["algorithm"];
      cfg.series.push_back(std::move(se));
    }
    if (j.contains("series") && j.contains("algorithm"))
      for (auto& se : cfg.series)
        if (!se.overrides.contains("algorithm")) se.overrides["algorithm"] = j["algorithm"];
    if (j.contains("bounds")) cfg.extra_bounds = j["bounds"].get<std::vector<std::string>>();
    if (j.contains("n_trials")) cfg.n_trials = j["n_trials"].get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output")) cfg.output = j["output"].get<std::string>();
    cfg.validate();
    return cfg;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("experiment: ") + e.what());
  }
}

Json to_json(const ExperimentConfig& cfg) {
  Json series = Json::array();
  for (const auto& s : cfg.series) series.push_back({{"label", s.label}, {"overrides", s.overrides}});
  Json sweep = {{"axis", to_string(cfg.axis)}, {"values", cfg.values}};
  if (cfg.total_n) sweep["total_n"] = cfg.total_n;
  return {{"name", cfg.name},         {"scenario", cfg.scenario},  {"sweep", std::move(sweep)},
          {"series", std::move(series)}, {"bounds", cfg.extra_bounds}, {"n_trials", cfg.n_trials},
          {"seed", cfg.seed},         {"output", cfg.output}};
}

std::string config_hash(const Json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ScenarioConfig cell_scenario(const ExperimentConfig& cfg, std::size_t point, std::size_t series) {
  const Json& v = cfg.values.at(point);
  const Series& se = cfg.series.at(series);
  ScenarioConfig sc = scenario_from_json(merged(cfg.scenario, se.overrides));
  switch (cfg.axis) {
    case SweepAxis::N: sc.n_per_block = v.get<std::size_t>(); break;
    case SweepAxis::Alpha:
      for (auto& s : sc.soi) s.alpha = v.get<double>();
      break;
    case SweepAxis::Circ:
      for (auto& s : sc.soi) s.circ = v.get<double>();
      break;
    case SweepAxis::Blocks: {
      sc.blocks = v.get<int>();
      if (sc.blocks < 1) throw Error(ErrorCode::ConfigError, "blocks must be >= 1");
      if (cfg.total_n) sc.n_per_block = cfg.total_n / static_cast<std::size_t>(sc.blocks);
      if (sc.soi.size() != 1) throw Error(ErrorCode::ConfigError, "a blocks sweep needs a single SOI spec");
      break;
    }
    case SweepAxis::VariancePattern: {
      const GgdSpec base = sc.soi.front();
      sc.soi.clear();
      for (double var : variance_pattern(v.get<std::string>(), sc.blocks)) {
        GgdSpec s = base;
        s.variance = var;
        sc.soi.push_back(s);
      }
      break;
    }
    case SweepAxis::CoupledAlpha:
      sc.dep_bg_alpha = v.get<double>();
      for (auto& s : sc.soi) s.alpha = v.get<double>() + 1.0;
      break;
  }
  sc.scenario_id = cfg.name + ":" + se.label + ":" + to_string(cfg.axis) + "=" + value_label(v);
  return sc;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned threads) {
  cfg.validate();
  ExperimentResult res;
  res.config = cfg;
  res.hash = config_hash(to_json(cfg));
  for (std::size_t p = 0; p < cfg.values.size(); ++p) {
    const std::uint64_t point_seed = split_seed(cfg.seed, p);
    for (std::size_t s = 0; s < cfg.series.size(); ++s) {
      const ScenarioConfig sc = cell_scenario(cfg, p, s);
      CellResult cell;
      cell.series = cfg.series[s].label;
      cell.value = cfg.values[p];
      cell.stats = run_scenario(sc, cfg.n_trials, point_seed, threads);
      for (const auto& b : cfg.extra_bounds) cell.extra.emplace_back(b, extra_bound(b, sc));
      res.cells.push_back(std::move(cell));
    }
  }
  return res;
}

Json ExperimentResult::to_json() const {
  Json cells_j = Json::array();
  for (const auto& c : cells) {
    Json extra = Json::object();
    for (const auto& [name, rep] : c.extra) extra[name] = bse::to_json(rep);
    cells_j.push_back({{"series", c.series}, {"value", c.value}, {"stats", bse::to_json(c.stats)}, {"bounds", std::move(extra)}});
  }
  return {{"experiment", config.name},
          {"config_hash", hash},
          {"seed", config.seed},
          {"axis", cli::to_string(config.axis)},
          {"config", cli::to_json(config)},
          {"cells", std::move(cells_j)}};
}

std::string ExperimentResult::summary_csv() const {
  std::ostringstream os;
  os << "# experiment=" << config.name << " config_hash=" << hash << " seed=" << config.seed << "\n";
  os << to_string(config.axis) << ",series,trimmed_mean_db,crib_db,crib_model,n_trials,n_diverged";
  for (const auto& b : config.extra_bounds) os << ",crib_" << b << "_db";
  os << "\n";
  for (const auto& c : cells) {
    os << value_label(c.value) << "," << c.series << "," << format_double(c.stats.trimmed_mean_db) << ","
       << format_double(c.stats.crib.value_db) << "," << bse::to_string(c.stats.crib.model) << "," << c.stats.n_trials
       << "," << c.stats.n_diverged;
    for (const auto& [_, rep] : c.extra) os << "," << format_double(rep.value_db);
    os << "\n";
  }
  return os.str();
}

std::string ExperimentResult::trials_csv() const {
  std::ostringstream os;
  os << "# experiment=" << config.name << " config_hash=" << hash << " seed=" << config.seed << "\n";
  bool header = true;
  for (const auto& c : cells) {
    std::string t = trial_table_csv(c.stats);
    if (!header) t.erase(0, t.find('\n') + 1);
    header = false;
    os << t;
  }
  return os.str();
}

void write_results(const ExperimentResult& res) {
  const std::string& pre = res.config.output;
  write_file(pre + ".json", res.to_json().dump(2) + "\n");
  write_file(pre + ".csv", res.summary_csv());
  write_file(pre + "_trials.csv", res.trials_csv());
}

}  // namespace bse::cli
