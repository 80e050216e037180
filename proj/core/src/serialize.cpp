#include "bse/serialize.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace bse {

namespace {

// JSON has no infinities; non-finite reals travel as strings.
Json real_json(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double real_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw Error(ErrorCode::ConfigError, "expected a number, got " + j.dump());
}

Json cplx_json(cplx c) { return Json::array({real_json(c.real()), real_json(c.imag())}); }

cplx cplx_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::ConfigError, "complex values are [re, im] pairs");
  return {real_from_json(j[0]), real_from_json(j[1])};
}

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(cplx_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const CVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(cplx_json(v(i)));
  return out;
}

CMatrix cmatrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::ConfigError, "matrix must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw Error(ErrorCode::ConfigError, "ragged matrix rows");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = cplx_from_json(row[static_cast<std::size_t>(k)]);
  }
  return m;
}

CVector cvector_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::ConfigError, "vector must be an array");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = cplx_from_json(j[i]);
  return v;
}

Json to_json(const GgdSpec& s) { return {{"alpha", s.alpha}, {"circ", s.circ}, {"variance", s.variance}}; }

GgdSpec ggd_from_json(const Json& j) {
  GgdSpec s;
  read_opt(j, "alpha", s.alpha);
  read_opt(j, "circ", s.circ);
  read_opt(j, "variance", s.variance);
  return s;
}

Json to_json(const PiecewiseModel& model) {
  Json blocks = Json::array();
  for (const auto& b : model.blocks) {
    Json jb = {{"gamma", cplx_json(b.ice.gamma)}, {"beta", cplx_json(b.ice.beta)},
               {"g", to_json(b.ice.g)},          {"h", to_json(b.ice.h)},
               {"soi", to_json(b.soi)},           {"bg_cov", to_json(b.bg_cov)}};
    if (b.dep_bg) jb["dep_bg"] = {{"alpha", b.dep_bg->alpha}, {"dim", b.dep_bg->dim}};
    blocks.push_back(std::move(jb));
  }
  return {{"sharing", to_string(model.sharing)},
          {"n_per_block", model.n_per_block},
          {"scaling_fix", model.scaling_fix},
          {"blocks", std::move(blocks)}};
}

PiecewiseModel model_from_json(const Json& j) {
  try {
    PiecewiseModel model;
    model.sharing = sharing_from_string(j.at("sharing").get<std::string>());
    model.n_per_block = j.at("n_per_block").get<std::size_t>();
    read_opt(j, "scaling_fix", model.scaling_fix);
    for (const auto& jb : j.at("blocks")) {
      BlockSpec b;
      b.ice.gamma = cplx_from_json(jb.at("gamma"));
      b.ice.beta = cplx_from_json(jb.at("beta"));
      b.ice.g = cvector_from_json(jb.at("g"));
      b.ice.h = cvector_from_json(jb.at("h"));
      b.soi = ggd_from_json(jb.at("soi"));
      b.bg_cov = cmatrix_from_json(jb.at("bg_cov"));
      if (jb.contains("dep_bg"))
        b.dep_bg = DependentBgSpec{jb["dep_bg"].at("alpha").get<double>(), jb["dep_bg"].at("dim").get<int>()};
      model.blocks.push_back(std::move(b));
    }
    model.validate();
    return model;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("model: ") + e.what());
  }
}

Json to_json(const Dataset& ds) {
  Json soi = Json::array();
  for (const auto& s : ds.soi) soi.push_back(to_json(s));
  return {{"model", to_json(ds.model)}, {"observations", to_json(ds.observations)}, {"soi", std::move(soi)}};
}

Json to_json(const CribReport& r) {
  Json terms = Json::array();
  for (const auto& t : r.terms) terms.push_back({{"label", t.label}, {"value", real_json(t.value)}});
  return {{"model", to_string(r.model)},
          {"value", real_json(r.value)},
          {"value_db", real_json(r.value_db)},
          {"identifiable", r.identifiable},
          {"n_total", r.n_total},
          {"n_block", r.n_block},
          {"terms", std::move(terms)},
          {"notes", r.notes}};
}

Json to_json(const TrialStats& st) {
  Json isr = Json::array();
  Json isr_db = Json::array();
  Json crib = Json::array();
  for (std::size_t t = 0; t < st.n_trials; ++t) {
    isr.push_back(real_json(st.isr_linear[t]));
    isr_db.push_back(real_json(st.isr_db[t]));
    crib.push_back(real_json(st.crib_per_trial[t]));
  }
  Json conv = Json::array();
  for (bool c : st.converged) conv.push_back(c);
  return {{"scenario_id", st.scenario_id},
          {"n_trials", st.n_trials},
          {"n_diverged", st.n_diverged},
          {"trimmed_mean_db", real_json(st.trimmed_mean_db)},
          {"isr_linear", std::move(isr)},
          {"isr_db", std::move(isr_db)},
          {"seeds", st.seeds},
          {"converged", std::move(conv)},
          {"iterations", st.iterations},
          {"crib_per_trial", std::move(crib)},
          {"crib", to_json(st.crib)}};
}

TrialStats trial_stats_from_json(const Json& j) {
  try {
    TrialStats st;
    st.scenario_id = j.at("scenario_id").get<std::string>();
    st.n_trials = j.at("n_trials").get<std::size_t>();
    st.n_diverged = j.at("n_diverged").get<std::size_t>();
    st.trimmed_mean_db = real_from_json(j.at("trimmed_mean_db"));
    for (const auto& v : j.at("isr_linear")) st.isr_linear.push_back(real_from_json(v));
    for (const auto& v : j.at("isr_db")) st.isr_db.push_back(real_from_json(v));
    for (const auto& v : j.at("crib_per_trial")) st.crib_per_trial.push_back(real_from_json(v));
    st.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& v : j.at("converged")) st.converged.push_back(v.get<bool>());
    st.iterations = j.at("iterations").get<std::vector<std::size_t>>();
    const Json& c = j.at("crib");
    st.crib.value = real_from_json(c.at("value"));
    st.crib.value_db = real_from_json(c.at("value_db"));
    st.crib.identifiable = c.at("identifiable").get<bool>();
    st.crib.n_total = c.at("n_total").get<std::size_t>();
    st.crib.n_block = c.at("n_block").get<std::size_t>();
    st.crib.notes = c.at("notes").get<std::vector<std::string>>();
    for (const auto& t : c.at("terms")) st.crib.terms.push_back({t.at("label").get<std::string>(), real_from_json(t.at("value"))});
    const auto name = c.at("model").get<std::string>();
    bool found = false;
    for (int m = 0; m <= static_cast<int>(BoundModel::GeneralPoint); ++m)
      if (name == to_string(static_cast<BoundModel>(m))) {
        st.crib.model = static_cast<BoundModel>(m);
        found = true;
      }
    if (!found) throw Error(ErrorCode::ConfigError, "unknown bound model '" + name + "'");
    if (st.isr_linear.size() != st.n_trials || st.isr_db.size() != st.n_trials)
      throw Error(ErrorCode::ConfigError, "trial arrays disagree with n_trials");
    return st;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("trial stats: ") + e.what());
  }
}

Json to_json(const ScenarioConfig& cfg) {
  Json soi = Json::array();
  for (const auto& s : cfg.soi) soi.push_back(to_json(s));
  Json j = {{"scenario_id", cfg.scenario_id},
            {"dim", cfg.dim},
            {"blocks", cfg.blocks},
            {"sharing", to_string(cfg.sharing)},
            {"n_per_block", cfg.n_per_block},
            {"soi", std::move(soi)},
            {"frame", cfg.frame == BackgroundFrame::Raw ? "raw" : "canonical"},
            {"algorithm", to_string(cfg.algorithm)},
            {"init_eps", cfg.init_eps},
            {"max_iter", cfg.max_iter},
            {"tol", cfg.tol},
            {"step", cfg.step},
            {"kappa_samples", cfg.kappa_samples},
            {"bound_samples", cfg.bound_samples}};
  if (cfg.dep_bg_alpha) j["dep_bg_alpha"] = *cfg.dep_bg_alpha;
  return j;
}

ScenarioConfig scenario_from_json(const Json& j) {
  static const std::set<std::string> known = {"scenario_id", "dim",       "blocks", "sharing",  "n_per_block",
                                              "soi",         "frame",     "algorithm", "init_eps", "max_iter",
                                              "tol",         "step",      "kappa_samples", "dep_bg_alpha",
                                              "bound_samples"};
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "scenario must be an object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw Error(ErrorCode::ConfigError, "unknown scenario field '" + key + "'");
  try {
    ScenarioConfig cfg;
    read_opt(j, "scenario_id", cfg.scenario_id);
    read_opt(j, "dim", cfg.dim);
    read_opt(j, "blocks", cfg.blocks);
    if (j.contains("sharing")) cfg.sharing = sharing_from_string(j["sharing"].get<std::string>());
    read_opt(j, "n_per_block", cfg.n_per_block);
    if (j.contains("soi")) {
      const Json& s = j["soi"];
      cfg.soi.clear();
      if (s.is_array())
        for (const auto& e : s) cfg.soi.push_back(ggd_from_json(e));
      else
        cfg.soi.push_back(ggd_from_json(s));
    }
    if (j.contains("frame")) {
      const auto f = j["frame"].get<std::string>();
      if (f == "raw") cfg.frame = BackgroundFrame::Raw;
      else if (f == "canonical") cfg.frame = BackgroundFrame::Canonical;
      else throw Error(ErrorCode::ConfigError, "frame must be 'raw' or 'canonical'");
    }
    if (j.contains("algorithm")) cfg.algorithm = algorithm_from_string(j["algorithm"].get<std::string>());
    read_opt(j, "init_eps", cfg.init_eps);
    read_opt(j, "max_iter", cfg.max_iter);
    read_opt(j, "tol", cfg.tol);
    read_opt(j, "step", cfg.step);
    read_opt(j, "kappa_samples", cfg.kappa_samples);
    read_opt(j, "bound_samples", cfg.bound_samples);
    if (j.contains("dep_bg_alpha") && !j["dep_bg_alpha"].is_null()) cfg.dep_bg_alpha = j["dep_bg_alpha"].get<double>();
    return cfg;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("scenario: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidInput) throw Error(ErrorCode::ConfigError, e.what());
    throw;
  }
}

std::string trial_table_csv(const TrialStats& st) {
  std::ostringstream out;
  out << "scenario_id,trial,seed,isr_db,converged\n";
  for (std::size_t t = 0; t < st.n_trials; ++t)
    out << st.scenario_id << ',' << t << ',' << st.seeds[t] << ',' << format_double(st.isr_db[t]) << ','
        << (st.converged[t] ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace bse
