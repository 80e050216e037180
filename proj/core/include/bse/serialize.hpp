#ifndef BSE_SERIALIZE_HPP
#define BSE_SERIALIZE_HPP

// JSON and CSV forms of models, datasets, bounds and trial statistics.
// Complex numbers are [re, im] pairs; matrices are row-major nested arrays.

#include "bse/bench.hpp"
#include "bse/crlb.hpp"
#include "bse/mixmodel.hpp"

#include <json.hpp>

#include <string>

namespace bse {

using Json = nlohmann::json;

Json to_json(const CMatrix& m);
Json to_json(const CVector& v);
CMatrix cmatrix_from_json(const Json& j);
CVector cvector_from_json(const Json& j);

Json to_json(const GgdSpec& s);
GgdSpec ggd_from_json(const Json& j);

Json to_json(const PiecewiseModel& model);
PiecewiseModel model_from_json(const Json& j);

Json to_json(const Dataset& ds);

Json to_json(const CribReport& r);
Json to_json(const TrialStats& st);
TrialStats trial_stats_from_json(const Json& j);

Json to_json(const ScenarioConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected (ConfigError).
ScenarioConfig scenario_from_json(const Json& j);

/// One row per trial: scenario_id,trial,seed,isr_db,converged
std::string trial_table_csv(const TrialStats& st);

/// Shortest round-trip decimal form, "inf"/"-inf"/"nan" for non-finite values.
std::string format_double(double v);

}  // namespace bse

#endif
