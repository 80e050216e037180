#ifndef BSE_CLI_SVG_HPP
#define BSE_CLI_SVG_HPP

// Minimal deterministic SVG line chart. Same input, same bytes.

#include "bse/serialize.hpp"

#include <string>
#include <vector>

namespace bse::cli {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // non-finite values break the line
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label = "ISR [dB]";
  bool log_x = false;
  std::vector<std::string> categories;  // when set, x holds category indices
  std::vector<PlotSeries> series;
  std::vector<std::string> provenance;  // emitted as an XML comment
};

std::string render_svg(const PlotSpec& spec);

/// Chart of one or more experiment result documents sharing a sweep axis:
/// trimmed-mean ISR per series with its bound as a dashed overlay.
/// IncompatibleResults on mismatched axes, InvalidInput on an empty set.
PlotSpec plot_from_results(const std::vector<Json>& results);

}  // namespace bse::cli

#endif
