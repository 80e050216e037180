#include "bse/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace bse::cli {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 460.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 200.0;  // legend column
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  if (std::abs(v) >= 1000 || v == std::floor(v))
    std::snprintf(buf, sizeof buf, "%.0f", v);
  else
    std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// 1-2-5 step covering the range in about five ticks.
double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  if (spec.series.empty()) throw Error(ErrorCode::InvalidInput, "nothing to plot");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };
  for (const auto& s : spec.series) {
    if (s.x.size() != s.y.size()) throw Error(ErrorCode::InvalidInput, "series x/y length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (spec.log_x && !(s.x[i] > 0)) throw Error(ErrorCode::InvalidInput, "log axis needs positive x");
      xmin = std::min(xmin, tx(s.x[i]));
      xmax = std::max(xmax, tx(s.x[i]));
      if (std::isfinite(s.y[i])) {
        ymin = std::min(ymin, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
    }
  }
  if (!std::isfinite(xmin)) throw Error(ErrorCode::InvalidInput, "nothing to plot");
  if (!std::isfinite(ymin)) ymin = -1.0, ymax = 1.0;
  if (xmax - xmin < 1e-12) xmin -= 0.5, xmax += 0.5;
  if (!spec.categories.empty()) xmin -= 0.5, xmax += 0.5;
  if (ymax - ymin < 1e-9) ymin -= 1.0, ymax += 1.0;
  const double ystep = nice_step(ymax - ymin);
  ymin = std::floor(ymin / ystep) * ystep;
  ymax = std::ceil(ymax / ystep) * ystep;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (tx(x) - xmin) / (xmax - xmin) * pw; };
  auto pxi = [&](double t) { return kLeft + (t - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (const auto& p : spec.provenance) os << "<!-- " << escape(p) << " -->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(spec.title)
     << "</text>\n";
  // grid and y ticks
  for (double y = ymin; y <= ymax + 1e-9 * ystep; y += ystep) {
    os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py(y)) << "\" x2=\"" << num(kLeft + pw) << "\" y2=\""
       << num(py(y)) << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << tick_label(y)
       << "</text>\n";
  }
  // x ticks
  std::vector<std::pair<double, std::string>> xt;
  if (!spec.categories.empty()) {
    for (std::size_t i = 0; i < spec.categories.size(); ++i) xt.emplace_back(static_cast<double>(i), spec.categories[i]);
  } else {
    std::map<double, bool> seen;
    for (const auto& s : spec.series)
      for (double x : s.x) seen[x] = true;
    for (const auto& [x, _] : seen) xt.emplace_back(tx(x), tick_label(x));
  }
  for (const auto& [t, label] : xt) {
    os << "<line x1=\"" << num(pxi(t)) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(pxi(t)) << "\" y2=\""
       << num(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(pxi(t)) << "\" y=\"" << num(kTop + ph + 18) << "\" text-anchor=\"middle\">" << escape(label)
       << "</text>\n";
  }
  os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 18) << "\" text-anchor=\"middle\">"
     << escape(spec.x_label) << "</text>\n";
  os << "<text transform=\"translate(18 " << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(spec.y_label) << "</text>\n";

  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& s = spec.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    const std::string dash = s.dashed ? " stroke-dasharray=\"6 4\"" : "";
    std::vector<std::string> runs(1);
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) {
        if (!runs.back().empty()) runs.emplace_back();
        continue;
      }
      if (!runs.back().empty()) runs.back() += ' ';
      runs.back() += num(px(s.x[i])) + "," + num(py(s.y[i]));
    }
    for (const auto& r : runs)
      if (!r.empty())
        os << "<polyline points=\"" << r << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"" << dash
           << "/>\n";
    if (!s.dashed)
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.y[i]))
          os << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"3\" fill=\"" << color
             << "\"/>\n";
    const double ly = kTop + 10 + 20.0 * static_cast<double>(k);
    const double lx = kLeft + pw + 14;
    os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 24) << "\" y2=\"" << num(ly)
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"" << dash << "/>\n";
    os << "<text x=\"" << num(lx + 30) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

namespace {

double read_db(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

PlotSpec plot_from_results(const std::vector<Json>& results) {
  if (results.empty()) throw Error(ErrorCode::InvalidInput, "empty result set");
  PlotSpec spec;
  std::string axis;
  for (const auto& r : results) {
    if (!r.contains("axis") || !r.contains("cells")) throw Error(ErrorCode::IncompatibleResults, "not an experiment result");
    const auto a = r["axis"].get<std::string>();
    if (axis.empty()) axis = a;
    if (a != axis) throw Error(ErrorCode::IncompatibleResults, "results sweep different axes: " + axis + " vs " + a);
  }
  spec.x_label = axis;
  spec.log_x = axis == "n_per_block";
  const bool categorical = axis == "variance_pattern";
  std::map<std::string, std::size_t> cat_index;
  auto x_of = [&](const Json& v) {
    if (!categorical) return v.get<double>();
    const auto s = v.get<std::string>();
    auto it = cat_index.find(s);
    if (it == cat_index.end()) {
      it = cat_index.emplace(s, spec.categories.size()).first;
      spec.categories.push_back(s);
    }
    return static_cast<double>(it->second);
  };
  std::vector<std::string> names;
  for (const auto& r : results) {
    names.push_back(r.value("experiment", "experiment"));
    spec.provenance.push_back("experiment=" + names.back() + " config_hash=" + r.value("config_hash", "?") +
                              " seed=" + std::to_string(r.value("seed", std::uint64_t{0})));
  }
  spec.title = names.front();
  for (std::size_t i = 1; i < names.size(); ++i) spec.title += " + " + names[i];

  std::map<std::string, bool> seen_extra;
  for (std::size_t f = 0; f < results.size(); ++f) {
    const std::string prefix = results.size() > 1 ? names[f] + " " : "";
    std::vector<std::string> order;
    std::map<std::string, PlotSeries> emp, bound;
    std::map<std::string, PlotSeries> extra;
    std::vector<std::string> extra_order;
    for (const auto& c : results[f]["cells"]) {
      const auto label = c.at("series").get<std::string>();
      if (!emp.count(label)) {
        order.push_back(label);
        emp[label].label = prefix + label;
        bound[label].label = prefix + "CRIB " + label;
        bound[label].dashed = true;
      }
      const double x = x_of(c.at("value"));
      emp[label].x.push_back(x);
      emp[label].y.push_back(read_db(c.at("stats").at("trimmed_mean_db")));
      bound[label].x.push_back(x);
      bound[label].y.push_back(read_db(c.at("stats").at("crib").at("value_db")));
      if (c.contains("bounds"))
        for (const auto& [name, rep] : c["bounds"].items()) {
          if (seen_extra.count(name)) continue;
          if (!extra.count(name)) {
            extra_order.push_back(name);
            extra[name].label = "CRIB " + name + " (reference)";
            extra[name].dashed = true;
          }
          if (extra[name].x.empty() || extra[name].x.back() != x) {
            extra[name].x.push_back(x);
            extra[name].y.push_back(read_db(rep.at("value_db")));
          }
        }
    }
    for (const auto& l : order) {
      spec.series.push_back(emp[l]);
      spec.series.push_back(bound[l]);
    }
    for (const auto& n : extra_order) {
      spec.series.push_back(extra[n]);
      seen_extra[n] = true;
    }
  }
  return spec;
}

}  // namespace bse::cli
