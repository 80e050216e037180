#include "bse/cli/commands.hpp"

#include "bse/cli/experiment.hpp"
#include "bse/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace bse::cli {

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::DataDegenerate:
    case ErrorCode::DegenerateDraw:
    case ErrorCode::DegenerateBlock:
    case ErrorCode::SingularPoint:
    case ErrorCode::SingularParameterization:
      return 2;
    default:
      return 1;
  }
}

namespace {

SourceStats block_source(const CribArgs& a, int m) {
  const double var = a.variances.empty() ? 1.0 : a.variances[static_cast<std::size_t>(m)];
  if (a.kappa_bar) {
    SourceStats s;
    s.sigma2 = var;
    s.kappa_bar = *a.kappa_bar;
    s.kappa = *a.kappa_bar / var;
    s.provenance = "kappa-bar";
    return s;
  }
  GgdSpec g;
  g.alpha = a.alphas.empty() ? a.alpha : a.alphas[static_cast<std::size_t>(m)];
  g.circ = a.circ;
  g.variance = var;
  g.validate();
  return source_stats(g);
}

void check_args(const CribArgs& a) {
  if (a.d < 2) throw Error(ErrorCode::ConfigError, "--d must be >= 2");
  if (a.blocks < 1) throw Error(ErrorCode::ConfigError, "--M must be >= 1");
  if (a.n < static_cast<std::size_t>(a.blocks) || a.n % static_cast<std::size_t>(a.blocks) != 0)
    throw Error(ErrorCode::ConfigError, "--N must be a positive multiple of --M");
  auto per_block = [&](std::size_t size, const char* flag) {
    if (size != 0 && size != static_cast<std::size_t>(a.blocks))
      throw Error(ErrorCode::ConfigError, std::string(flag) + " needs one value per block");
  };
  per_block(a.alphas.size(), "--alphas");
  per_block(a.variances.size(), "--variances");
  for (double v : a.variances)
    if (!(v > 0.0)) throw Error(ErrorCode::ConfigError, "--variances must be positive");
  if (a.kappa_bar && !(*a.kappa_bar > 0.0)) throw Error(ErrorCode::ConfigError, "--kappa-bar must be positive");
  if (!(a.bg_variance > 0.0)) throw Error(ErrorCode::ConfigError, "--bg-var must be positive");
  if (a.special_block < 0 || a.special_block > a.blocks) throw Error(ErrorCode::ConfigError, "--k out of range");
}

}  // namespace

Json CribArgs::to_json() const {
  Json j = {{"model", model},         {"d", d},
            {"N", n},                 {"M", blocks},
            {"alpha", alpha},         {"circ", circ},
            {"alphas", alphas},       {"variances", variances},
            {"bg_var", bg_variance},  {"kappa_samples", kappa_samples},
            {"k", special_block},     {"seed", seed}};
  if (kappa_bar) j["kappa_bar"] = *kappa_bar;
  if (bg_alpha) j["bg_alpha"] = *bg_alpha;
  return j;
}

CribReport cmd_crib(const CribArgs& a) {
  check_args(a);
  const std::size_t nb = a.n / static_cast<std::size_t>(a.blocks);
  const auto k = static_cast<Eigen::Index>(a.d - 1);
  const CMatrix cz = a.bg_variance * CMatrix::Identity(k, k);
  std::vector<SourceStats> src;
  std::vector<BlockBound> bb;
  for (int m = 0; m < a.blocks; ++m) {
    src.push_back(block_source(a, m));
    bb.push_back({src.back(), cz});
  }
  const std::string& model = a.model;
  auto single = [&] {
    if (a.blocks != 1) throw Error(ErrorCode::ConfigError, model + " is a single-block bound; use --M 1");
  };
  auto special_k = [&] {
    if (a.special_block < 1) throw Error(ErrorCode::ConfigError, model + " needs --k (1-based block index)");
    return a.special_block - 1;
  };
  if (model == "ice-gauss") {
    single();
    return crib_ice_gauss(a.d, a.n, src.front().kappa_bar);
  }
  if (model == "ice-circular") {
    single();
    CMatrix kt = CMatrix::Identity(k, k);
    if (a.bg_alpha) {
      const DependentBgSpec spec{*a.bg_alpha, a.d - 1};
      spec.validate();
      const CMatrix z = sample_dependent_bg(spec, a.kappa_samples, a.seed);
      kt = empirical_kappa_z([&](const CVector& v) { return dependent_bg_score(spec, v); }, z);
    }
    return crib_ice_circular(src.front(), kt, a.n);
  }
  if (model == "bice") return crib_bice(src, a.d, nb);
  if (model == "cmv") return crib_cmv(bb, nb);
  if (model == "csv") return crib_csv(bb, nb);
  if (model == "cmv-allbutone") return crib_special_allbutone_gaussian(bb, special_k(), nb).cmv;
  if (model == "csv-allbutone") return crib_special_allbutone_gaussian(bb, special_k(), nb).csv;
  if (model == "bice-vanishing" || model == "cmv-vanishing" || model == "csv-vanishing") {
    const auto r = crib_special_vanishing_bg(bb, special_k(), cz, nb);
    if (model == "bice-vanishing") return r.bice;
    return model == "cmv-vanishing" ? r.cmv : r.csv;
  }
  throw Error(ErrorCode::ConfigError, "unknown bound model '" + model + "'");
}

std::string format_crib(const CribReport& r) {
  std::ostringstream os;
  os << "model: " << to_string(r.model) << "\n";
  if (!r.identifiable) {
    os << "bound: unidentifiable\n";
  } else {
    char buf[96];
    std::snprintf(buf, sizeof buf, "bound: %.6g (%.2f dB)\n", r.value, r.value_db);
    os << buf;
  }
  os << "N: " << r.n_total << " (per block " << r.n_block << ")\n";
  for (const auto& t : r.terms) os << "  " << t.label << ": " << format_double(t.value) << "\n";
  for (const auto& n : r.notes) os << "note: " << n << "\n";
  return os.str();
}

Json FimArgs::to_json() const {
  return {{"model", model}, {"d", d},        {"M", blocks}, {"alpha", alpha},
          {"circ", circ},   {"samples", samples}, {"seed", seed}, {"tol", tol}};
}

FimReport cmd_validate_fim(const FimArgs& a) {
  if (a.d < 2) throw Error(ErrorCode::ConfigError, "--d must be >= 2");
  if (a.samples < 1000) throw Error(ErrorCode::ConfigError, "--samples must be >= 1000");
  RandomModelOptions o;
  o.dim = a.d;
  o.frame = BackgroundFrame::Canonical;
  o.soi = {GgdSpec{a.alpha, a.circ, 1.0}};
  o.soi.front().validate();
  if (a.model == "ice") {
    o.blocks = 1;
  } else {
    if (a.blocks < 2) throw Error(ErrorCode::ConfigError, "--M must be >= 2 for block models");
    o.blocks = a.blocks;
    if (a.model == "bice") o.sharing = Sharing::Independent;
    else if (a.model == "cmv") o.sharing = Sharing::ConstantMixingVector;
    else if (a.model == "csv") o.sharing = Sharing::ConstantSeparatingVector;
    else throw Error(ErrorCode::ConfigError, "unknown FIM model '" + a.model + "' (ice, bice, cmv, csv)");
  }
  const PiecewiseModel model = random_model(o, a.seed);
  const FimBlocks closed = fim_closed_form(model);
  const FimBlocks emp = fim_empirical(model, a.samples, split_seed(a.seed, 1));

  FimReport rep;
  const auto& lay = closed.layout;
  auto sub = [](const CMatrix& m, const ParamSlot& r, const ParamSlot& c) {
    return CMatrix(m.block(r.offset, c.offset, r.size, c.size));
  };
  for (const auto& r : lay) {
    for (const auto& c : lay) {
      // Blocks that vanish in closed form are measured against the diagonal scale.
      const double diag_scale = std::sqrt(sub(closed.F, r, r).norm() * sub(closed.F, c, c).norm());
      for (const char* which : {"F", "P"}) {
        const CMatrix& cm = which[0] == 'F' ? closed.F : closed.P;
        const CMatrix& em = which[0] == 'F' ? emp.F : emp.P;
        const CMatrix cb = sub(cm, r, c);
        const double scale = std::max(cb.norm(), diag_scale);
        FimBlockCheck chk{which, r.name, c.name, (sub(em, r, c) - cb).norm() / scale, scale};
        rep.max_deviation = std::max(rep.max_deviation, chk.deviation);
        rep.checks.push_back(std::move(chk));
      }
    }
  }
  rep.pass = rep.max_deviation <= a.tol;
  return rep;
}

std::string format_fim(const FimReport& r, double tol) {
  std::ostringstream os;
  char buf[128];
  for (const auto& c : r.checks) {
    std::snprintf(buf, sizeof buf, "%s(%s,%s): deviation %.4f%s\n", c.matrix.c_str(), c.row.c_str(), c.col.c_str(),
                  c.deviation, c.deviation <= tol ? "" : "  FAIL");
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "max deviation %.4f (tolerance %.4f): %s\n", r.max_deviation, tol, r.pass ? "PASS" : "FAIL");
  os << buf;
  return os.str();
}

}  // namespace bse::cli
