// Command-line front end: descriptive and IV analysis, partial-identification
// bounds, lambda sensitivity grids, synthetic-population simulation and the
// theorem verification driver.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "factiv/bounds.hpp"
#include "factiv/data.hpp"
#include "factiv/errors.hpp"
#include "factiv/estimands.hpp"
#include "factiv/identification.hpp"
#include "factiv/interval.hpp"
#include "factiv/oracle.hpp"
#include "factiv/sensitivity.hpp"
#include "factiv/serialization.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace factiv;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitIdentification = 3;
constexpr int kExitVerification = 4;

std::string fmt(double x, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << x;
  return os.str();
}

std::string fmt_interval(const AssumedInterval& iv) {
  std::ostringstream os;
  os << "[" << fmt(iv.lo) << ", " << fmt(iv.hi) << "]";
  if (iv.clipped) os << " (clipped)";
  os << "  under " << iv.assumptions.to_string();
  return os.str();
}

json interval_to_json(const AssumedInterval& iv) {
  json j;
  j["lo"] = iv.lo;
  j["hi"] = iv.hi;
  j["clipped"] = iv.clipped;
  j["assumptions"] = json::array();
  for (auto t : iv.assumptions.tags()) j["assumptions"].push_back(to_string(t));
  return j;
}

double normal_p_value(double stat) {
  return std::erfc(std::abs(stat) / std::sqrt(2.0));
}

// Options shared by the analysis-style subcommands.
struct InputOptions {
  std::string input_csv;
  std::string moments_file;
  ColumnMap columns;
  bool lenient = false;

  bool raw() const { return !input_csv.empty(); }
};

void add_input_options(CLI::App* cmd, InputOptions& in) {
  auto* csv = cmd->add_option("--input", in.input_csv,
                              "CSV with unit-level records (y, d_a, d_b, z_a, "
                              "z_b[, weight])");
  auto* mom = cmd->add_option("--moments", in.moments_file,
                              "JSON file with published cell moments");
  csv->excludes(mom);
  mom->excludes(csv);
  cmd->add_option("--col-y", in.columns.y, "Outcome column name");
  cmd->add_option("--col-da", in.columns.d_a, "Treatment-A column name");
  cmd->add_option("--col-db", in.columns.d_b, "Treatment-B column name");
  cmd->add_option("--col-za", in.columns.z_a, "Instrument-A column name");
  cmd->add_option("--col-zb", in.columns.z_b, "Instrument-B column name");
  cmd->add_option("--col-weight", in.columns.weight, "Weight column name");
  cmd->add_flag("--lenient", in.lenient,
                "Accept true/false/yes/no in binary columns");
}

struct LoadedInput {
  CellTable table;
  std::optional<Dataset> dataset;
  std::optional<MomentsSpec> moments;
};

LoadedInput load_input(const InputOptions& in) {
  LoadedInput out;
  if (in.raw()) {
    IngestOptions opts;
    opts.columns = in.columns;
    opts.lenient_binary = in.lenient;
    out.dataset = ingest_csv_file(in.input_csv, opts);
    out.table = build_cell_table(*out.dataset);
  } else if (!in.moments_file.empty()) {
    out.moments = load_moments_file(in.moments_file);
    out.table = build_cell_table(*out.moments);
  } else {
    throw SchemaError("supply --input or --moments");
  }
  // Published tables are rounded, so moments input gets a loose consistency
  // check; data-built tables must be exact.
  validate_cell_table(out.table, out.table.from_moments ? 0.025 : 1e-9);
  return out;
}

struct RestrictionFlags {
  Restrictions r;
};

void add_restriction_options(CLI::App* cmd, RestrictionFlags& f) {
  cmd->add_flag("--no-cross-defiers-a", f.r.no_cross_defiers_a,
                "Impose that A has no cross-defiers");
  cmd->add_flag("--no-joint-compliers-a", f.r.no_joint_compliers_a,
                "Impose that A has no joint compliers");
  cmd->add_flag("--no-cross-defiers-b", f.r.no_cross_defiers_b,
                "Impose that B has no cross-defiers");
  cmd->add_flag("--no-joint-compliers-b", f.r.no_joint_compliers_b,
                "Impose that B has no joint compliers");
  cmd->add_flag("--no-nj-pairs", f.r.no_nj_pairs,
                "Rule out never-taker/joint-complier pairs");
}

void write_text(const std::string& out_dir, const std::string& name,
                const std::string& text) {
  if (out_dir.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(out_dir);
  std::ofstream f(fs::path(out_dir) / name);
  if (!f) throw SchemaError("cannot write into '" + out_dir + "'");
  f << text;
}

void write_report(const std::string& out_dir, const std::string& stem,
                  const std::string& format, const std::string& text,
                  const json& j, const std::string& csv = "") {
  if (format == "json") {
    if (out_dir.empty())
      std::cout << j.dump(2) << '\n';
    else
      write_json_file((fs::path(out_dir) / (stem + ".json")).string(), j);
  } else if (format == "csv") {
    write_text(out_dir, stem + ".csv", csv.empty() ? text : csv);
  } else {
    write_text(out_dir, stem + ".txt", text);
  }
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeConfig {
  InputOptions input;
  RestrictionFlags restrict_flags;
  bool allow_violations = false;
  bool hc0 = false;
  std::string format = "text";
  std::string out_dir;
};

int cmd_analyze(const AnalyzeConfig& cfg) {
  LoadedInput in = load_input(cfg.input);
  const CellTable& table = in.table;

  json report;
  report["schema_version"] = 1;
  report["command"] = "analyze";
  std::ostringstream text;
  std::ostringstream csv;

  if (in.dataset) {
    text << "rows used: " << in.dataset->size() << "  (dropped "
         << in.dataset->dropped_missing_outcome << " with missing outcome)\n\n";
    report["rows_used"] = in.dataset->size();
    report["dropped_missing_outcome"] = in.dataset->dropped_missing_outcome;
  }

  text << "== Treatment and outcome means by instrument cell ==\n";
  text << std::left << std::setw(14) << "cell" << std::right << std::setw(10)
       << "mass" << std::setw(10) << "E[D_A]" << std::setw(10) << "E[D_B]"
       << std::setw(12) << "E[Y]" << '\n';
  csv << "z_a,z_b,mass,dbar_a,dbar_b,ybar\n";
  for (int za = 1; za >= 0; --za) {
    for (int zb = 1; zb >= 0; --zb) {
      const auto& c = table.cell(za, zb);
      std::ostringstream name;
      name << "Z_A=" << za << ",Z_B=" << zb;
      text << std::left << std::setw(14) << name.str() << std::right
           << std::setw(10) << fmt(c.mass, 1) << std::setw(10)
           << fmt(c.dbar_a, 2) << std::setw(10) << fmt(c.dbar_b, 2)
           << std::setw(12) << (c.ybar ? fmt(*c.ybar, 2) : "n/a") << '\n';
      json jc;
      jc["z_a"] = za;
      jc["z_b"] = zb;
      jc["mass"] = c.mass;
      jc["dbar_a"] = c.dbar_a;
      jc["dbar_b"] = c.dbar_b;
      if (c.ybar) jc["ybar"] = *c.ybar;
      report["cells"].push_back(jc);
      csv << za << ',' << zb << ',' << c.mass << ',' << c.dbar_a << ','
          << c.dbar_b << ',' << (c.ybar ? std::to_string(*c.ybar) : "") << '\n';
    }
  }

  const OneSidedReport one_sided = check_one_sided(table);
  report["one_sided"]["pass"] = one_sided.pass;
  report["one_sided"]["violation_mass_a"] = one_sided.violation_mass_a;
  report["one_sided"]["violation_mass_b"] = one_sided.violation_mass_b;
  if (!one_sided.pass) {
    text << "\none-sided takeup violated:\n";
    for (const auto& v : one_sided.violations) text << "  " << v << '\n';
    if (!cfg.allow_violations) {
      std::cerr << text.str()
                << "error: takeup without the own instrument; estimands that "
                   "rely on one-sided noncompliance are unavailable "
                   "(--allow-violations to continue with the descriptive "
                   "report)\n";
      return kExitIdentification;
    }
    text << "  (continuing; compliance-based estimands suppressed)\n";
    write_report(cfg.out_dir, "analysis", cfg.format, text.str(), report,
                 csv.str());
    return kExitOk;
  }

  const TypeShares shares = type_shares(table, cfg.restrict_flags.r);
  text << "\n== Takeup probabilities and compliance-type shares ==\n";
  auto share_line = [&](const std::string& label, double value,
                        const std::string& meaning) {
    text << "  " << std::left << std::setw(34) << label << fmt(value, 2) << "  "
         << meaning << '\n';
  };
  share_line("P(D_A=1 | Z_A=1, Z_B=0)", shares.p_sd_a, "self/defier share of A");
  share_line("P(D_A=1 | Z_A=1, Z_B=1)", shares.p_c_a, "complier share of A");
  share_line("P(D_B=1 | Z_A=0, Z_B=1)", shares.p_sd_b, "self/defier share of B");
  share_line("P(D_B=1 | Z_A=1, Z_B=1)", shares.p_c_b, "complier share of B");
  share_line("P(D=(1,1) | Z=(1,1))", shares.p_cc, "double compliers");
  share_line("P(D=(0,1) | Z=(1,1))", shares.p_ndA_c,
             "never/defier A with complier B");
  share_line("P(D=(1,0) | Z=(1,1))", shares.p_c_ndA,
             "complier A with never/defier B");
  share_line("P(D=(0,0) | Z=(1,1))", shares.p_ndnd, "never/defier pairs");
  report["shares"] = {{"p_sd_a", shares.p_sd_a}, {"p_sd_b", shares.p_sd_b},
                      {"p_cc", shares.p_cc},     {"p_c_ndA", shares.p_c_ndA},
                      {"p_ndA_c", shares.p_ndA_c}, {"p_ndnd", shares.p_ndnd},
                      {"p_c_a", shares.p_c_a},   {"p_c_b", shares.p_c_b},
                      {"contrast_a", shares.contrast_a},
                      {"contrast_b", shares.contrast_b}};
  auto marginals = [&](const char* side,
                       const std::optional<ResolvedMarginals>& m) {
    if (!m) return;
    text << "  resolved marginals for " << side << ": self=" << fmt(m->self, 2)
         << " joint=" << fmt(m->joint, 2) << " never=" << fmt(m->never, 2)
         << " defier=" << fmt(m->defier, 2) << '\n';
    report["marginals"][side] = {{"self", m->self},
                                 {"joint", m->joint},
                                 {"never", m->never},
                                 {"defier", m->defier}};
  };
  marginals("A", shares.marginals_a);
  marginals("B", shares.marginals_b);

  const ComplianceDiagnostics diag = compliance_diagnostics(table);
  text << "\n== Partner-instrument takeup response ==\n";
  text << "  A: " << fmt(diag.contrast_a, 2) << "  -> " << diag.interpretation_a
       << '\n';
  text << "  B: " << fmt(diag.contrast_b, 2) << "  -> " << diag.interpretation_b
       << '\n';
  report["diagnostics"] = {{"contrast_a", diag.contrast_a},
                           {"contrast_b", diag.contrast_b},
                           {"interpretation_a", diag.interpretation_a},
                           {"interpretation_b", diag.interpretation_b}};

  const IdentifiedMoments moments = identified_moments(table, shares);
  text << "\n== Identified conditional outcome means ==\n";
  auto mom_line = [&](const char* key, const char* label,
                      const std::optional<double>& m) {
    text << "  " << std::left << std::setw(44) << label
         << (m ? fmt(*m, 2) : "n/a") << '\n';
    if (m) report["moments"][key] = *m;
  };
  mom_line("m00_all", "E[Y(00)]", moments.m00_all);
  mom_line("m00_nj_a", "E[Y(00) | never/joint A]", moments.m00_nj_a);
  mom_line("m00_nj_b", "E[Y(00) | never/joint B]", moments.m00_nj_b);
  mom_line("m00_ndnd", "E[Y(00) | both never/defier]", moments.m00_ndnd);
  mom_line("m10_sd_a", "E[Y(10) | self/defier A]", moments.m10_sd_a);
  mom_line("m10_c_nd", "E[Y(10) | complier A, never/defier B]", moments.m10_c_nd);
  mom_line("m01_sd_b", "E[Y(01) | self/defier B]", moments.m01_sd_b);
  mom_line("m01_nd_c", "E[Y(01) | never/defier A, complier B]", moments.m01_nd_c);
  mom_line("m11_cc", "E[Y(11) | double compliers]", moments.m11_cc);
  mom_line("m00_sd_a", "E[Y(00) | self/defier A] (derived)", moments.m00_sd_a);
  mom_line("m00_sd_b", "E[Y(00) | self/defier B] (derived)", moments.m00_sd_b);

  const IvEstimates est = saturated_iv(table);
  std::optional<Eigen::Matrix4d> cov;
  if (in.dataset)
    cov = robust_covariance(*in.dataset, est.beta,
                            cfg.hc0 ? HcVariant::HC0 : HcVariant::HC1);

  text << "\n== Saturated IV fit ==\n";
  text << std::left << std::setw(12) << "term" << std::right << std::setw(12)
       << "coef" << std::setw(12) << (cov ? "se" : "") << std::setw(12)
       << (cov ? "p" : "") << '\n';
  static const char* kTerms[] = {"const", "D_A", "D_B", "D_A*D_B"};
  csv << "term,coef,se,p\n";
  for (int i = 0; i < 4; ++i) {
    text << std::left << std::setw(12) << kTerms[i] << std::right
         << std::setw(12) << fmt(est.beta(i), 2);
    json row;
    row["term"] = kTerms[i];
    row["coef"] = est.beta(i);
    csv << kTerms[i] << ',' << est.beta(i);
    if (cov) {
      const double se = std::sqrt((*cov)(i, i));
      const double p = normal_p_value(est.beta(i) / se);
      text << std::setw(12) << fmt(se, 2) << std::setw(12) << fmt(p, 2);
      row["se"] = se;
      row["p"] = p;
      csv << ',' << se << ',' << p;
    } else {
      csv << ",,";
    }
    text << '\n';
    csv << '\n';
    report["iv"]["fit"].push_back(row);
  }
  if (!cov)
    text << "  (standard errors need unit-level data; moments input carries "
            "none)\n";
  text << "  Wald ratios: A|Zb=0 " << fmt(est.wald_a0, 2) << ", A|Zb=1 "
       << fmt(est.wald_a1, 2) << ", B|Za=0 " << fmt(est.wald_b0, 2)
       << ", B|Za=1 " << fmt(est.wald_b1, 2) << '\n';
  report["iv"]["wald"] = {{"a0", est.wald_a0},
                          {"a1", est.wald_a1},
                          {"b0", est.wald_b0},
                          {"b1", est.wald_b1}};
  if (in.moments && in.moments->iv_beta) {
    const auto& b = *in.moments->iv_beta;
    text << "  reported fit in the moments file: (" << fmt(b[0], 2) << ", "
         << fmt(b[1], 2) << ", " << fmt(b[2], 2) << ", " << fmt(b[3], 2)
         << ")\n";
    report["iv"]["reported_beta"] = b;
  }

  write_report(cfg.out_dir, "analysis", cfg.format, text.str(), report,
               csv.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bounds

struct BoundsConfig {
  InputOptions input;
  RestrictionFlags restrict_flags;
  double k = 0.0;  // 0 = take from the moments file, default 100
  bool y11_ge_y00 = false;
  bool y11_ge_max = false;
  std::string p_j_b = "0";
  std::string format = "text";
  std::string out_dir;
};

IndirectInputs indirect_inputs_for(const LoadedInput& in) {
  if (in.moments && in.moments->iv_beta) {
    const auto& b = *in.moments->iv_beta;
    return {b[3], b[1], b[2]};
  }
  const IvEstimates est = saturated_iv(in.table);
  return {est.beta(3), est.beta(1), est.beta(2)};
}

int cmd_bounds(const BoundsConfig& cfg) {
  LoadedInput in = load_input(cfg.input);

  BoundInputs inputs;
  inputs.shares = type_shares(in.table, cfg.restrict_flags.r);
  inputs.moments = identified_moments(in.table, inputs.shares);
  inputs.k = cfg.k > 0.0
                 ? cfg.k
                 : (in.moments ? in.moments->outcome_upper_bound : 100.0);
  inputs.strengthen.y11_ge_y00 = cfg.y11_ge_y00;
  inputs.strengthen.y11_ge_max = cfg.y11_ge_max;

  json report;
  report["schema_version"] = 1;
  report["command"] = "bounds";
  report["k"] = inputs.k;
  std::ostringstream text;
  std::ostringstream csv;
  csv << "quantity,lo,hi,clipped,assumptions\n";
  auto emit = [&](const char* key, const std::string& label,
                  const AssumedInterval& iv) {
    text << "  " << std::left << std::setw(46) << label << fmt_interval(iv)
         << '\n';
    report["intervals"][key] = interval_to_json(iv);
    csv << key << ',' << iv.lo << ',' << iv.hi << ',' << iv.clipped << ','
        << iv.assumptions.to_string() << '\n';
  };

  text << "== Bounds on the double-complier parameters (K=" << fmt(inputs.k, 0)
       << ") ==\n";
  emit("y00_cc", "E[Y(00) | double compliers]", bound_y00_cc(inputs));
  const AssumedInterval joint = bound_joint_cc(inputs);
  emit("joint_cc", "joint effect", joint);

  const bool direct_ok =
      inputs.shares.marginals_a && inputs.shares.marginals_a->defier == 0.0 &&
      inputs.shares.marginals_b && inputs.shares.marginals_b->joint == 0.0;
  std::optional<AssumedInterval> laie_direct;
  std::optional<AuxMomentBounds> aux;
  if (direct_ok) {
    const LaieDirectBounds direct = bound_laie_direct(inputs);
    emit("y10_cc", "E[Y(10) | double compliers]", direct.y10_cc);
    emit("y01_cc", "E[Y(01) | double compliers]", direct.y01_cc);
    emit("laie_direct", "interaction effect, direct", direct.laie);
    laie_direct = direct.laie;
    if (inputs.shares.marginals_a->joint > 1e-9 &&
        inputs.shares.marginals_b->defier > 1e-9) {
      aux = bound_aux_moments(inputs);
      text << "\n== Auxiliary moment bounds ==\n";
      emit("y00_joint_a", "E[Y(00) | joint-complier A]", aux->y00_joint_a);
      emit("y10_joint_a", "E[Y(10) | joint-complier A]", aux->y10_joint_a);
      emit("y01_defier_b", "E[Y(01) | cross-defier B]", aux->y01_defier_b);
      emit("y00_defier_b", "E[Y(00) | cross-defier B]", aux->y00_defier_b);
      emit("effect_a_joint", "effect of A alone, joint-complier A",
           aux->effect_a_joint);
      emit("effect_b_defier", "effect of B alone, cross-defier B",
           aux->effect_b_defier);
    }
  } else {
    text << "  (direct interaction bounds need --no-cross-defiers-a and "
            "--no-joint-compliers-b)\n";
  }

  std::optional<AssumedInterval> laie_indirect;
  if (inputs.shares.marginals_a && inputs.shares.marginals_a->defier == 0.0) {
    const IndirectInputs iv = indirect_inputs_for(in);
    report["indirect"] = {{"beta_ab", iv.beta_ab},
                          {"ate_a_ref", iv.ate_a_ref},
                          {"ate_b_ref", iv.ate_b_ref},
                          {"identified_part",
                           laie_indirect_identified_part(inputs, iv)}};
    text << "\n== Indirect interaction bound ==\n";
    text << "  identified part: "
         << fmt(laie_indirect_identified_part(inputs, iv)) << '\n';
    if (cfg.p_j_b == "free") {
      const Interval range{0.0, std::max(0.0, inputs.shares.p_nj_b)};
      laie_indirect =
          bound_laie_indirect(inputs, iv, range, aux ? &*aux : nullptr);
      text << "  joint-complier share of B free in [" << fmt(range.lo, 2)
           << ", " << fmt(range.hi, 2) << "]\n";
    } else {
      const double p = std::stod(cfg.p_j_b);
      laie_indirect = bound_laie_indirect(inputs, iv, p, aux ? &*aux : nullptr);
      text << "  joint-complier share of B pinned at " << fmt(p, 2) << '\n';
    }
    emit("laie_indirect", "interaction effect, indirect", *laie_indirect);
  }

  if (laie_direct && laie_indirect) {
    auto both = intersect(*laie_direct, *laie_indirect);
    if (both) {
      emit("laie_intersection", "interaction effect, intersection", *both);
    } else {
      text << "  direct and indirect intervals are disjoint; the combined "
              "assumption set is rejected by the data\n";
      report["intervals"]["laie_intersection"] = nullptr;
    }
  }

  write_report(cfg.out_dir, "bounds", cfg.format, text.str(), report, csv.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sensitivity

struct SensitivityConfig {
  InputOptions input;
  RestrictionFlags restrict_flags;
  double k = 0.0;
  bool y11_ge_y00 = false;
  bool y11_ge_max = false;
  std::string mode = "both";  // direct | indirect | both
  std::vector<double> lambda_box{0.0, 3.0};
  int grid_res = 101;
  std::string p_j_b = "0";
  bool gnuplot = false;
  std::string format = "text";
  std::string out_dir;
};

std::string grid_to_csv(const LevelSetGrid& g) {
  std::ostringstream os;
  os.precision(12);
  os << "x_name,x_lo,x_hi,nx,y_name,y_lo,y_hi,ny,levels\n";
  os << g.x_name << ',' << g.spec.x_range.lo << ',' << g.spec.x_range.hi << ','
     << g.spec.nx << ',' << g.y_name << ',' << g.spec.y_range.lo << ','
     << g.spec.y_range.hi << ',' << g.spec.ny << ',';
  for (std::size_t i = 0; i < g.contour_levels.size(); ++i)
    os << (i ? "|" : "") << g.contour_levels[i];
  os << '\n';
  for (int i = 0; i < g.values.rows(); ++i) {
    for (int j = 0; j < g.values.cols(); ++j)
      os << (j ? "," : "") << g.values(i, j);
    os << '\n';
  }
  return os.str();
}

// gnuplot "splot ... nonuniform matrix" layout.
std::string grid_to_gnuplot(const LevelSetGrid& g) {
  std::ostringstream os;
  os.precision(12);
  auto coord = [](const Interval& r, int n, int i) {
    return n == 1 ? r.lo : r.lo + (r.hi - r.lo) * i / (n - 1);
  };
  os << g.spec.nx;
  for (int j = 0; j < g.spec.nx; ++j)
    os << ' ' << coord(g.spec.x_range, g.spec.nx, j);
  os << '\n';
  for (int i = 0; i < g.spec.ny; ++i) {
    os << coord(g.spec.y_range, g.spec.ny, i);
    for (int j = 0; j < g.spec.nx; ++j) os << ' ' << g.values(i, j);
    os << '\n';
  }
  return os.str();
}

std::string frontier_to_csv(const std::vector<std::pair<double, double>>& pts,
                            const std::string& x, const std::string& y) {
  std::ostringstream os;
  os.precision(12);
  os << x << ',' << y << '\n';
  for (const auto& [px, py] : pts) os << px << ',' << py << '\n';
  return os.str();
}

std::string affine_str(const AffineShare& a) {
  std::ostringstream os;
  os << fmt(a.base);
  if (a.per_share != 0.0)
    os << (a.per_share > 0 ? " + " : " - ") << fmt(std::abs(a.per_share))
       << "*P(.,j)";
  return os.str();
}

json model_to_json(const LambdaModel& m) {
  json j;
  j["mode"] = m.mode == LambdaMode::Direct ? "direct" : "indirect";
  j["intercept"] = {{"base", m.intercept.base},
                    {"per_share", m.intercept.per_share}};
  for (const auto& t : m.terms)
    j["terms"].push_back({{"name", t.name},
                          {"slope_base", t.slope.base},
                          {"slope_per_share", t.slope.per_share},
                          {"box_lo", t.box.lo},
                          {"box_hi", t.box.hi}});
  if (m.share_value) j["share_value"] = *m.share_value;
  return j;
}

int cmd_sensitivity(const SensitivityConfig& cfg) {
  LoadedInput in = load_input(cfg.input);
  BoundInputs inputs;
  inputs.shares = type_shares(in.table, cfg.restrict_flags.r);
  inputs.moments = identified_moments(in.table, inputs.shares);
  inputs.k = cfg.k > 0.0
                 ? cfg.k
                 : (in.moments ? in.moments->outcome_upper_bound : 100.0);
  inputs.strengthen.y11_ge_y00 = cfg.y11_ge_y00;
  inputs.strengthen.y11_ge_max = cfg.y11_ge_max;
  const IndirectInputs ind = indirect_inputs_for(in);

  if (cfg.lambda_box.size() != 2)
    throw SchemaError("--lambda-box expects lo,hi");
  const Interval box{cfg.lambda_box[0], cfg.lambda_box[1]};
  GridSpec grid_spec;
  grid_spec.x_range = box;
  grid_spec.y_range = box;
  grid_spec.nx = cfg.grid_res;
  grid_spec.ny = cfg.grid_res;

  json report;
  report["schema_version"] = 1;
  report["command"] = "sensitivity";
  std::ostringstream text;

  auto emit_grid = [&](const LambdaModel& model, const std::string& stem,
                       const std::string& x, const std::string& y) {
    auto frontier = zero_contour(model, x, y, grid_spec);
    json fj = json::array();
    for (const auto& [px, py] : frontier) fj.push_back({px, py});
    report["frontiers"][stem] = fj;
    if (cfg.out_dir.empty()) return;
    LevelSetGrid grid = level_set_grid(model, x, y, grid_spec);
    write_text(cfg.out_dir, stem + (cfg.gnuplot ? ".dat" : ".csv"),
               cfg.gnuplot ? grid_to_gnuplot(grid) : grid_to_csv(grid));
    write_text(cfg.out_dir, stem + "_frontier.csv",
               frontier_to_csv(frontier, x, y));
  };

  if (cfg.mode == "direct" || cfg.mode == "both") {
    const AssumedInterval joint = bound_joint_cc(inputs);
    LambdaModelPair pair =
        direct_lambda_model(joint, ind.ate_a_ref, ind.ate_b_ref);
    for (auto* m : {&pair.lower, &pair.upper})
      for (auto& t : m->terms) t.box = box;
    text << "== Direct multiplier analysis ==\n";
    text << "  lower model: " << affine_str(pair.lower.intercept) << " - "
         << fmt(ind.ate_a_ref, 2) << "*lambda_A - " << fmt(ind.ate_b_ref, 2)
         << "*lambda_B\n";
    text << "  upper model: " << affine_str(pair.upper.intercept) << " - "
         << fmt(ind.ate_a_ref, 2) << "*lambda_A - " << fmt(ind.ate_b_ref, 2)
         << "*lambda_B\n";
    const BoxBound lo_bb = bound_over_box(pair.lower);
    const BoxBound hi_bb = bound_over_box(pair.upper);
    text << "  over the box [" << fmt(box.lo, 1) << ", " << fmt(box.hi, 1)
         << "]^2: " << affine_str(lo_bb.lo)
         << " <= LAIE <= " << affine_str(hi_bb.hi) << '\n';
    auto frontier = zero_contour(pair.upper, "lambda_A", "lambda_B", grid_spec);
    text << "  breakdown frontier of the upper bound:";
    for (const auto& [px, py] : frontier)
      text << "  (" << fmt(px, 3) << ", " << fmt(py, 3) << ")";
    text << '\n';
    report["direct"]["lower_model"] = model_to_json(pair.lower);
    report["direct"]["upper_model"] = model_to_json(pair.upper);
    report["direct"]["box"] = {{"lo", lo_bb.lo.base}, {"hi", hi_bb.hi.base}};
    emit_grid(pair.upper, "direct_upper", "lambda_A", "lambda_B");
    emit_grid(pair.lower, "direct_lower", "lambda_A", "lambda_B");
  }

  if (cfg.mode == "indirect" || cfg.mode == "both") {
    std::optional<double> share;
    if (cfg.p_j_b != "free") share = std::stod(cfg.p_j_b);
    LambdaModel model = indirect_lambda_model(inputs, ind, share);
    for (auto& t : model.terms) t.box = box;
    text << "== Indirect multiplier analysis ==\n";
    text << "  LAIE = " << affine_str(model.intercept);
    for (const auto& t : model.terms)
      text << " + (" << affine_str(t.slope) << ")*" << t.name;
    text << '\n';
    const BoxBound bb = bound_over_box(model);
    text << "  over the box [" << fmt(box.lo, 1) << ", " << fmt(box.hi, 1)
         << "]^3: " << affine_str(bb.lo) << " <= LAIE <= " << affine_str(bb.hi)
         << '\n';
    report["indirect"]["model"] = model_to_json(model);
    report["indirect"]["box"] = {{"lo_base", bb.lo.base},
                                 {"lo_per_share", bb.lo.per_share},
                                 {"hi_base", bb.hi.base},
                                 {"hi_per_share", bb.hi.per_share}};
    if (share) {
      emit_grid(model, "indirect", "lambda_1", "lambda_2");
      report["indirect"]["interval"] = interval_to_json(bb.at(*share));
    } else {
      text << "  (grids need a pinned joint-complier share; pass --p-j-b)\n";
    }
  }

  write_report(cfg.out_dir, "sensitivity", cfg.format, text.str(), report);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate / verify

struct SimulateConfig {
  std::string spec_file;
  std::size_t n = 10000;
  std::size_t n_pairs = 10000;
  std::uint64_t seed = 1;
  std::string out_csv = "simulated.csv";
  std::string emit_moments;
};

MomentsSpec table_to_moments(const CellTable& t, double k) {
  MomentsSpec m;
  for (int z = 0; z < kCells; ++z) {
    const auto& c = t.cells[static_cast<std::size_t>(z)];
    auto& mc = m.cells[static_cast<std::size_t>(z)];
    mc.mass = c.mass;
    mc.dbar_a = c.dbar_a;
    mc.dbar_b = c.dbar_b;
    mc.ybar = c.ybar;
    m.treat_mean[static_cast<std::size_t>(z)] = c.treat_mean;
  }
  m.joint_z11 = t.cell(1, 1).treat_share;
  m.outcome_upper_bound = k;
  return m;
}

int cmd_simulate(const SimulateConfig& cfg) {
  oracle::PopulationSpec spec = oracle::load_population_spec_file(cfg.spec_file);
  oracle::Population pop = oracle::make_population(spec, cfg.n_pairs);
  Dataset data = oracle::sample_dataset(pop, cfg.n, cfg.seed, spec.assignment);
  write_csv_file(cfg.out_csv, data);
  std::cout << "wrote " << data.size() << " rows to " << cfg.out_csv << '\n';
  if (!cfg.emit_moments.empty()) {
    const CellTable exact = oracle::exact_cell_table(pop, spec.assignment);
    write_json_file(cfg.emit_moments,
                    moments_to_json(table_to_moments(exact, spec.outcomes.k)));
    std::cout << "wrote exact population moments to " << cfg.emit_moments
              << '\n';
  }
  return kExitOk;
}

struct VerifyConfig {
  std::string spec_file;
  std::string random_mode;
  std::vector<std::string> theorems;
  int count = 100;
  std::size_t n_pairs = 120;
  std::uint64_t seed = 20240801;
  bool contain = false;
};

std::vector<oracle::Theorem> default_theorems(oracle::PopulationMode mode,
                                              bool contain) {
  using oracle::Theorem;
  switch (mode) {
    case oracle::PopulationMode::OneSided:
      if (contain) return {Theorem::BoundsContain};
      return {Theorem::T1, Theorem::T2Eq5, Theorem::T2Eq6, Theorem::T3,
              Theorem::L1, Theorem::A1, Theorem::A2};
    case oracle::PopulationMode::MonotoneAOneSidedB: return {Theorem::B2};
    case oracle::PopulationMode::OneSidedAMonotoneB: return {Theorem::B3};
    case oracle::PopulationMode::Unrestricted: return {Theorem::B1};
  }
  return {};
}

int run_verify_case(const oracle::Population& pop,
                    const oracle::AssignmentProbs& assign,
                    const std::vector<oracle::Theorem>& theorems,
                    const oracle::PopulationSpec& spec, const std::string& label,
                    int& failures) {
  int checks = 0;
  for (auto theorem : theorems) {
    const oracle::VerifyReport rep = oracle::verify(pop, assign, theorem);
    checks += static_cast<int>(rep.checks.size());
    if (!rep.pass) {
      ++failures;
      std::cout << "FAIL " << to_string(theorem) << " on " << label << '\n';
      for (const auto& c : rep.checks)
        if (!c.pass)
          std::cout << "     " << c.name << ": lhs=" << c.lhs
                    << " rhs=" << c.rhs << " diff=" << c.diff() << '\n';
      std::cerr << "replay spec: "
                << oracle::population_spec_to_json(spec).dump() << '\n';
    }
  }
  return checks;
}

int cmd_verify(const VerifyConfig& cfg) {
  using oracle::Theorem;
  int failures = 0;
  int cases = 0;
  int checks = 0;

  std::vector<Theorem> theorems;
  for (const auto& t : cfg.theorems)
    theorems.push_back(oracle::theorem_from_string(t));

  if (!cfg.spec_file.empty()) {
    oracle::PopulationSpec spec =
        oracle::load_population_spec_file(cfg.spec_file);
    if (theorems.empty()) theorems = default_theorems(spec.mode, cfg.contain);
    oracle::Population pop = oracle::make_population(spec, cfg.n_pairs);
    checks += run_verify_case(pop, spec.assignment, theorems, spec,
                              cfg.spec_file, failures);
    ++cases;
  } else {
    oracle::RandomPopulationOptions opts;
    opts.mode = cfg.random_mode.empty()
                    ? oracle::PopulationMode::OneSided
                    : oracle::population_mode_from_string(cfg.random_mode);
    if (theorems.empty()) theorems = default_theorems(opts.mode, cfg.contain);
    for (auto theorem : theorems) {
      if (theorem == Theorem::Cor2) {
        opts.no_cross_defiers_a = opts.no_cross_defiers_b = true;
        opts.no_nj_pairs = true;
      }
      if (theorem == Theorem::BoundsContain) {
        opts.no_cross_defiers_a = true;
        opts.no_joint_compliers_b = true;
        opts.outcomes.monotone_response = true;
      }
    }
    for (int i = 0; i < cfg.count; ++i) {
      oracle::PopulationSpec spec = oracle::random_population_spec(
          oracle::derive_seed(cfg.seed, static_cast<std::uint64_t>(i)), opts);
      oracle::Population pop = oracle::make_population(spec, cfg.n_pairs);
      checks += run_verify_case(pop, spec.assignment, theorems, spec,
                                "case " + std::to_string(i), failures);
      ++cases;
    }
  }

  std::cout << (failures == 0 ? "PASS" : "FAIL") << ": " << cases
            << " population(s), " << checks << " check(s), " << failures
            << " failing theorem instance(s)\n";
  return failures == 0 ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "IV estimands, compliance-type shares, partial-identification bounds "
      "and sensitivity analysis for 2x2 factorial designs with endogenous "
      "takeup"};
  app.require_subcommand(1);

  AnalyzeConfig analyze_cfg;
  auto* analyze = app.add_subcommand(
      "analyze", "Descriptive tables, type shares and the saturated IV fit");
  add_input_options(analyze, analyze_cfg.input);
  add_restriction_options(analyze, analyze_cfg.restrict_flags);
  analyze->add_flag("--allow-violations", analyze_cfg.allow_violations,
                    "Continue past one-sided takeup violations");
  analyze->add_flag("--hc0", analyze_cfg.hc0,
                    "Use HC0 instead of HC1 robust standard errors");
  analyze->add_option("--format", analyze_cfg.format, "text|json|csv")
      ->check(CLI::IsMember({"text", "json", "csv"}));
  analyze->add_option("--out", analyze_cfg.out_dir, "Output directory");

  BoundsConfig bounds_cfg;
  auto* bounds = app.add_subcommand(
      "bounds",
      "Partial-identification bounds on the joint and interaction effects");
  add_input_options(bounds, bounds_cfg.input);
  add_restriction_options(bounds, bounds_cfg.restrict_flags);
  bounds->add_option("--k", bounds_cfg.k, "Outcome upper bound K");
  bounds->add_flag("--y11-ge-y00", bounds_cfg.y11_ge_y00,
                   "Assume joint takeup never hurts relative to no treatment");
  bounds->add_flag("--y11-ge-max", bounds_cfg.y11_ge_max,
                   "Assume joint takeup weakly beats each standalone arm");
  bounds->add_option("--p-j-b", bounds_cfg.p_j_b,
                     "Joint-complier share of B: a number or 'free'");
  bounds->add_option("--format", bounds_cfg.format, "text|json|csv")
      ->check(CLI::IsMember({"text", "json", "csv"}));
  bounds->add_option("--out", bounds_cfg.out_dir, "Output directory");

  SensitivityConfig sens_cfg;
  auto* sens = app.add_subcommand(
      "sensitivity", "Multiplier models, box bounds, level-set grids and "
                     "breakdown frontiers");
  add_input_options(sens, sens_cfg.input);
  add_restriction_options(sens, sens_cfg.restrict_flags);
  sens->add_option("--k", sens_cfg.k, "Outcome upper bound K");
  sens->add_flag("--y11-ge-y00", sens_cfg.y11_ge_y00,
                 "Tighten the joint-effect bound before building the direct "
                 "models");
  sens->add_flag("--y11-ge-max", sens_cfg.y11_ge_max,
                 "Also tighten the standalone-arm bounds");
  sens->add_option("--mode", sens_cfg.mode, "direct|indirect|both")
      ->check(CLI::IsMember({"direct", "indirect", "both"}));
  sens->add_option("--lambda-box", sens_cfg.lambda_box,
                   "Multiplier box as lo,hi (default 0,3)")
      ->delimiter(',')
      ->expected(2);
  sens->add_option("--grid-res", sens_cfg.grid_res, "Lattice resolution");
  sens->add_option("--p-j-b", sens_cfg.p_j_b,
                   "Joint-complier share of B: a number or 'free'");
  sens->add_flag("--gnuplot", sens_cfg.gnuplot,
                 "Write grids in gnuplot nonuniform-matrix format");
  sens->add_option("--format", sens_cfg.format, "text|json")
      ->check(CLI::IsMember({"text", "json"}));
  sens->add_option("--out", sens_cfg.out_dir,
                   "Output directory for grid files");

  SimulateConfig sim_cfg;
  auto* sim = app.add_subcommand("simulate",
                                 "Draw a dataset from a synthetic population");
  sim->add_option("--spec", sim_cfg.spec_file, "Population spec JSON")
      ->required();
  sim->add_option("--n", sim_cfg.n, "Number of sampled rows");
  sim->add_option("--n-pairs", sim_cfg.n_pairs, "Population size");
  sim->add_option("--seed", sim_cfg.seed, "Sampling seed");
  sim->add_option("--out", sim_cfg.out_csv, "Output CSV path");
  sim->add_option("--emit-moments", sim_cfg.emit_moments,
                  "Also write the exact population moments to this JSON file");

  VerifyConfig ver_cfg;
  auto* ver = app.add_subcommand(
      "verify", "Check the identification results on synthetic populations");
  ver->add_option("--spec", ver_cfg.spec_file, "Population spec JSON");
  ver->add_option("--random-mode", ver_cfg.random_mode,
                  "one_sided|monotone_a_one_sided_b|one_sided_a_monotone_b|"
                  "unrestricted");
  ver->add_option("--theorems", ver_cfg.theorems,
                  "Subset to run (T1, T2_EQ5, T2_EQ6, COR2, T3, B1, B2, B3, "
                  "L1, A1, A2, BOUNDS_CONTAIN)")
      ->delimiter(',');
  ver->add_option("--count", ver_cfg.count, "Number of random populations");
  ver->add_option("--n-pairs", ver_cfg.n_pairs, "Pairs per population");
  ver->add_option("--seed", ver_cfg.seed, "Master seed");
  ver->add_flag("--contain", ver_cfg.contain,
                "Run the bound-containment suite instead of the theorem suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) return cmd_analyze(analyze_cfg);
    if (bounds->parsed()) return cmd_bounds(bounds_cfg);
    if (sens->parsed()) return cmd_sensitivity(sens_cfg);
    if (sim->parsed()) return cmd_simulate(sim_cfg);
    if (ver->parsed()) return cmd_verify(ver_cfg);
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIdentification;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
