#include "factiv/identification.hpp"

#include <cmath>
#include <sstream>

#include "factiv/errors.hpp"

namespace factiv {

namespace {

constexpr double kShareTol = 1e-9;

// Clamps tiny negative shares produced by finite-precision arithmetic;
// anything below -kShareTol is a genuine inconsistency.
double resolve_share(double value, const std::string& inequality) {
  if (value < -kShareTol) {
    std::ostringstream os;
    os << "restriction contradicts the data: " << inequality
       << " (resolved share " << value << ")";
    throw RestrictionError(os.str());
  }
  return std::max(value, 0.0);
}

void require_cell(const CellTable& table, int za, int zb) {
  if (!table.cell_nonempty(za, zb)) {
    std::ostringstream os;
    os << "instrument cell (Z_A=" << za << ", Z_B=" << zb << ") is empty";
    throw MissingCellError(os.str());
  }
}

}  // namespace

TypeShares type_shares(const CellTable& table, const Restrictions& restrictions) {
  if (!check_one_sided(table).pass)
    throw PreconditionError(
        "type shares require one-sided takeup; run check_one_sided for the "
        "violation report");
  require_cell(table, 1, 0);
  require_cell(table, 0, 1);
  require_cell(table, 1, 1);

  TypeShares s;
  s.p_sd_a = table.cell(1, 0).dbar_a;
  s.p_sd_b = table.cell(0, 1).dbar_b;
  const InstrumentCell& both = table.cell(1, 1);
  s.p_cc = both.treat_share[cell_index(1, 1)];
  s.p_c_ndA = both.treat_share[cell_index(1, 0)];
  s.p_ndA_c = both.treat_share[cell_index(0, 1)];
  s.p_ndnd = both.treat_share[cell_index(0, 0)];
  s.p_c_a = both.dbar_a;
  s.p_c_b = both.dbar_b;
  s.p_nd_a = 1.0 - s.p_c_a;
  s.p_nd_b = 1.0 - s.p_c_b;
  s.p_nj_a = 1.0 - s.p_sd_a;
  s.p_nj_b = 1.0 - s.p_sd_b;
  s.contrast_a = s.p_c_a - s.p_sd_a;
  s.contrast_b = s.p_c_b - s.p_sd_b;

  auto resolve = [](double p_sd, double p_c, double contrast, bool no_defiers,
                    bool no_joint, const char* member) {
    ResolvedMarginals m;
    std::string tag(member);
    if (no_defiers && no_joint) {
      if (std::abs(contrast) > kShareTol)
        throw RestrictionError("restriction contradicts the data: with neither "
                               "cross-defiers nor joint compliers for " + tag +
                               ", the partner-instrument contrast must vanish, got " +
                               std::to_string(contrast));
      m.self = p_sd;
      m.never = resolve_share(1.0 - p_sd, "P(never " + tag + ") >= 0");
    } else if (no_defiers) {
      m.self = p_sd;
      m.joint = resolve_share(
          contrast, "no cross-defiers for " + tag +
                        " requires takeup with both instruments >= takeup with "
                        "the own instrument alone");
      m.never = resolve_share(1.0 - p_c, "P(never " + tag + ") >= 0");
    } else {
      m.self = p_c;
      m.defier = resolve_share(
          -contrast, "no joint compliers for " + tag +
                         " requires takeup with the own instrument alone >= "
                         "takeup with both instruments");
      m.never = resolve_share(1.0 - p_sd, "P(never " + tag + ") >= 0");
    }
    return m;
  };

  if (restrictions.no_cross_defiers_a || restrictions.no_joint_compliers_a)
    s.marginals_a = resolve(s.p_sd_a, s.p_c_a, s.contrast_a,
                            restrictions.no_cross_defiers_a,
                            restrictions.no_joint_compliers_a, "A");
  if (restrictions.no_cross_defiers_b || restrictions.no_joint_compliers_b)
    s.marginals_b = resolve(s.p_sd_b, s.p_c_b, s.contrast_b,
                            restrictions.no_cross_defiers_b,
                            restrictions.no_joint_compliers_b, "B");
  return s;
}

ComplianceDiagnostics compliance_diagnostics(const CellTable& table) {
  require_cell(table, 1, 1);
  require_cell(table, 1, 0);
  require_cell(table, 0, 1);
  ComplianceDiagnostics d;
  d.contrast_a = table.cell(1, 1).dbar_a - table.cell(1, 0).dbar_a;
  d.contrast_b = table.cell(1, 1).dbar_b - table.cell(0, 1).dbar_b;
  auto interpret = [](double c, const char* member) -> std::string {
    std::ostringstream os;
    if (c > 0)
      os << "joint compliers exist for " << member;
    else if (c < 0)
      os << "cross-defiers exist for " << member;
    else
      os << "takeup of " << member
         << " is consistent with the treatment exclusion restriction";
    return os.str();
  };
  d.interpretation_a = interpret(d.contrast_a, "A");
  d.interpretation_b = interpret(d.contrast_b, "B");
  return d;
}

double mass_weighted(const std::optional<double>& mean, double mass,
                     const std::string& what) {
  if (mass <= kShareTol) return 0.0;
  if (!mean)
    throw IdentificationError(what + " is undefined but carries mass " +
                              std::to_string(mass));
  return *mean * mass;
}

double require_moment(const std::optional<double>& mean, const std::string& what) {
  if (!mean) throw IdentificationError(what + " is not identified (empty cell)");
  return *mean;
}

IdentifiedMoments identified_moments(const CellTable& table,
                                     const TypeShares& shares) {
  if (!check_one_sided(table).pass)
    throw PreconditionError("identified moments require one-sided takeup");

  auto entry = [&](int za, int zb, int da, int db) {
    return table.cell(za, zb).treat_mean[static_cast<std::size_t>(cell_index(da, db))];
  };

  IdentifiedMoments m;
  m.m00_all = entry(0, 0, 0, 0);
  m.m00_nj_a = entry(1, 0, 0, 0);
  m.m00_nj_b = entry(0, 1, 0, 0);
  m.m00_ndnd = entry(1, 1, 0, 0);
  m.m10_sd_a = entry(1, 0, 1, 0);
  m.m10_c_nd = entry(1, 1, 1, 0);
  m.m01_sd_b = entry(0, 1, 0, 1);
  m.m01_nd_c = entry(1, 1, 0, 1);
  m.m11_cc = entry(1, 1, 1, 1);

  // Iterated expectations: the no-treatment mean splits across self/defier
  // and never/joint members.
  auto derived = [&](double p_sd, double p_nj, const std::optional<double>& m_nj,
                     const char* member) -> std::optional<double> {
    if (!m.m00_all || p_sd <= kShareTol) return std::nullopt;
    const double top = *m.m00_all - mass_weighted(m_nj, p_nj,
        std::string("E[Y(00) | never/joint ") + member + "]");
    return top / p_sd;
  };
  m.m00_sd_a = derived(shares.p_sd_a, shares.p_nj_a, m.m00_nj_a, "A");
  m.m00_sd_b = derived(shares.p_sd_b, shares.p_nj_b, m.m00_nj_b, "B");
  return m;
}

}  // namespace factiv
