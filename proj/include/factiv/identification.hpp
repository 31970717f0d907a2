#pragma once

#include <array>
#include <optional>
#include <string>

#include "factiv/cell_table.hpp"

namespace factiv {

// Optional compliance-type restrictions. Consistency with the data is
// checked, never assumed.
struct Restrictions {
  bool no_cross_defiers_a = false;
  bool no_joint_compliers_a = false;
  bool no_cross_defiers_b = false;
  bool no_joint_compliers_b = false;
  // Rules out pairs combining a never-taker with a joint complier.
  bool no_nj_pairs = false;
};

// Marginal compliance-type shares for one member, resolvable only under a
// restriction on that side.
struct ResolvedMarginals {
  double self = 0.0;
  double joint = 0.0;
  double never = 0.0;
  double defier = 0.0;
};

// Identified aggregates of the compliance-type distribution. The aggregate
// fields are always available; the per-type marginals only under the
// corresponding restriction.
struct TypeShares {
  // Takeup probability with only the own instrument on: self-compliers plus
  // cross-defiers.
  double p_sd_a = 0.0;
  double p_sd_b = 0.0;
  // Joint treatment distribution in the double-assignment cell.
  double p_cc = 0.0;
  double p_c_ndA = 0.0;   // A complier, B never/defier
  double p_ndA_c = 0.0;   // A never/defier, B complier
  double p_ndnd = 0.0;
  // Complier / non-complier aggregates per side.
  double p_c_a = 0.0, p_nd_a = 0.0, p_nj_a = 0.0;
  double p_c_b = 0.0, p_nd_b = 0.0, p_nj_b = 0.0;
  // Joint-complier-minus-cross-defier contrasts (takeup response to the
  // partner instrument).
  double contrast_a = 0.0;  // P(j,.) - P(d,.)
  double contrast_b = 0.0;  // P(.,j) - P(.,d)

  std::optional<ResolvedMarginals> marginals_a;
  std::optional<ResolvedMarginals> marginals_b;
};

// Fills the aggregates from the observed takeup moments and resolves the
// marginal type shares permitted by the restrictions. Throws RestrictionError
// when a restriction contradicts the data (a resolved share below -1e-9) and
// PreconditionError when the table fails the one-sided takeup check.
TypeShares type_shares(const CellTable& table, const Restrictions& restrictions = {});

// Sign of the partner-instrument takeup response and the compliance types its
// existence implies.
struct ComplianceDiagnostics {
  double contrast_a = 0.0;
  double contrast_b = 0.0;
  std::string interpretation_a;
  std::string interpretation_b;
};

ComplianceDiagnostics compliance_diagnostics(const CellTable& table);

// Point-identified conditional means of the potential outcomes. Entries on
// zero-mass observation cells stay unset.
struct IdentifiedMoments {
  std::optional<double> m00_all;    // E[Y(00)]
  std::optional<double> m00_nj_a;   // E[Y(00) | A never/joint]
  std::optional<double> m00_nj_b;   // E[Y(00) | B never/joint]
  std::optional<double> m00_ndnd;   // E[Y(00) | both never/defier]
  std::optional<double> m10_sd_a;   // E[Y(10) | A self/defier]
  std::optional<double> m10_c_nd;   // E[Y(10) | A complier, B never/defier]
  std::optional<double> m01_sd_b;   // E[Y(01) | B self/defier]
  std::optional<double> m01_nd_c;   // E[Y(01) | A never/defier, B complier]
  std::optional<double> m11_cc;     // E[Y(11) | both compliers]
  // Derived by iterated expectations from the entries above.
  std::optional<double> m00_sd_a;   // E[Y(00) | A self/defier]
  std::optional<double> m00_sd_b;   // E[Y(00) | B self/defier]
};

IdentifiedMoments identified_moments(const CellTable& table,
                                     const TypeShares& shares);

// mean * mass with the zero-mass convention: an undefined mean contributes
// nothing when its weight vanishes, and is an identification failure
// otherwise.
double mass_weighted(const std::optional<double>& mean, double mass,
                     const std::string& what);

// Throws IdentificationError when the moment is unset.
double require_moment(const std::optional<double>& mean, const std::string& what);

}  // namespace factiv
