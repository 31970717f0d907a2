#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "factiv/data.hpp"

namespace factiv {

inline constexpr int kCells = 4;

// Flat index of a binary pair; used for both instrument and treatment cells.
constexpr int cell_index(int first, int second) { return first * 2 + second; }

enum class Side { A, B };

// Sufficient statistics for one instrument cell (z_a, z_b): total mass, the
// conditional distribution over the four treatment cells, per-treatment-cell
// outcome means, and the marginal takeup / outcome means.
struct InstrumentCell {
  double mass = 0.0;
  std::array<double, kCells> treat_share{};               // P(D_A, D_B | Z)
  std::array<std::optional<double>, kCells> treat_mean{}; // E[Y | D, Z]
  double dbar_a = 0.0;   // E[D_A | Z]
  double dbar_b = 0.0;   // E[D_B | Z]
  double dbar_ab = 0.0;  // E[D_A * D_B | Z]
  std::optional<double> ybar;  // E[Y | Z]
};

// Everything downstream (estimands, type shares, bounds) is a function of
// this table. Built either from unit-level data or directly from published
// cell probabilities and means; in the latter case small rounding
// inconsistencies between the marginal and joint fields are tolerated.
struct CellTable {
  std::array<InstrumentCell, kCells> cells{};
  bool from_moments = false;

  const InstrumentCell& cell(int z_a, int z_b) const {
    return cells[static_cast<std::size_t>(cell_index(z_a, z_b))];
  }
  InstrumentCell& cell(int z_a, int z_b) {
    return cells[static_cast<std::size_t>(cell_index(z_a, z_b))];
  }

  double total_mass() const;
  double mass(int z_a, int z_b) const { return cell(z_a, z_b).mass; }
  bool cell_nonempty(int z_a, int z_b) const { return cell(z_a, z_b).mass > 0.0; }

  // E[D_side | Z = (z_own, z_partner)], cells oriented by side: for side B the
  // own instrument is z_b.
  double dbar(Side side, int z_own, int z_partner) const;
  std::optional<double> ybar_own(Side side, int z_own, int z_partner) const;
};

// User-supplied moments, mirroring the published-table layout: per instrument
// cell the takeup and outcome means, the joint treatment distribution in the
// double-assignment cell, and the treatment-cell outcome means.
struct MomentsSpec {
  struct Cell {
    double mass = 1.0;  // relative cell weight (e.g. number of observations)
    double dbar_a = 0.0;
    double dbar_b = 0.0;
    std::optional<double> ybar;
  };
  std::array<Cell, kCells> cells{};  // indexed cell_index(z_a, z_b)
  // P(D_A=da, D_B=db | Z_A=1, Z_B=1), indexed cell_index(da, db).
  std::array<double, kCells> joint_z11{};
  // E[Y | D, Z] for identified configurations, indexed [z][d]; absent entries
  // mean "cell empty / not reported".
  std::array<std::array<std::optional<double>, kCells>, kCells> treat_mean{};
  double outcome_upper_bound = 100.0;  // K
  // Published IV coefficients, when available (used by the indirect pipeline).
  std::optional<std::array<double, 4>> iv_beta;
  std::optional<std::array<double, 4>> iv_se;
};

// Weighted aggregation of a dataset into the cell table. Dataset must be
// nonempty.
CellTable build_cell_table(const Dataset& data);

// Builds the table directly from published moments. Treatment-cell shares in
// cells other than (1,1) are derived from the marginal takeup means under
// one-sided noncompliance.
CellTable build_cell_table(const MomentsSpec& moments);

// Diagnostic result of the one-sided noncompliance check: mass observed taking
// a treatment whose own instrument is off.
struct OneSidedReport {
  double violation_mass_a = 0.0;  // D_A = 1 while Z_A = 0
  double violation_mass_b = 0.0;  // D_B = 1 while Z_B = 0
  std::vector<std::string> violations;
  bool pass = false;
};

OneSidedReport check_one_sided(const CellTable& table);

// Verifies the internal consistency of the table (shares sum to one, marginal
// means match the joint distribution, treatment means defined exactly on
// positive-share cells). Throws SchemaError on violation. Tables built from
// rounded published moments need a loose tolerance.
void validate_cell_table(const CellTable& table, double tol = 1e-9);

}  // namespace factiv
