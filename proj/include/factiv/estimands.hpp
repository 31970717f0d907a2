#pragma once

#include <Eigen/Dense>
#include <optional>

#include "factiv/cell_table.hpp"
#include "factiv/data.hpp"

namespace factiv {

// Treated contrasts below this (probabilities live on [0,1]) count as a zero
// denominator and surface as WeakFirstStageError instead of an infinity.
inline constexpr double kFirstStageTol = 1e-8;

// Split-sample Wald ratio for one treatment arm holding the partner
// instrument fixed: outcome contrast over takeup contrast across the two
// own-instrument cells.
double wald(const CellTable& table, Side side, int partner_z);

// Saturated first-stage coefficients: intercepts and instrument contrasts of
// E[D_A|Z], E[D_B|Z] and E[D_A D_B|Z]. Row r of `slopes` holds the
// (Z_A, Z_B, Z_A Z_B) coefficients of the r-th regressand (D_A, D_B, D_A D_B).
struct FirstStage {
  Eigen::Matrix3d slopes;      // the transposed coefficient matrix Gamma'
  Eigen::Vector3d intercepts;
};

FirstStage first_stage(const CellTable& table);

// Reduced-form regression of the outcome on the saturated instrument design.
struct ReducedForm {
  double intercept = 0.0;
  Eigen::Vector3d slopes;  // (pi_A, pi_B, pi_AB)
};

ReducedForm reduced_form(const CellTable& table);

struct IvEstimates {
  double wald_a0 = 0.0, wald_a1 = 0.0, wald_b0 = 0.0, wald_b1 = 0.0;
  Eigen::Vector4d beta;  // (beta_0, beta_A, beta_B, beta_AB)
  ReducedForm reduced;
  FirstStage stage1;
  std::optional<Eigen::Matrix4d> robust_cov;
};

// Full-sample just-identified IV estimand, computed in closed form from cell
// means: the slope block solves slopes' * b = pi and the intercept matches the
// reduced form. Throws IdentificationError when a first-stage diagonal entry
// vanishes, MissingCellError on an empty instrument cell.
IvEstimates saturated_iv(const CellTable& table);

enum class HcVariant { HC0, HC1 };

// Heteroscedasticity-robust sandwich covariance of the just-identified IV
// estimator with regressors (1, D_A, D_B, D_A D_B) and instruments
// (1, Z_A, Z_B, Z_A Z_B). Weights are treated as frequency weights.
Eigen::Matrix4d robust_covariance(const Dataset& data, const Eigen::Vector4d& beta,
                                  HcVariant variant = HcVariant::HC1);

}  // namespace factiv
