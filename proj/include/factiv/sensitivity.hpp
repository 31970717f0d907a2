#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "factiv/bounds.hpp"
#include "factiv/interval.hpp"

namespace factiv {

// A scalar that may depend affinely on the unidentified joint-complier share
// of B (written P(.,j) in reports).
struct AffineShare {
  double base = 0.0;
  double per_share = 0.0;
  double at(double share) const { return base + per_share * share; }
  bool depends_on_share() const { return per_share != 0.0; }
};

enum class LambdaMode { Direct, Indirect };

struct LambdaTerm {
  std::string name;
  AffineShare slope;
  Interval box{0.0, 3.0};
};

// An affine expression in unknown effect-ratio multipliers:
//   value(lambda) = intercept + sum_i slope_i * lambda_i,
// optionally still symbolic in the free share P(.,j).
struct LambdaModel {
  LambdaMode mode = LambdaMode::Direct;
  AffineShare intercept;
  std::vector<LambdaTerm> terms;
  // Set when P(.,j) is pinned; unset models report results affine in it.
  std::optional<double> share_value;
  AssumptionSet assumptions;

  double value(const std::vector<double>& lambda, double share) const;
  double value(const std::vector<double>& lambda) const;
  int term_index(const std::string& name) const;  // -1 when absent
  // Largest admissible share, used for sign-stability checks on free-share
  // models.
  double share_max = 1.0;
};

struct LambdaModelPair {
  LambdaModel lower;
  LambdaModel upper;
};

// Multiplier models for the joint-effect route: the joint-effect bound
// endpoints shifted by the standalone effects scaled with lambda_A, lambda_B.
LambdaModelPair direct_lambda_model(const AssumedInterval& joint_bound,
                                    double ate_a_ref, double ate_b_ref);

// Multiplier model for the interaction-coefficient route, with multipliers
// lambda_1 (A joint compliers), lambda_2 (B cross-defiers), lambda_3 (B joint
// compliers). Pass a share to pin P(.,j); leave unset to keep it symbolic.
LambdaModel indirect_lambda_model(const BoundInputs& in, const IndirectInputs& iv,
                                  std::optional<double> p_j_b = 0.0);

// Exact range of the affine model over its lambda box, attained at box
// vertices. Endpoints stay affine in the free share.
struct BoxBound {
  AffineShare lo;
  AffineShare hi;
  AssumptionSet assumptions;
  AssumedInterval at(double share) const;
};

BoxBound bound_over_box(const LambdaModel& model);

// Convenience when the share is pinned (or absent from the model).
AssumedInterval bound_over_box_interval(const LambdaModel& model);

struct GridSpec {
  Interval x_range{0.0, 3.0};
  Interval y_range{0.0, 3.0};
  int nx = 101;
  int ny = 101;
};

struct LevelSetGrid {
  std::string x_name, y_name;
  GridSpec spec;
  // values(i, j) = model at (x_j, y_i); row-major over the lattice.
  Eigen::MatrixXd values;
  std::vector<double> contour_levels;  // includes 0 when it is attained
  std::vector<std::pair<std::string, double>> fixed;
};

// Evaluates the model over the lattice spanned by two multipliers, holding
// the rest at the supplied values (default 0).
LevelSetGrid level_set_grid(
    const LambdaModel& model, const std::string& var_x, const std::string& var_y,
    const GridSpec& spec = {},
    const std::vector<std::pair<std::string, double>>& fixed = {});

// The zero contour of the model in the (var_x, var_y) plane clipped to the
// grid rectangle: for an affine model this is a segment (possibly empty).
std::vector<std::pair<double, double>> zero_contour(
    const LambdaModel& model, const std::string& var_x, const std::string& var_y,
    const GridSpec& spec = {},
    const std::vector<std::pair<std::string, double>>& fixed = {});

}  // namespace factiv
