#include "factiv/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "factiv/errors.hpp"

namespace factiv {

namespace {

double resolved_share(const LambdaModel& model) {
  if (model.share_value) return *model.share_value;
  for (const auto& t : model.terms)
    if (t.slope.depends_on_share())
      throw PreconditionError(
          "model slopes depend on the free share P(.,j); pin it first");
  if (model.intercept.depends_on_share())
    throw PreconditionError(
        "model intercept depends on the free share P(.,j); pin it first");
  return 0.0;
}

void validate_box(const Interval& box) {
  if (!(box.lo <= box.hi) || box.lo < 0.0)
    throw SchemaError("lambda box must satisfy 0 <= lo <= hi");
}

}  // namespace

double LambdaModel::value(const std::vector<double>& lambda, double share) const {
  if (lambda.size() != terms.size())
    throw SchemaError("lambda vector length does not match the model");
  double v = intercept.at(share);
  for (std::size_t i = 0; i < terms.size(); ++i)
    v += terms[i].slope.at(share) * lambda[i];
  return v;
}

double LambdaModel::value(const std::vector<double>& lambda) const {
  return value(lambda, share_value.value_or(0.0));
}

int LambdaModel::term_index(const std::string& name) const {
  for (std::size_t i = 0; i < terms.size(); ++i)
    if (terms[i].name == name) return static_cast<int>(i);
  return -1;
}

LambdaModelPair direct_lambda_model(const AssumedInterval& joint_bound,
                                    double ate_a_ref, double ate_b_ref) {
  auto build = [&](double intercept) {
    LambdaModel m;
    m.mode = LambdaMode::Direct;
    m.intercept = {intercept, 0.0};
    m.terms = {{"lambda_A", {-ate_a_ref, 0.0}, {0.0, 3.0}},
               {"lambda_B", {-ate_b_ref, 0.0}, {0.0, 3.0}}};
    m.share_value = 0.0;
    m.assumptions = joint_bound.assumptions;
    return m;
  };
  return {build(joint_bound.lo), build(joint_bound.hi)};
}

LambdaModel indirect_lambda_model(const BoundInputs& in, const IndirectInputs& iv,
                                  std::optional<double> p_j_b) {
  const double p_cc = in.shares.p_cc;
  if (p_cc <= 1e-9)
    throw IdentificationError("double-complier share P(c,c) is zero");
  const auto& ma = in.shares.marginals_a;
  if (!ma || ma->defier != 0.0)
    throw PreconditionError(
        "requires type shares resolved under no cross-defiers for A");
  const double net_defier_b = -in.shares.contrast_b;

  LambdaModel m;
  m.mode = LambdaMode::Indirect;
  m.intercept = {laie_indirect_identified_part(in, iv), 0.0};
  m.terms = {
      {"lambda_1", {-ma->joint / p_cc * iv.ate_a_ref, 0.0}, {0.0, 3.0}},
      {"lambda_2",
       {net_defier_b / p_cc * iv.ate_b_ref, iv.ate_b_ref / p_cc},
       {0.0, 3.0}},
      {"lambda_3", {0.0, -iv.ate_b_ref / p_cc}, {0.0, 3.0}},
  };
  m.share_value = p_j_b;
  m.assumptions = {AssumptionTag::OneSided, AssumptionTag::NoCrossDefiersA};
  // The share cannot exceed the non-responder mass of B.
  m.share_max = std::max(0.0, in.shares.p_nj_b);
  return m;
}

BoxBound bound_over_box(const LambdaModel& model) {
  BoxBound out;
  out.assumptions = model.assumptions;
  out.lo = model.intercept;
  out.hi = model.intercept;
  const double s0 = model.share_value.value_or(0.0);
  const double s1 = model.share_value.value_or(model.share_max);
  for (const auto& t : model.terms) {
    validate_box(t.box);
    const double a0 = t.slope.at(s0);
    const double a1 = t.slope.at(s1);
    if (a0 * a1 < 0.0) {
      std::ostringstream os;
      os << "slope of " << t.name
         << " changes sign over the admissible share range; pin P(.,j)";
      throw PreconditionError(os.str());
    }
    // An affine function attains its extrema at box vertices; pick the vertex
    // per coordinate by the (share-stable) slope sign.
    const bool nonneg = (a0 + a1) >= 0.0;
    const double lo_at = nonneg ? t.box.lo : t.box.hi;
    const double hi_at = nonneg ? t.box.hi : t.box.lo;
    out.lo.base += t.slope.base * lo_at;
    out.lo.per_share += t.slope.per_share * lo_at;
    out.hi.base += t.slope.base * hi_at;
    out.hi.per_share += t.slope.per_share * hi_at;
  }
  return out;
}

AssumedInterval BoxBound::at(double share) const {
  return make_interval(lo.at(share), hi.at(share), assumptions);
}

AssumedInterval bound_over_box_interval(const LambdaModel& model) {
  const double share = resolved_share(model);
  return bound_over_box(model).at(share);
}

LevelSetGrid level_set_grid(
    const LambdaModel& model, const std::string& var_x, const std::string& var_y,
    const GridSpec& spec, const std::vector<std::pair<std::string, double>>& fixed) {
  if (var_x == var_y) throw SchemaError("grid axes must differ");
  const int ix = model.term_index(var_x);
  const int iy = model.term_index(var_y);
  if (ix < 0 || iy < 0)
    throw SchemaError("grid axis is not a multiplier of the model");
  if (spec.nx < 1 || spec.ny < 1) throw SchemaError("grid resolution must be >= 1");
  validate_box(spec.x_range);
  validate_box(spec.y_range);

  const double share = resolved_share(model);
  std::vector<double> lambda(model.terms.size(), 0.0);
  for (const auto& [name, v] : fixed) {
    const int i = model.term_index(name);
    if (i < 0) throw SchemaError("fixed multiplier '" + name + "' is not in the model");
    lambda[static_cast<std::size_t>(i)] = v;
  }

  auto coord = [](const Interval& r, int n, int i) {
    return n == 1 ? r.lo : r.lo + (r.hi - r.lo) * i / (n - 1);
  };

  LevelSetGrid grid;
  grid.x_name = var_x;
  grid.y_name = var_y;
  grid.spec = spec;
  grid.fixed = fixed;
  grid.values.resize(spec.ny, spec.nx);
  double vmin = 0.0, vmax = 0.0;
  for (int i = 0; i < spec.ny; ++i) {
    lambda[static_cast<std::size_t>(iy)] = coord(spec.y_range, spec.ny, i);
    for (int j = 0; j < spec.nx; ++j) {
      lambda[static_cast<std::size_t>(ix)] = coord(spec.x_range, spec.nx, j);
      const double v = model.value(lambda, share);
      grid.values(i, j) = v;
      if (i == 0 && j == 0) {
        vmin = vmax = v;
      } else {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
      }
    }
  }

  std::set<double> levels;
  for (int i = 0; i <= 8; ++i) levels.insert(vmin + (vmax - vmin) * i / 8.0);
  if (vmin <= 0.0 && 0.0 <= vmax) levels.insert(0.0);
  grid.contour_levels.assign(levels.begin(), levels.end());
  return grid;
}

std::vector<std::pair<double, double>> zero_contour(
    const LambdaModel& model, const std::string& var_x, const std::string& var_y,
    const GridSpec& spec, const std::vector<std::pair<std::string, double>>& fixed) {
  const int ix = model.term_index(var_x);
  const int iy = model.term_index(var_y);
  if (ix < 0 || iy < 0 || var_x == var_y) throw SchemaError("invalid contour axes");
  const double share = resolved_share(model);

  std::vector<double> lambda(model.terms.size(), 0.0);
  for (const auto& [name, v] : fixed) {
    const int i = model.term_index(name);
    if (i < 0) throw SchemaError("fixed multiplier '" + name + "' is not in the model");
    lambda[static_cast<std::size_t>(i)] = v;
  }
  lambda[static_cast<std::size_t>(ix)] = 0.0;
  lambda[static_cast<std::size_t>(iy)] = 0.0;

  // The model restricted to the plane is c + sx*x + sy*y.
  const double c = model.value(lambda, share);
  const double sx = model.terms[static_cast<std::size_t>(ix)].slope.at(share);
  const double sy = model.terms[static_cast<std::size_t>(iy)].slope.at(share);

  std::vector<std::pair<double, double>> pts;
  auto push = [&](double x, double y) {
    for (const auto& p : pts)
      if (std::abs(p.first - x) < 1e-12 && std::abs(p.second - y) < 1e-12) return;
    pts.emplace_back(x, y);
  };
  const double x0 = spec.x_range.lo, x1 = spec.x_range.hi;
  const double y0 = spec.y_range.lo, y1 = spec.y_range.hi;
  // Intersections with the four rectangle edges.
  if (sy != 0.0) {
    for (double x : {x0, x1}) {
      const double y = -(c + sx * x) / sy;
      if (y >= y0 - 1e-12 && y <= y1 + 1e-12) push(x, std::clamp(y, y0, y1));
    }
  }
  if (sx != 0.0) {
    for (double y : {y0, y1}) {
      const double x = -(c + sy * y) / sx;
      if (x >= x0 - 1e-12 && x <= x1 + 1e-12) push(std::clamp(x, x0, x1), y);
    }
  }
  std::sort(pts.begin(), pts.end());
  return pts;
}

}  // namespace factiv
