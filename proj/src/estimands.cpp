#include "factiv/estimands.hpp"

#include <cmath>
#include <sstream>

#include "factiv/errors.hpp"

namespace factiv {

namespace {

void require_cell(const CellTable& table, int za, int zb) {
  if (!table.cell_nonempty(za, zb)) {
    std::ostringstream os;
    os << "instrument cell (Z_A=" << za << ", Z_B=" << zb << ") is empty";
    throw MissingCellError(os.str());
  }
}

void require_all_cells(const CellTable& table) {
  for (int za = 0; za < 2; ++za)
    for (int zb = 0; zb < 2; ++zb) require_cell(table, za, zb);
}

double ybar_or_throw(const CellTable& table, int za, int zb) {
  require_cell(table, za, zb);
  const auto& y = table.cell(za, zb).ybar;
  if (!y) {
    std::ostringstream os;
    os << "instrument cell (Z_A=" << za << ", Z_B=" << zb
       << ") carries no outcome mean";
    throw MissingCellError(os.str());
  }
  return *y;
}

}  // namespace

double wald(const CellTable& table, Side side, int partner_z) {
  const auto zcell = [&](int own) {
    return side == Side::A ? std::pair<int, int>{own, partner_z}
                           : std::pair<int, int>{partner_z, own};
  };
  const auto [za1, zb1] = zcell(1);
  const auto [za0, zb0] = zcell(0);
  const double y1 = ybar_or_throw(table, za1, zb1);
  const double y0 = ybar_or_throw(table, za0, zb0);
  const double denom =
      table.dbar(side, 1, partner_z) - table.dbar(side, 0, partner_z);
  if (std::abs(denom) < kFirstStageTol) {
    std::ostringstream os;
    os << "first-stage contrast for treatment " << (side == Side::A ? 'A' : 'B')
       << " at partner instrument " << partner_z << " is " << denom;
    throw WeakFirstStageError(os.str(), denom);
  }
  return (y1 - y0) / denom;
}

FirstStage first_stage(const CellTable& table) {
  require_all_cells(table);
  auto contrasts = [&](auto value) {
    const double v00 = value(0, 0), v10 = value(1, 0), v01 = value(0, 1),
                 v11 = value(1, 1);
    return Eigen::Vector4d(v00, v10 - v00, v01 - v00, (v11 - v01) - (v10 - v00));
  };
  const Eigen::Vector4d ga =
      contrasts([&](int za, int zb) { return table.cell(za, zb).dbar_a; });
  const Eigen::Vector4d gb =
      contrasts([&](int za, int zb) { return table.cell(za, zb).dbar_b; });
  const Eigen::Vector4d gab =
      contrasts([&](int za, int zb) { return table.cell(za, zb).dbar_ab; });

  FirstStage fs;
  fs.intercepts << ga(0), gb(0), gab(0);
  fs.slopes << ga(1), ga(2), ga(3),
               gb(1), gb(2), gb(3),
               gab(1), gab(2), gab(3);
  return fs;
}

ReducedForm reduced_form(const CellTable& table) {
  const double y00 = ybar_or_throw(table, 0, 0);
  const double y10 = ybar_or_throw(table, 1, 0);
  const double y01 = ybar_or_throw(table, 0, 1);
  const double y11 = ybar_or_throw(table, 1, 1);
  ReducedForm rf;
  rf.intercept = y00;
  rf.slopes << y10 - y00, y01 - y00, (y11 - y01) - (y10 - y00);
  return rf;
}

IvEstimates saturated_iv(const CellTable& table) {
  IvEstimates est;
  est.stage1 = first_stage(table);
  est.reduced = reduced_form(table);

  static const char* kDiagName[] = {"own contrast of D_A",
                                    "own contrast of D_B",
                                    "interaction contrast of D_A D_B"};
  for (int i = 0; i < 3; ++i) {
    if (std::abs(est.stage1.slopes(i, i)) < kFirstStageTol) {
      std::ostringstream os;
      os << "first-stage matrix is singular: " << kDiagName[i] << " is "
         << est.stage1.slopes(i, i);
      throw IdentificationError(os.str());
    }
  }

  // Reduced form = second stage composed with the first stage, so the slope
  // block solves slopes' * b = pi and the intercept absorbs the first-stage
  // intercepts.
  Eigen::FullPivLU<Eigen::Matrix3d> lu(est.stage1.slopes.transpose());
  if (!lu.isInvertible())
    throw IdentificationError(
        "first-stage matrix is singular: the instrument contrasts do not "
        "separate the three regressors");
  const Eigen::Vector3d b = lu.solve(est.reduced.slopes);
  est.beta(0) = est.reduced.intercept - b.dot(est.stage1.intercepts);
  est.beta.tail<3>() = b;

  est.wald_a0 = wald(table, Side::A, 0);
  est.wald_a1 = wald(table, Side::A, 1);
  est.wald_b0 = wald(table, Side::B, 0);
  est.wald_b1 = wald(table, Side::B, 1);
  return est;
}

Eigen::Matrix4d robust_covariance(const Dataset& data, const Eigen::Vector4d& beta,
                                  HcVariant variant) {
  if (data.empty()) throw SchemaError("dataset is empty");
  Eigen::Matrix4d zx = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d meat = Eigen::Matrix4d::Zero();
  double total_weight = 0.0;
  for (const auto& r : data.rows) {
    Eigen::Vector4d x(1.0, r.d_a, r.d_b, static_cast<double>(r.d_a * r.d_b));
    Eigen::Vector4d z(1.0, r.z_a, r.z_b, static_cast<double>(r.z_a * r.z_b));
    const double e = r.y - x.dot(beta);
    zx.noalias() += r.weight * z * x.transpose();
    meat.noalias() += r.weight * e * e * z * z.transpose();
    total_weight += r.weight;
  }
  Eigen::FullPivLU<Eigen::Matrix4d> lu(zx);
  if (!lu.isInvertible())
    throw IdentificationError(
        "instrument moment matrix is singular; the instruments do not span the "
        "four cells");
  if (variant == HcVariant::HC1) {
    const double dof = total_weight - 4.0;
    if (dof <= 0.0) throw IdentificationError("not enough observations for HC1");
    meat *= total_weight / dof;
  }
  const Eigen::Matrix4d zx_inv = lu.inverse();
  return zx_inv * meat * zx_inv.transpose();
}

}  // namespace factiv
