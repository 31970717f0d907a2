#include "factiv/cell_table.hpp"

#include <cmath>
#include <sstream>

#include "factiv/errors.hpp"

namespace factiv {

double CellTable::total_mass() const {
  double m = 0.0;
  for (const auto& c : cells) m += c.mass;
  return m;
}

double CellTable::dbar(Side side, int z_own, int z_partner) const {
  const InstrumentCell& c =
      side == Side::A ? cell(z_own, z_partner) : cell(z_partner, z_own);
  return side == Side::A ? c.dbar_a : c.dbar_b;
}

std::optional<double> CellTable::ybar_own(Side side, int z_own,
                                          int z_partner) const {
  const InstrumentCell& c =
      side == Side::A ? cell(z_own, z_partner) : cell(z_partner, z_own);
  return c.ybar;
}

CellTable build_cell_table(const Dataset& data) {
  if (data.empty()) throw SchemaError("dataset is empty");

  struct Acc {
    double mass = 0.0;
    double ysum = 0.0;
    std::array<double, kCells> dmass{};
    std::array<double, kCells> dysum{};
  };
  std::array<Acc, kCells> acc{};

  for (const auto& r : data.rows) {
    Acc& a = acc[static_cast<std::size_t>(cell_index(r.z_a, r.z_b))];
    const int d = cell_index(r.d_a, r.d_b);
    a.mass += r.weight;
    a.ysum += r.weight * r.y;
    a.dmass[static_cast<std::size_t>(d)] += r.weight;
    a.dysum[static_cast<std::size_t>(d)] += r.weight * r.y;
  }

  CellTable table;
  for (int z = 0; z < kCells; ++z) {
    const Acc& a = acc[static_cast<std::size_t>(z)];
    InstrumentCell& c = table.cells[static_cast<std::size_t>(z)];
    c.mass = a.mass;
    if (a.mass <= 0.0) continue;
    c.ybar = a.ysum / a.mass;
    for (int d = 0; d < kCells; ++d) {
      const double dm = a.dmass[static_cast<std::size_t>(d)];
      c.treat_share[static_cast<std::size_t>(d)] = dm / a.mass;
      if (dm > 0.0)
        c.treat_mean[static_cast<std::size_t>(d)] =
            a.dysum[static_cast<std::size_t>(d)] / dm;
    }
    c.dbar_a = c.treat_share[cell_index(1, 0)] + c.treat_share[cell_index(1, 1)];
    c.dbar_b = c.treat_share[cell_index(0, 1)] + c.treat_share[cell_index(1, 1)];
    c.dbar_ab = c.treat_share[cell_index(1, 1)];
  }
  return table;
}

CellTable build_cell_table(const MomentsSpec& moments) {
  CellTable table;
  table.from_moments = true;
  for (int za = 0; za < 2; ++za) {
    for (int zb = 0; zb < 2; ++zb) {
      const int z = cell_index(za, zb);
      const auto& m = moments.cells[static_cast<std::size_t>(z)];
      InstrumentCell& c = table.cell(za, zb);
      if (m.mass < 0.0) throw SchemaError("negative cell mass");
      if (m.dbar_a < 0.0 || m.dbar_a > 1.0 || m.dbar_b < 0.0 || m.dbar_b > 1.0)
        throw SchemaError("takeup means must lie in [0,1]");
      c.mass = m.mass;
      c.dbar_a = m.dbar_a;
      c.dbar_b = m.dbar_b;
      c.ybar = m.ybar;
      if (za == 1 && zb == 1) {
        c.treat_share = moments.joint_z11;
        c.dbar_ab = moments.joint_z11[cell_index(1, 1)];
      } else {
        // One-sided noncompliance pins the joint distribution: a treatment is
        // never taken when its own instrument is off.
        const double pa = za == 1 ? m.dbar_a : 0.0;
        const double pb = zb == 1 ? m.dbar_b : 0.0;
        c.treat_share[cell_index(0, 0)] = (1.0 - pa) * (1.0 - pb);
        c.treat_share[cell_index(1, 0)] = pa * (1.0 - pb);
        c.treat_share[cell_index(0, 1)] = (1.0 - pa) * pb;
        c.treat_share[cell_index(1, 1)] = pa * pb;
        c.dbar_ab = pa * pb;
      }
      c.treat_mean = moments.treat_mean[static_cast<std::size_t>(z)];
    }
  }
  return table;
}

OneSidedReport check_one_sided(const CellTable& table) {
  OneSidedReport report;
  auto note = [&](int za, int zb, const char* which, double mass) {
    std::ostringstream os;
    os << "cell (Z_A=" << za << ", Z_B=" << zb << "): mass " << mass
       << " observed with " << which << " = 1";
    report.violations.push_back(os.str());
  };
  for (int za = 0; za < 2; ++za) {
    for (int zb = 0; zb < 2; ++zb) {
      const InstrumentCell& c = table.cell(za, zb);
      if (c.mass <= 0.0) continue;
      if (za == 0) {
        const double m = c.mass * c.dbar_a;
        if (m > 0.0) {
          report.violation_mass_a += m;
          note(za, zb, "D_A", m);
        }
      }
      if (zb == 0) {
        const double m = c.mass * c.dbar_b;
        if (m > 0.0) {
          report.violation_mass_b += m;
          note(za, zb, "D_B", m);
        }
      }
    }
  }
  report.pass = report.violation_mass_a == 0.0 && report.violation_mass_b == 0.0;
  return report;
}

void validate_cell_table(const CellTable& table, double tol) {
  auto fail = [](const std::string& msg) { throw SchemaError(msg); };
  for (int za = 0; za < 2; ++za) {
    for (int zb = 0; zb < 2; ++zb) {
      const InstrumentCell& c = table.cell(za, zb);
      std::ostringstream tag;
      tag << "cell (Z_A=" << za << ", Z_B=" << zb << "): ";
      if (c.mass < 0.0) fail(tag.str() + "negative mass");
      if (c.mass == 0.0) continue;
      double share_sum = 0.0;
      for (int d = 0; d < kCells; ++d) {
        const double s = c.treat_share[static_cast<std::size_t>(d)];
        if (s < -tol) fail(tag.str() + "negative treatment share");
        if (s > tol && !c.treat_mean[static_cast<std::size_t>(d)] && c.ybar)
          fail(tag.str() + "treatment cell has mass but no mean");
        share_sum += s;
      }
      if (std::abs(share_sum - 1.0) > tol)
        fail(tag.str() + "treatment shares sum to " + std::to_string(share_sum));
      const double da = c.treat_share[cell_index(1, 0)] + c.treat_share[cell_index(1, 1)];
      const double db = c.treat_share[cell_index(0, 1)] + c.treat_share[cell_index(1, 1)];
      if (std::abs(da - c.dbar_a) > tol || std::abs(db - c.dbar_b) > tol)
        fail(tag.str() + "marginal takeup means disagree with the joint shares");
      if (c.ybar) {
        double ysum = 0.0;
        bool complete = true;
        for (int d = 0; d < kCells; ++d) {
          const double s = c.treat_share[static_cast<std::size_t>(d)];
          if (s <= 0.0) continue;
          const auto& m = c.treat_mean[static_cast<std::size_t>(d)];
          if (!m) {
            complete = false;
            break;
          }
          ysum += s * *m;
        }
        if (complete && std::abs(ysum - *c.ybar) > tol * std::max(1.0, std::abs(*c.ybar)))
          fail(tag.str() + "cell outcome mean disagrees with treatment-cell means");
      }
    }
  }
}

}  // namespace factiv
