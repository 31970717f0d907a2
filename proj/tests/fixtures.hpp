#pragma once

#include <optional>

#include "factiv/cell_table.hpp"

namespace factiv::testing {

// The published evaluation-sample moments: per-cell takeup and outcome means,
// the joint treatment split under double assignment, and the treatment-cell
// outcome means.
inline MomentsSpec application_moments() {
  MomentsSpec m;
  auto set_cell = [&](int za, int zb, double n, double da, double db, double y) {
    auto& c = m.cells[static_cast<std::size_t>(cell_index(za, zb))];
    c.mass = n;
    c.dbar_a = da;
    c.dbar_b = db;
    c.ybar = y;
  };
  set_cell(0, 0, 481, 0.00, 0.00, 62.83);
  set_cell(1, 0, 116, 0.28, 0.00, 63.57);
  set_cell(0, 1, 134, 0.00, 0.93, 65.75);
  set_cell(1, 1, 67, 0.49, 0.81, 66.98);
  m.joint_z11[cell_index(1, 1)] = 0.49;
  m.joint_z11[cell_index(1, 0)] = 0.00;
  m.joint_z11[cell_index(0, 1)] = 0.31;
  m.joint_z11[cell_index(0, 0)] = 0.19;

  auto set_mean = [&](int za, int zb, int da, int db, double y) {
    m.treat_mean[static_cast<std::size_t>(cell_index(za, zb))]
                [static_cast<std::size_t>(cell_index(da, db))] = y;
  };
  set_mean(0, 0, 0, 0, 62.83);
  set_mean(1, 0, 0, 0, 62.90);
  set_mean(0, 1, 0, 0, 65.07);
  set_mean(1, 1, 0, 0, 70.55);
  set_mean(1, 0, 1, 0, 65.24);
  set_mean(0, 1, 0, 1, 65.80);
  // (1,1,1,0) stays unset: the cell is empty in the data.
  set_mean(1, 1, 0, 1, 64.83);
  set_mean(1, 1, 1, 1, 66.94);

  m.outcome_upper_bound = 100.0;
  m.iv_beta = {{62.83, 2.58, 3.15, 0.69}};
  m.iv_se = {{0.55, 4.35, 1.24, 5.31}};
  return m;
}

inline CellTable application_table() {
  return build_cell_table(application_moments());
}

}  // namespace factiv::testing
