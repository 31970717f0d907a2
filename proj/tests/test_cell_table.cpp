#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "factiv/cell_table.hpp"
#include "factiv/data.hpp"
#include "factiv/errors.hpp"
#include "fixtures.hpp"

using namespace factiv;

namespace {

Dataset toy_dataset() {
  Dataset d;
  d.rows = {
      {5.0, 1, 1, 1, 1, 1.0}, {3.0, 0, 0, 0, 0, 1.0}, {4.0, 1, 0, 1, 0, 2.0},
      {2.0, 0, 1, 0, 1, 1.0}, {6.0, 0, 0, 1, 1, 1.0}, {1.0, 0, 0, 1, 0, 1.0},
      {7.0, 1, 1, 1, 1, 0.5}, {2.5, 0, 1, 1, 1, 1.0}, {3.5, 0, 0, 0, 1, 1.0},
  };
  return d;
}

std::mt19937_64& rng() {
  static std::mt19937_64 gen(20240811);
  return gen;
}

}  // namespace

TEST_SUITE_BEGIN("cell_table");

TEST_CASE("csv ingest keeps valid rows and drops missing outcomes") {
  std::istringstream in(
      "y,d_a,d_b,z_a,z_b\n"
      "1.5,1,0,1,0\n"
      "NA,0,0,0,0\n"
      "2.0,0,1,0,1\n"
      ",1,1,1,1\n"
      "0.0,0,0,0,0\n");
  Dataset d = ingest(read_csv(in));
  CHECK(d.size() == 3);
  CHECK(d.dropped_missing_outcome == 2);
  CHECK(d.rows[0].y == doctest::Approx(1.5));
  CHECK(d.rows[0].weight == 1.0);
}

TEST_CASE("single all-zero row ingests") {
  std::istringstream in("y,d_a,d_b,z_a,z_b\n0,0,0,0,0\n");
  Dataset d = ingest(read_csv(in));
  CHECK(d.size() == 1);
}

TEST_CASE("non-binary indicator names row and column") {
  std::istringstream in("y,d_a,d_b,z_a,z_b\n1.0,2,0,1,0\n");
  CHECK_THROWS_WITH_AS(ingest(read_csv(in)),
                       doctest::Contains("row 2, column 'd_a'"), SchemaError);
}

TEST_CASE("empty input is an error") {
  std::istringstream in("y,d_a,d_b,z_a,z_b\n");
  CHECK_THROWS_AS(ingest(read_csv(in)), SchemaError);
  std::istringstream all_missing("y,d_a,d_b,z_a,z_b\nNA,0,0,0,0\n");
  CHECK_THROWS_AS(ingest(read_csv(all_missing)), SchemaError);
}

TEST_CASE("lenient binary mapping") {
  IngestOptions opts;
  SUBCASE("strict rejects") {
    std::istringstream in("y,d_a,d_b,z_a,z_b\n1.0,true,no,YES,0\n");
    CHECK_THROWS_AS(ingest(read_csv(in)), SchemaError);
  }
  SUBCASE("lenient maps") {
    std::istringstream in("y,d_a,d_b,z_a,z_b\n1.0,true,no,YES,0\n");
    opts.lenient_binary = true;
    Dataset d = ingest(read_csv(in), opts);
    CHECK(d.rows[0].d_a == 1);
    CHECK(d.rows[0].d_b == 0);
    CHECK(d.rows[0].z_a == 1);
  }
}

TEST_CASE("column remapping") {
  std::istringstream in("grade,tutor,cash,off_t,off_c,w\n50,1,0,1,0,2\n");
  IngestOptions opts;
  opts.columns = {"grade", "tutor", "cash", "off_t", "off_c", "w"};
  Dataset d = ingest(read_csv(in), opts);
  CHECK(d.rows[0].weight == 2.0);
  CHECK(d.rows[0].d_a == 1);
}

TEST_CASE("negative weight rejected") {
  std::istringstream in("y,d_a,d_b,z_a,z_b,weight\n1,0,0,0,0,-1\n");
  CHECK_THROWS_AS(ingest(read_csv(in)), SchemaError);
}

TEST_CASE("csv round trip") {
  Dataset d = toy_dataset();
  std::ostringstream out;
  write_csv(out, d);
  std::istringstream in(out.str());
  Dataset back = ingest(read_csv(in));
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back.rows[i].y == d.rows[i].y);
    CHECK(back.rows[i].weight == d.rows[i].weight);
    CHECK(back.rows[i].d_a == d.rows[i].d_a);
  }
}

TEST_CASE("single observation fills one treatment cell") {
  Dataset d;
  d.rows = {{5.0, 1, 1, 1, 1, 1.0}};
  CellTable t = build_cell_table(d);
  CHECK(t.cell(1, 1).mass == 1.0);
  CHECK(t.cell(1, 1).treat_share[cell_index(1, 1)] == 1.0);
  CHECK(*t.cell(1, 1).treat_mean[cell_index(1, 1)] == doctest::Approx(5.0));
  CHECK(t.cell(0, 0).mass == 0.0);
  CHECK(t.cell(0, 1).mass == 0.0);
  CHECK(!t.cell(0, 0).ybar);
}

TEST_CASE("table invariants hold on data-built tables") {
  CellTable t = build_cell_table(toy_dataset());
  CHECK_NOTHROW(validate_cell_table(t));
  double total = 0.0;
  for (const auto& r : toy_dataset().rows) total += r.weight;
  CHECK(t.total_mass() == doctest::Approx(total));
}

TEST_CASE("row order does not matter") {
  Dataset d = toy_dataset();
  Dataset shuffled = d;
  std::shuffle(shuffled.rows.begin(), shuffled.rows.end(), rng());
  CellTable a = build_cell_table(d);
  CellTable b = build_cell_table(shuffled);
  for (int z = 0; z < kCells; ++z) {
    CHECK(a.cells[z].mass == doctest::Approx(b.cells[z].mass).epsilon(1e-12));
    for (int t = 0; t < kCells; ++t)
      CHECK(a.cells[z].treat_share[t] ==
            doctest::Approx(b.cells[z].treat_share[t]).epsilon(1e-12));
    if (a.cells[z].ybar)
      CHECK(*a.cells[z].ybar == doctest::Approx(*b.cells[z].ybar).epsilon(1e-12));
  }
}

TEST_CASE("splitting a weight-2 row into two weight-1 rows is invariant") {
  Dataset d = toy_dataset();
  Dataset split;
  for (const auto& r : d.rows) {
    if (r.weight == 2.0) {
      Observation half = r;
      half.weight = 1.0;
      split.rows.push_back(half);
      split.rows.push_back(half);
    } else {
      split.rows.push_back(r);
    }
  }
  CellTable a = build_cell_table(d);
  CellTable b = build_cell_table(split);
  for (int z = 0; z < kCells; ++z) {
    CHECK(a.cells[z].mass == doctest::Approx(b.cells[z].mass).epsilon(1e-12));
    CHECK(a.cells[z].dbar_a == doctest::Approx(b.cells[z].dbar_a).epsilon(1e-12));
    if (a.cells[z].ybar)
      CHECK(*a.cells[z].ybar == doctest::Approx(*b.cells[z].ybar).epsilon(1e-12));
  }
}

TEST_CASE("application moments reproduce the published cell statistics") {
  CellTable t = testing::application_table();
  CHECK(t.cell(1, 0).dbar_a == doctest::Approx(0.28));
  CHECK(t.cell(0, 1).dbar_b == doctest::Approx(0.93));
  CHECK(*t.cell(0, 0).ybar == doctest::Approx(62.83));
  CHECK(t.cell(1, 1).treat_share[cell_index(1, 1)] == doctest::Approx(0.49));
  CHECK(t.total_mass() == doctest::Approx(798));
}

TEST_CASE("one-sided check passes on the application table") {
  OneSidedReport rep = check_one_sided(testing::application_table());
  CHECK(rep.pass);
  CHECK(rep.violation_mass_a == 0.0);
  CHECK(rep.violation_mass_b == 0.0);
}

TEST_CASE("one-sided check reports violation mass") {
  Dataset d;
  d.rows = {{1.0, 1, 0, 0, 0, 3.0}, {2.0, 0, 0, 0, 0, 5.0}};
  OneSidedReport rep = check_one_sided(build_cell_table(d));
  CHECK(!rep.pass);
  CHECK(rep.violation_mass_a == doctest::Approx(3.0));
  CHECK(rep.violation_mass_b == 0.0);
  CHECK(rep.violations.size() == 1);
}

TEST_SUITE_END();
