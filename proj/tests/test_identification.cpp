#include <doctest.h>

#include <cmath>

#include "factiv/errors.hpp"
#include "factiv/identification.hpp"
#include "factiv/oracle.hpp"
#include "fixtures.hpp"

using namespace factiv;
namespace orc = factiv::oracle;

TEST_SUITE_BEGIN("identification");

TEST_CASE("aggregate shares on the application table") {
  TypeShares s = type_shares(testing::application_table());
  CHECK(s.p_sd_a == doctest::Approx(0.28));
  CHECK(s.p_sd_b == doctest::Approx(0.93));
  CHECK(s.p_cc == doctest::Approx(0.49));
  CHECK(s.p_ndA_c == doctest::Approx(0.31));
  CHECK(s.p_c_ndA == doctest::Approx(0.0));
  CHECK(s.p_ndnd == doctest::Approx(0.19));
  CHECK(s.p_c_a == doctest::Approx(0.49));
  CHECK(s.p_nj_a == doctest::Approx(0.72));
  CHECK(s.contrast_a == doctest::Approx(0.21));
  CHECK(s.contrast_b == doctest::Approx(-0.12));
  CHECK(!s.marginals_a);
  CHECK(!s.marginals_b);
}

TEST_CASE("no cross-defiers for A resolves the A marginals") {
  Restrictions r;
  r.no_cross_defiers_a = true;
  TypeShares s = type_shares(testing::application_table(), r);
  REQUIRE(s.marginals_a);
  CHECK(s.marginals_a->self == doctest::Approx(0.28));
  CHECK(s.marginals_a->joint == doctest::Approx(0.21));
  CHECK(s.marginals_a->never == doctest::Approx(0.51));
  CHECK(s.marginals_a->defier == 0.0);
  const double sum = s.marginals_a->self + s.marginals_a->joint +
                     s.marginals_a->never + s.marginals_a->defier;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("no joint compliers for B resolves the B marginals") {
  Restrictions r;
  r.no_joint_compliers_b = true;
  TypeShares s = type_shares(testing::application_table(), r);
  REQUIRE(s.marginals_b);
  CHECK(s.p_sd_b == doctest::Approx(0.93));
  CHECK(s.marginals_b->self == doctest::Approx(0.81));
  CHECK(s.marginals_b->defier == doctest::Approx(0.12));
  CHECK(s.marginals_b->never == doctest::Approx(0.07));
  CHECK(s.marginals_b->joint == 0.0);
}

TEST_CASE("restriction contradicting the data raises") {
  // Takeup with both instruments is below takeup with the own instrument
  // alone, so cross-defiers for B must exist.
  Restrictions r;
  r.no_cross_defiers_b = true;
  CHECK_THROWS_AS(type_shares(testing::application_table(), r), RestrictionError);
}

TEST_CASE("type shares refuse tables with one-sided violations") {
  Dataset d;
  d.rows = {{1.0, 1, 0, 0, 0, 1.0}, {2.0, 1, 1, 1, 1, 1.0},
            {0.5, 0, 1, 0, 1, 1.0}, {0.2, 1, 0, 1, 0, 1.0}};
  CHECK_THROWS_AS(type_shares(build_cell_table(d)), PreconditionError);
}

TEST_CASE("type shares reproduce the truth on oracle populations") {
  // Population without cross-defiers for A and without joint compliers for B.
  orc::RandomPopulationOptions opts;
  opts.no_cross_defiers_a = true;
  opts.no_joint_compliers_b = true;
  opts.outcomes.k = 10.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    orc::PopulationSpec spec = orc::random_population_spec(seed, opts);
    orc::Population pop = orc::make_population(spec, 150);
    CellTable t = orc::exact_cell_table(pop, spec.assignment);
    Restrictions r;
    r.no_cross_defiers_a = true;
    r.no_joint_compliers_b = true;
    TypeShares s = type_shares(t, r);
    using MT = orc::MemberType;
    CHECK(s.marginals_a->self ==
          doctest::Approx(orc::set_share(pop, orc::a_is({MT::SelfComplier})))
              .epsilon(1e-12));
    CHECK(s.marginals_a->joint ==
          doctest::Approx(orc::set_share(pop, orc::a_is({MT::JointComplier})))
              .epsilon(1e-12));
    CHECK(s.marginals_b->defier ==
          doctest::Approx(orc::set_share(pop, orc::b_is({MT::CrossDefier})))
              .epsilon(1e-12));
    CHECK(s.p_cc == doctest::Approx(orc::set_share(
                        pop, orc::pair_is({MT::SelfComplier, MT::JointComplier},
                                          {MT::SelfComplier, MT::JointComplier})))
                        .epsilon(1e-12));
  }
}

TEST_CASE("compliance diagnostics report the partner-instrument response") {
  ComplianceDiagnostics d = compliance_diagnostics(testing::application_table());
  CHECK(d.contrast_a == doctest::Approx(0.21));
  CHECK(d.contrast_b == doctest::Approx(-0.12));
  CHECK(d.interpretation_a == "joint compliers exist for A");
  CHECK(d.interpretation_b == "cross-defiers exist for B");
}

TEST_CASE("treatment exclusion gives zero diagnostics contrasts") {
  Dataset d;
  // Takeup depends only on the own instrument.
  for (int za = 0; za < 2; ++za)
    for (int zb = 0; zb < 2; ++zb)
      for (int rep = 0; rep < 2; ++rep)
        d.rows.push_back({1.0 * rep, za * (rep % 2), zb, za, zb, 1.0});
  ComplianceDiagnostics diag = compliance_diagnostics(build_cell_table(d));
  CHECK(diag.contrast_a == doctest::Approx(0.0));
  CHECK(diag.contrast_b == doctest::Approx(0.0));
}

TEST_CASE("identified moments on the application table") {
  CellTable t = testing::application_table();
  TypeShares s = type_shares(t);
  IdentifiedMoments m = identified_moments(t, s);
  CHECK(*m.m00_all == doctest::Approx(62.83));
  CHECK(*m.m00_nj_a == doctest::Approx(62.90));
  CHECK(*m.m00_nj_b == doctest::Approx(65.07));
  CHECK(*m.m00_ndnd == doctest::Approx(70.55));
  CHECK(*m.m10_sd_a == doctest::Approx(65.24));
  CHECK(*m.m01_sd_b == doctest::Approx(65.80));
  CHECK(*m.m01_nd_c == doctest::Approx(64.83));
  CHECK(*m.m11_cc == doctest::Approx(66.94));
  // The treated-A cell under double assignment is empty in the data.
  CHECK(!m.m10_c_nd);
  // Derived by iterated expectations.
  CHECK(*m.m00_sd_a ==
        doctest::Approx((62.83 - 62.90 * 0.72) / 0.28).epsilon(1e-12));
  CHECK(*m.m00_sd_b ==
        doctest::Approx((62.83 - 65.07 * 0.07) / 0.93).epsilon(1e-12));
}

TEST_CASE("identified moments match ground truth on oracle populations") {
  orc::RandomPopulationOptions opts;
  opts.outcomes.k = 25.0;
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    orc::PopulationSpec spec = orc::random_population_spec(seed, opts);
    orc::Population pop = orc::make_population(spec, 200);
    orc::VerifyReport rep =
        orc::verify(pop, spec.assignment, orc::Theorem::A2);
    CHECK(rep.pass);
  }
}

TEST_CASE("undefined mean with positive mass is an identification error") {
  CHECK(mass_weighted(std::nullopt, 0.0, "m") == 0.0);
  CHECK(mass_weighted(1.5, 0.4, "m") == doctest::Approx(0.6));
  CHECK_THROWS_AS(mass_weighted(std::nullopt, 0.2, "m"), IdentificationError);
  CHECK_THROWS_AS(require_moment(std::nullopt, "m"), IdentificationError);
}

TEST_SUITE_END();
