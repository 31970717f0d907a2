#include <doctest.h>

#include <cmath>

#include "factiv/bounds.hpp"
#include "factiv/errors.hpp"
#include "factiv/estimands.hpp"
#include "factiv/oracle.hpp"
#include "fixtures.hpp"

using namespace factiv;
namespace orc = factiv::oracle;

namespace {

BoundInputs application_inputs(bool y11_ge_y00 = false, bool y11_ge_max = false) {
  CellTable t = testing::application_table();
  Restrictions r;
  r.no_cross_defiers_a = true;
  r.no_joint_compliers_b = true;
  BoundInputs in;
  in.shares = type_shares(t, r);
  in.moments = identified_moments(t, in.shares);
  in.k = 100.0;
  in.strengthen.y11_ge_y00 = y11_ge_y00;
  in.strengthen.y11_ge_max = y11_ge_max;
  return in;
}

const IndirectInputs kPublishedIv{0.69, 2.58, 3.15};

}  // namespace

TEST_SUITE_BEGIN("bounds");

TEST_CASE("untreated-mean bounds among double compliers") {
  AssumedInterval iv = bound_y00_cc(application_inputs());
  CHECK(iv.lo == doctest::Approx(59.853469387755105).epsilon(1e-12));
  CHECK(iv.hi == doctest::Approx(100.86836734693877).epsilon(1e-12));
  CHECK(!iv.clipped);
  CHECK(iv.assumptions.contains(AssumptionTag::BoundedOutcomes));

  AssumedInterval clipped = bound_y00_cc(application_inputs(), true);
  CHECK(clipped.hi == 100.0);
  CHECK(clipped.clipped);
}

TEST_CASE("joint-takeup-never-hurts tightens the upper bound") {
  AssumedInterval iv = bound_y00_cc(application_inputs(true));
  CHECK(iv.hi == doctest::Approx(66.94));
  CHECK(iv.lo == doctest::Approx(59.853469387755105).epsilon(1e-12));
  CHECK(iv.assumptions.contains(AssumptionTag::Y11GeY00));
}

TEST_CASE("joint-effect bounds among double compliers") {
  AssumedInterval iv = bound_joint_cc(application_inputs());
  CHECK(iv.lo == doctest::Approx(-33.92836734693878).epsilon(1e-12));
  CHECK(iv.hi == doctest::Approx(7.086530612244898).epsilon(1e-12));

  AssumedInterval tight = bound_joint_cc(application_inputs(true));
  CHECK(tight.lo == doctest::Approx(0.0));
  CHECK(tight.hi == doctest::Approx(7.086530612244898).epsilon(1e-12));
}

TEST_CASE("degenerate population of double compliers pins the untreated mean") {
  orc::PopulationSpec spec;
  const auto s = orc::map_of(orc::MemberType::SelfComplier);
  spec.profiles = {{s, s, 1.0, std::nullopt}};
  spec.outcomes.k = 10.0;
  spec.outcomes.monotone_response = true;
  spec.seed = 3;
  orc::Population pop = orc::make_population(spec, 80);
  CellTable t = orc::exact_cell_table(pop, orc::AssignmentProbs{});
  BoundInputs in;
  in.shares = type_shares(t);
  in.moments = identified_moments(t, in.shares);
  in.k = 10.0;
  AssumedInterval iv = bound_y00_cc(in);
  auto everyone = [](const orc::SyntheticPair&) { return true; };
  const double truth = orc::mean_potential(pop, everyone, 0, 0);
  CHECK(iv.lo == doctest::Approx(truth).epsilon(1e-12));
  CHECK(iv.hi == doctest::Approx(truth).epsilon(1e-12));
}

TEST_CASE("direct interaction bounds reproduce the published intervals") {
  LaieDirectBounds b = bound_laie_direct(application_inputs(true));
  CHECK(b.y10_cc.lo == doctest::Approx(37.28).epsilon(1e-9));
  CHECK(b.y10_cc.hi == doctest::Approx(80.13714285714286).epsilon(1e-12));
  CHECK(b.y01_cc.lo == doctest::Approx(59.381020408163266).epsilon(1e-12));
  CHECK(b.y01_cc.hi == doctest::Approx(83.87081632653062).epsilon(1e-12));
  CHECK(b.laie.lo == doctest::Approx(-37.21448979591837).epsilon(1e-12));
  CHECK(b.laie.hi == doctest::Approx(37.218979591836735).epsilon(1e-12));
  CHECK(b.laie.assumptions.contains(AssumptionTag::NoCrossDefiersA));
  CHECK(b.laie.assumptions.contains(AssumptionTag::NoJointCompliersB));
}

TEST_CASE("joint-beats-both shrinks the direct interaction bound") {
  LaieDirectBounds b = bound_laie_direct(application_inputs(false, true));
  CHECK(b.laie.lo == doctest::Approx(-7.086530612244898).epsilon(1e-12));
  CHECK(b.laie.hi == doctest::Approx(37.218979591836735).epsilon(1e-12));
}

TEST_CASE("direct bounds require the resolved type restrictions") {
  CellTable t = testing::application_table();
  BoundInputs in;
  in.shares = type_shares(t);  // no restrictions resolved
  in.moments = identified_moments(t, in.shares);
  in.k = 100.0;
  CHECK_THROWS_AS(bound_laie_direct(in), PreconditionError);
}

TEST_CASE("auxiliary moment bounds and the derived effect intervals") {
  AuxMomentBounds aux = bound_aux_moments(application_inputs());
  CHECK(aux.y00_joint_a.lo == doctest::Approx(56.124761904761904).epsilon(1e-12));
  CHECK(aux.y00_joint_a.hi == 100.0);  // clipped from 151.8
  CHECK(aux.y00_joint_a.clipped);
  CHECK(aux.y10_joint_a.lo == 0.0);    // clipped from -87.0
  CHECK(aux.y10_joint_a.hi == 100.0);  // clipped from 146.3
  CHECK(aux.effect_a_joint.lo == doctest::Approx(0.0));
  CHECK(aux.effect_a_joint.hi ==
        doctest::Approx(43.875238095238096).epsilon(1e-12));
  CHECK(aux.effect_b_defier.lo == doctest::Approx(0.0));
  CHECK(aux.effect_b_defier.hi == doctest::Approx(100.0));
}

TEST_CASE("auxiliary bounds need positive shares") {
  // A table without joint compliers for A: takeup does not react to the
  // partner instrument.
  Dataset d;
  for (int i = 0; i < 8; ++i) {
    Observation o;
    o.z_a = i % 2;
    o.z_b = (i / 2) % 2;
    o.d_a = o.z_a * (i % 3 == 0 ? 1 : 0);
    o.d_b = o.z_b;
    o.y = 1.0 + i * 0.1;
    d.rows.push_back(o);
  }
  CellTable t = build_cell_table(d);
  Restrictions r;
  r.no_cross_defiers_a = true;
  r.no_joint_compliers_b = true;
  BoundInputs in;
  in.shares = type_shares(t, r);
  in.moments = identified_moments(t, in.shares);
  in.k = 10.0;
  CHECK_THROWS_AS(bound_aux_moments(in), IdentificationError);
}

TEST_CASE("indirect pipeline identified part") {
  CHECK(laie_indirect_identified_part(application_inputs(), kPublishedIv) ==
        doctest::Approx(1.0242857142857142).epsilon(1e-12));
}

TEST_CASE("indirect interaction bound with the formal auxiliary intervals") {
  BoundInputs in = application_inputs();
  AuxMomentBounds aux = bound_aux_moments(in);
  AssumedInterval iv = bound_laie_indirect(in, kPublishedIv, 0.0, &aux);
  CHECK(iv.lo == doctest::Approx(-17.77938775510204).epsilon(1e-12));
  CHECK(iv.hi == doctest::Approx(25.51408163265306).epsilon(1e-12));
}

TEST_CASE("indirect bound with trivial intervals and a free share range") {
  BoundInputs in = application_inputs();
  AssumedInterval at_zero = bound_laie_indirect(in, kPublishedIv, 0.0);
  // identified - (0.21/0.49)*100 and identified + (0.12/0.49)*100
  CHECK(at_zero.lo ==
        doctest::Approx(1.0242857142857142 - 0.21 / 0.49 * 100).epsilon(1e-12));
  CHECK(at_zero.hi == doctest::Approx(25.51408163265306).epsilon(1e-12));

  AssumedInterval ranged =
      bound_laie_indirect(in, kPublishedIv, Interval{0.0, 0.07});
  CHECK(ranged.lo <= at_zero.lo);
  CHECK(ranged.hi >= at_zero.hi);
  // The hull is attained at the share endpoints.
  AssumedInterval at_hi = bound_laie_indirect(in, kPublishedIv, 0.07);
  CHECK(ranged.hi == doctest::Approx(at_hi.hi).epsilon(1e-12));
}

TEST_CASE("strengthening flags never widen an interval") {
  auto narrower = [](const AssumedInterval& tight, const AssumedInterval& loose) {
    CHECK(tight.lo >= loose.lo - 1e-12);
    CHECK(tight.hi <= loose.hi + 1e-12);
  };
  narrower(bound_y00_cc(application_inputs(true)),
           bound_y00_cc(application_inputs()));
  narrower(bound_joint_cc(application_inputs(true)),
           bound_joint_cc(application_inputs()));
  narrower(bound_laie_direct(application_inputs(true, true)).laie,
           bound_laie_direct(application_inputs(true)).laie);
}

TEST_CASE("bounds contain the oracle truth on randomized populations") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    orc::RandomPopulationOptions opts;
    opts.no_cross_defiers_a = true;
    opts.no_joint_compliers_b = true;
    opts.outcomes.k = 50.0;
    opts.outcomes.monotone_response = true;
    opts.outcomes.y11_ge_y00 = (seed % 3 == 0);
    opts.outcomes.y11_ge_max = (seed % 3 == 1);
    orc::PopulationSpec spec = orc::random_population_spec(seed, opts);
    orc::Population pop = orc::make_population(spec, 130);
    orc::VerifyReport rep =
        orc::verify(pop, spec.assignment, orc::Theorem::BoundsContain);
    for (const auto& c : rep.checks) {
      INFO(c.name);
      CHECK(c.pass);
      ++checked;
    }
  }
  CHECK(checked > 200);
}

TEST_CASE("direct and indirect intervals intersect without losing the truth") {
  orc::RandomPopulationOptions opts;
  opts.no_cross_defiers_a = true;
  opts.no_joint_compliers_b = true;
  opts.outcomes.k = 40.0;
  opts.outcomes.monotone_response = true;
  for (std::uint64_t seed : {101u, 102u, 103u, 104u}) {
    orc::PopulationSpec spec = orc::random_population_spec(seed, opts);
    orc::Population pop = orc::make_population(spec, 140);
    CellTable t = orc::exact_cell_table(pop, spec.assignment);
    Restrictions r;
    r.no_cross_defiers_a = true;
    r.no_joint_compliers_b = true;
    BoundInputs in;
    in.shares = type_shares(t, r);
    in.moments = identified_moments(t, in.shares);
    in.k = 40.0;
    const IvEstimates est = saturated_iv(t);
    const IndirectInputs iv{est.beta(3), est.beta(1), est.beta(2)};
    const AssumedInterval direct = bound_laie_direct(in).laie;
    const AssumedInterval indirect = bound_laie_indirect(in, iv, 0.0);
    auto cc = orc::pair_is(
        {orc::MemberType::SelfComplier, orc::MemberType::JointComplier},
        {orc::MemberType::SelfComplier, orc::MemberType::JointComplier});
    const double truth = orc::true_effect(pop, cc, orc::EffectKind::Laie);
    auto both = intersect(direct, indirect);
    REQUIRE(both);
    CHECK(both->contains(truth, 1e-9));
  }
}

TEST_CASE("moments outside the outcome bound are rejected") {
  BoundInputs in = application_inputs();
  in.k = 50.0;  // the observed means sit near 63-71
  CHECK_THROWS_AS(bound_y00_cc(in), IdentificationError);
}

TEST_SUITE_END();
