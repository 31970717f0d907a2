#include <doctest.h>

#include <cmath>

#include "factiv/errors.hpp"
#include "factiv/estimands.hpp"
#include "factiv/oracle.hpp"
#include "factiv/serialization.hpp"

using namespace factiv;
using namespace factiv::oracle;

namespace {

PopulationSpec application_like_spec() {
  // Marginals matched to the published takeup tables with the dependence
  // needed to hit the observed double-complier share.
  PopulationSpec spec;
  const auto s = map_of(MemberType::SelfComplier);
  const auto j = map_of(MemberType::JointComplier);
  const auto n = map_of(MemberType::NeverTaker);
  const auto d = map_of(MemberType::CrossDefier);
  spec.profiles = {{s, s, 0.28, std::nullopt},
                   {j, s, 0.21, std::nullopt},
                   {n, s, 0.32, std::nullopt},
                   {n, d, 0.12, std::nullopt},
                   {n, n, 0.07, std::nullopt}};
  spec.outcomes.k = 100.0;
  spec.outcomes.monotone_response = true;
  spec.seed = 2024;
  return spec;
}

void check_report(const VerifyReport& rep, const PopulationSpec& spec) {
  if (!rep.pass) {
    // Print the spec so the failing case can be replayed.
    MESSAGE("replay spec: ", population_spec_to_json(spec).dump());
    for (const auto& c : rep.checks) {
      if (!c.pass)
        MESSAGE(to_string(rep.theorem), " failed: ", c.name, " lhs=", c.lhs,
                " rhs=", c.rhs);
    }
  }
  CHECK(rep.pass);
}

void run_suite(Theorem theorem, const RandomPopulationOptions& opts, int cases,
               std::uint64_t master, std::size_t n_pairs = 120) {
  for (int i = 0; i < cases; ++i) {
    PopulationSpec spec = random_population_spec(derive_seed(master, i), opts);
    Population pop = make_population(spec, n_pairs);
    check_report(verify(pop, spec.assignment, theorem), spec);
  }
}

}  // namespace

TEST_SUITE_BEGIN("oracle");

TEST_CASE("member type classification") {
  CHECK(classify(parse_compliance_map("s")) == MemberType::SelfComplier);
  CHECK(classify(parse_compliance_map("0011")) == MemberType::SelfComplier);
  CHECK(classify(parse_compliance_map("j")) == MemberType::JointComplier);
  CHECK(classify(parse_compliance_map("d")) == MemberType::CrossDefier);
  CHECK(classify(parse_compliance_map("at")) == MemberType::AlwaysTaker);
  CHECK(classify(parse_compliance_map("cd3")) == MemberType::CrossDefier3);
  CHECK(classify(parse_compliance_map("0110")) == MemberType::Irregular);
  CHECK(format_compliance_map(parse_compliance_map("0110")) == "0110");
  CHECK(format_compliance_map(map_of(MemberType::CrossComplier)) == "cc");
  CHECK_THROWS_AS(parse_compliance_map("zz"), SpecError);
}

TEST_CASE("basic types are one-sided, extended types are monotone") {
  for (auto t : {MemberType::SelfComplier, MemberType::JointComplier,
                 MemberType::NeverTaker, MemberType::CrossDefier}) {
    CHECK(map_of(t).one_sided());
    CHECK(map_of(t).monotone());
  }
  for (auto t : {MemberType::AlwaysTaker, MemberType::CrossComplier,
                 MemberType::CrossDefier2, MemberType::CrossDefier3}) {
    CHECK(!map_of(t).one_sided());
    CHECK(map_of(t).monotone());
  }
}

TEST_CASE("member B takeup swaps the instrument arguments") {
  SyntheticPair pr;
  pr.map_a = map_of(MemberType::SelfComplier);
  pr.map_b = map_of(MemberType::JointComplier);
  CHECK(pr.d_b(1, 1) == 1);
  CHECK(pr.d_b(0, 1) == 0);  // own instrument on, partner off
  CHECK(pr.d_b(1, 0) == 0);
  CHECK(pr.d_a(1, 0) == 1);
}

TEST_CASE("realized outcome and takeup reproduce from potential values") {
  SyntheticPair pr;
  pr.map_a = map_of(MemberType::CrossDefier);
  pr.map_b = map_of(MemberType::SelfComplier);
  pr.po = {10.0, 20.0, 30.0, 40.0};
  CHECK(pr.y(0, 0) == 10.0);   // nobody treated
  CHECK(pr.y(1, 0) == 30.0);   // A defies only when the partner is assigned
  CHECK(pr.y(1, 1) == 20.0);   // A drops out, B takes
  CHECK(pr.y(0, 1) == 20.0);
}

TEST_CASE("spec validation rejects mode violations") {
  PopulationSpec spec;
  spec.profiles = {{map_of(MemberType::AlwaysTaker), map_of(MemberType::SelfComplier),
                    1.0, std::nullopt}};
  CHECK_THROWS_AS(validate_spec(spec), SpecError);
  spec.mode = PopulationMode::MonotoneAOneSidedB;
  CHECK_NOTHROW(validate_spec(spec));
  spec.profiles[0].prob = 0.5;
  CHECK_THROWS_AS(validate_spec(spec), SpecError);
}

TEST_CASE("spec validation enforces positive first-stage masses") {
  PopulationSpec spec;
  spec.profiles = {{map_of(MemberType::NeverTaker), map_of(MemberType::SelfComplier),
                    1.0, std::nullopt}};
  CHECK_THROWS_WITH_AS(validate_spec(spec), doctest::Contains("first-stage"),
                       SpecError);
}

TEST_CASE("degenerate self-complier population") {
  PopulationSpec spec;
  const auto s = map_of(MemberType::SelfComplier);
  spec.profiles = {{s, s, 1.0, std::nullopt}};
  spec.seed = 9;
  Population pop = make_population(spec, 50);
  for (const auto& pr : pop) {
    CHECK(pr.map_a == s);
    CHECK(pr.map_b == s);
  }
  CellTable t = exact_cell_table(pop, AssignmentProbs{});
  CHECK(t.cell(1, 0).dbar_a == 1.0);
  CHECK(t.cell(1, 1).dbar_a == 1.0);
  CHECK(t.cell(0, 1).dbar_a == 0.0);
  CHECK(t.cell(0, 0).dbar_a == 0.0);
}

TEST_CASE("population construction is deterministic under the seed") {
  PopulationSpec spec = application_like_spec();
  Population a = make_population(spec, 200);
  Population b = make_population(spec, 200);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].map_a == b[i].map_a);
    CHECK(a[i].po.y11 == b[i].po.y11);
  }
}

TEST_CASE("empirical type frequencies converge to the spec") {
  PopulationSpec spec = application_like_spec();
  Population pop = make_population(spec, 40000);
  CHECK(set_share(pop, a_is({MemberType::SelfComplier})) ==
        doctest::Approx(0.28).epsilon(0.05));
  CHECK(set_share(pop, b_is({MemberType::CrossDefier})) ==
        doctest::Approx(0.12).epsilon(0.1));
}

TEST_CASE("application-like population reproduces the published takeup tables") {
  PopulationSpec spec = application_like_spec();
  Population pop;
  // Exact weighted population, one pair per profile.
  for (const auto& p : spec.profiles) {
    SyntheticPair pr;
    pr.map_a = p.a;
    pr.map_b = p.b;
    pr.weight = p.prob;
    pop.push_back(pr);
  }
  CellTable t = exact_cell_table(pop, AssignmentProbs{});
  CHECK(t.cell(1, 0).dbar_a == doctest::Approx(0.28).epsilon(1e-12));
  CHECK(t.cell(1, 1).dbar_a == doctest::Approx(0.49).epsilon(1e-12));
  CHECK(t.cell(0, 1).dbar_b == doctest::Approx(0.93).epsilon(1e-12));
  CHECK(t.cell(1, 1).dbar_b == doctest::Approx(0.81).epsilon(1e-12));
  CHECK(t.cell(1, 1).treat_share[cell_index(1, 1)] ==
        doctest::Approx(0.49).epsilon(1e-12));
  CHECK(t.cell(1, 1).treat_share[cell_index(0, 1)] ==
        doctest::Approx(0.32).epsilon(1e-12));
  CHECK(t.cell(1, 1).treat_share[cell_index(0, 0)] ==
        doctest::Approx(0.19).epsilon(1e-12));
  CHECK(t.cell(1, 1).treat_share[cell_index(1, 0)] == 0.0);
}

TEST_CASE("sampling is deterministic and seed-sensitive") {
  PopulationSpec spec = application_like_spec();
  Population pop = make_population(spec, 300);
  Dataset a = sample_dataset(pop, 64, 42, spec.assignment);
  Dataset b = sample_dataset(pop, 64, 42, spec.assignment);
  Dataset c = sample_dataset(pop, 64, 43, spec.assignment);
  REQUIRE(a.size() == 64);
  bool identical = true, differs = false;
  for (std::size_t i = 0; i < 64; ++i) {
    identical = identical && a.rows[i].y == b.rows[i].y &&
                a.rows[i].z_a == b.rows[i].z_a && a.rows[i].d_a == b.rows[i].d_a;
    differs = differs || a.rows[i].y != c.rows[i].y;
  }
  CHECK(identical);
  CHECK(differs);
  Dataset single = sample_dataset(pop, 1, 7, spec.assignment);
  Dataset single2 = sample_dataset(pop, 1, 7, spec.assignment);
  CHECK(single.rows[0].y == single2.rows[0].y);
}

TEST_CASE("sampled statistics converge to the exact table") {
  PopulationSpec spec = application_like_spec();
  Population pop = make_population(spec, 500);
  CellTable exact = exact_cell_table(pop, spec.assignment);
  const std::size_t n = 100000;
  Dataset ds = sample_dataset(pop, n, 77, spec.assignment);
  CellTable sampled = build_cell_table(ds);
  for (int za = 0; za < 2; ++za) {
    for (int zb = 0; zb < 2; ++zb) {
      const double p = exact.cell(za, zb).dbar_a;
      const double m = sampled.cell(za, zb).mass;
      const double se = std::sqrt(std::max(p * (1 - p), 1e-6) / m);
      CHECK(std::abs(sampled.cell(za, zb).dbar_a - p) < 3.5 * se);
    }
  }
  // The saturated coefficients land within a few robust standard errors.
  IvEstimates exact_est = saturated_iv(exact);
  IvEstimates sampled_est = saturated_iv(sampled);
  Eigen::Matrix4d cov = robust_covariance(ds, sampled_est.beta);
  for (int i = 0; i < 4; ++i) {
    const double se = std::sqrt(cov(i, i));
    CHECK(std::abs(sampled_est.beta(i) - exact_est.beta(i)) < 4.0 * se);
  }
}

TEST_CASE("true_effect rejects zero-mass sets and handles no interaction") {
  PopulationSpec spec = application_like_spec();
  spec.outcomes.no_interaction = true;
  Population pop = make_population(spec, 120);
  CHECK_THROWS_AS(true_effect(pop, a_is({MemberType::AlwaysTaker}),
                              EffectKind::Laie),
                  PreconditionError);
  auto everyone = [](const SyntheticPair&) { return true; };
  CHECK(true_effect(pop, everyone, EffectKind::Laie) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("population spec serializes and reloads") {
  PopulationSpec spec = application_like_spec();
  spec.outcomes.homogeneous = OutcomeModel::Homogeneous{1.0, 2.0, 0.5};
  PopulationSpec back =
      population_spec_from_json(population_spec_to_json(spec));
  CHECK(back.mode == spec.mode);
  CHECK(back.seed == spec.seed);
  REQUIRE(back.profiles.size() == spec.profiles.size());
  for (std::size_t i = 0; i < spec.profiles.size(); ++i) {
    CHECK(back.profiles[i].a == spec.profiles[i].a);
    CHECK(back.profiles[i].prob == spec.profiles[i].prob);
  }
  CHECK(back.outcomes.homogeneous->tau_b == 2.0);
  CHECK(back.outcomes.monotone_response);
  Population p1 = make_population(spec, 60);
  Population p2 = make_population(back, 60);
  for (std::size_t i = 0; i < p1.size(); ++i)
    CHECK(p1[i].po.y00 == p2[i].po.y00);
}

TEST_CASE("verify rejects mode mismatches") {
  RandomPopulationOptions opts;
  opts.mode = PopulationMode::MonotoneAOneSidedB;
  PopulationSpec spec = random_population_spec(5, opts);
  Population pop = make_population(spec, 100);
  bool extended_present = false;
  for (const auto& pr : pop) extended_present |= !pr.map_a.one_sided();
  REQUIRE(extended_present);
  CHECK_THROWS_AS(verify(pop, spec.assignment, Theorem::T1), PreconditionError);
  CHECK_THROWS_AS(verify(pop, spec.assignment, Theorem::B3), PreconditionError);
}

TEST_CASE("Wald and saturated-IV theorems hold on random one-sided populations") {
  RandomPopulationOptions opts;
  opts.outcomes.k = 60.0;
  for (auto theorem : {Theorem::T1, Theorem::T2Eq5, Theorem::T2Eq6, Theorem::T3,
                       Theorem::L1, Theorem::A1, Theorem::A2})
    run_suite(theorem, opts, 25, 1000 + static_cast<int>(theorem));
}

TEST_CASE("three-term corollary holds without defiers and never/joint pairs") {
  RandomPopulationOptions opts;
  opts.no_cross_defiers_a = true;
  opts.no_cross_defiers_b = true;
  opts.no_nj_pairs = true;
  opts.outcomes.k = 30.0;
  run_suite(Theorem::Cor2, opts, 25, 4242);
}

TEST_CASE("monotone-instrument extensions hold in their modes") {
  RandomPopulationOptions opts;
  opts.outcomes.k = 45.0;
  opts.mode = PopulationMode::MonotoneAOneSidedB;
  run_suite(Theorem::B2, opts, 25, 9100);
  opts.mode = PopulationMode::OneSidedAMonotoneB;
  run_suite(Theorem::B3, opts, 25, 9200);
  opts.mode = PopulationMode::Unrestricted;
  run_suite(Theorem::B1, opts, 25, 9300);
}

TEST_CASE("intention-to-treat decomposition also holds in one-sided mode") {
  RandomPopulationOptions opts;
  opts.outcomes.k = 45.0;
  run_suite(Theorem::B1, opts, 10, 9400);
}

TEST_CASE("no interactive types make the interaction coefficient structural") {
  RandomPopulationOptions opts;
  opts.only_noninteractive = true;
  opts.outcomes.k = 35.0;
  for (int i = 0; i < 15; ++i) {
    PopulationSpec spec = random_population_spec(derive_seed(606, i), opts);
    Population pop = make_population(spec, 140);
    CellTable t = exact_cell_table(pop, spec.assignment);
    IvEstimates est = saturated_iv(t);
    auto cc = pair_is({MemberType::SelfComplier, MemberType::JointComplier},
                      {MemberType::SelfComplier, MemberType::JointComplier});
    const double truth = true_effect(pop, cc, EffectKind::Laie);
    CHECK(std::abs(est.beta(3) - truth) <= 1e-9 * std::max(1.0, std::abs(truth)));
  }
}

TEST_SUITE_END();
