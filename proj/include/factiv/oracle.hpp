#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "factiv/cell_table.hpp"
#include "factiv/data.hpp"

namespace factiv::oracle {

// A member's potential-takeup function over the four instrument
// configurations, stored own-instrument-first: bits[cell_index(z_own,
// z_partner)]. Member B's map is evaluated with its own instrument (Z_B)
// first, which mirrors the member-A classification with the arguments
// interchanged.
struct ComplianceMap {
  std::array<std::uint8_t, 4> bits{};

  int operator()(int z_own, int z_partner) const {
    return bits[static_cast<std::size_t>(cell_index(z_own, z_partner))];
  }
  // No takeup without the own instrument.
  bool one_sided() const { return bits[0] == 0 && bits[1] == 0; }
  // Own instrument weakly encourages takeup and dominates the partner
  // instrument.
  bool monotone() const {
    return bits[0] <= bits[2] && bits[1] <= bits[3] && bits[1] <= bits[2];
  }
  bool operator==(const ComplianceMap&) const = default;
};

enum class MemberType {
  SelfComplier,   // takes iff the own instrument is on
  JointComplier,  // takes iff both instruments are on
  NeverTaker,
  CrossDefier,    // takes iff the own instrument alone is on
  AlwaysTaker,
  CrossComplier,  // takes iff any instrument is on
  CrossDefier2,   // drops takeup only when the partner instrument alone is on
  CrossDefier3,   // takes iff the own instrument is on and the partner's off
  Irregular,      // any other map (unrestricted mode only)
};

MemberType classify(const ComplianceMap& map);
ComplianceMap map_of(MemberType type);
std::string to_string(MemberType type);
// Accepts the short labels s, j, n, d, at, cc, cd2, cd3 or a 4-bit string
// over the (own, partner) grid, e.g. "0011".
ComplianceMap parse_compliance_map(const std::string& text);
std::string format_compliance_map(const ComplianceMap& map);

struct PotentialOutcomes {
  double y00 = 0.0, y01 = 0.0, y10 = 0.0, y11 = 0.0;
  double at(int d_a, int d_b) const {
    return d_a ? (d_b ? y11 : y10) : (d_b ? y01 : y00);
  }
};

struct SyntheticPair {
  ComplianceMap map_a;
  ComplianceMap map_b;  // own-instrument (Z_B) first
  PotentialOutcomes po;
  double weight = 1.0;

  int d_a(int z_a, int z_b) const { return map_a(z_a, z_b); }
  int d_b(int z_a, int z_b) const { return map_b(z_b, z_a); }
  double y(int z_a, int z_b) const { return po.at(d_a(z_a, z_b), d_b(z_a, z_b)); }
};

using Population = std::vector<SyntheticPair>;

struct AssignmentProbs {
  std::array<double, 4> p{0.25, 0.25, 0.25, 0.25};  // indexed cell_index(z_a, z_b)
  double at(int z_a, int z_b) const {
    return p[static_cast<std::size_t>(cell_index(z_a, z_b))];
  }
};

enum class PopulationMode {
  OneSided,            // both members restricted to the four basic types
  MonotoneAOneSidedB,  // A monotone (eight types), B one-sided
  OneSidedAMonotoneB,
  Unrestricted,
};

std::string to_string(PopulationMode mode);
PopulationMode population_mode_from_string(const std::string& text);

// How potential outcomes are drawn for profiles without a fixed table:
// uniform on [0, k] with optional unit-level monotonicity enforced by
// conditional redraws on the remaining range.
struct OutcomeModel {
  double k = 100.0;
  bool monotone_response = false;  // Y(10) >= Y(00), Y(01) >= Y(00)
  bool y11_ge_y00 = false;
  bool y11_ge_max = false;
  bool no_interaction = false;  // force Y(11) - Y(01) = Y(10) - Y(00)
  // Constant unit-level effects relative to a random Y(00).
  struct Homogeneous {
    double tau_a = 0.0, tau_b = 0.0, tau_ab = 0.0;
  };
  std::optional<Homogeneous> homogeneous;
};

struct ProfileProb {
  ComplianceMap a;
  ComplianceMap b;
  double prob = 0.0;
  // Fixed outcome table for handcrafted populations; overrides the outcome
  // model for pairs of this profile.
  std::optional<PotentialOutcomes> outcomes;
};

struct PopulationSpec {
  PopulationMode mode = PopulationMode::OneSided;
  std::vector<ProfileProb> profiles;
  OutcomeModel outcomes;
  AssignmentProbs assignment;
  std::uint64_t seed = 1;
};

// Mode constraints, probability normalization, positive assignment cells and
// positive first-stage masses. Throws SpecError.
void validate_spec(const PopulationSpec& spec);

Population make_population(const PopulationSpec& spec, std::size_t n_pairs);

// The exact probability-limit cell table: every pair evaluated in every
// instrument cell, weighted by pair weight times the cell assignment
// probability. No sampling.
CellTable exact_cell_table(const Population& pop, const AssignmentProbs& assign);

// I.i.d. draws of (pair, instrument cell) with realized takeup and outcome.
Dataset sample_dataset(const Population& pop, std::size_t n, std::uint64_t seed,
                       const AssignmentProbs& assign);

enum class EffectKind { AGivenNotB, AGivenB, BGivenNotA, BGivenA, Joint, Laie };

using PairPredicate = std::function<bool(const SyntheticPair&)>;

// Weight share of the pairs matching the predicate (relative to total weight).
double set_share(const Population& pop, const PairPredicate& pred);

// Weighted mean of the potential-outcome contrast over the selected pairs.
// Throws PreconditionError on a zero-mass set.
double true_effect(const Population& pop, const PairPredicate& pred, EffectKind kind);

// Weighted mean of Y(d_a, d_b) over the selected pairs.
double mean_potential(const Population& pop, const PairPredicate& pred, int d_a,
                      int d_b);

PairPredicate a_is(std::initializer_list<MemberType> types);
PairPredicate b_is(std::initializer_list<MemberType> types);
PairPredicate pair_is(std::initializer_list<MemberType> a,
                      std::initializer_list<MemberType> b);

enum class Theorem {
  T1,          // split-sample Wald, partner instrument off
  T2Eq5,       // split-sample Wald, partner instrument on: four-term form
  T2Eq6,       // five-term form
  Cor2,        // three-term form under no defiers and no never/joint pairs
  T3,          // saturated IV coefficient decomposition
  B1,          // intention-to-treat decomposition without monotonicity
  B2,          // Wald(partner off) with a monotone own instrument
  B3,          // Wald(partner on) with a monotone partner instrument
  L1,          // type-share identification (with its corollary)
  A1,          // set-partition decomposition of conditional effects
  A2,          // conditional-moment identification
  BoundsContain,
};

std::string to_string(Theorem theorem);
Theorem theorem_from_string(const std::string& text);

struct VerifyCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  double diff() const { return lhs - rhs; }
};

struct VerifyReport {
  Theorem theorem{};
  bool pass = false;
  std::vector<VerifyCheck> checks;
};

// Computes the estimand side from the exact cell table and the decomposition
// side from ground-truth effects and type masses; passes when they agree to
// 1e-9 relative. Throws PreconditionError when the population violates the
// theorem's assumptions.
VerifyReport verify(const Population& pop, const AssignmentProbs& assign,
                    Theorem theorem);

// Options for the randomized property-test populations.
struct RandomPopulationOptions {
  PopulationMode mode = PopulationMode::OneSided;
  bool no_cross_defiers_a = false;
  bool no_cross_defiers_b = false;
  bool no_joint_compliers_b = false;
  bool no_nj_pairs = false;
  bool only_noninteractive = false;  // members restricted to self/never
  OutcomeModel outcomes;
};

// Deterministic random spec: skewed random masses over the allowed profiles
// with a floor on the (self, self) profile so the first-stage masses stay
// positive, and random positive assignment probabilities.
PopulationSpec random_population_spec(std::uint64_t seed,
                                      const RandomPopulationOptions& options);

// Splits a master seed into per-case seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace factiv::oracle
