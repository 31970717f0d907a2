#include "factiv/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "factiv/bounds.hpp"
#include "factiv/errors.hpp"
#include "factiv/estimands.hpp"
#include "factiv/identification.hpp"

namespace factiv::oracle {

namespace {

constexpr double kVerifyTol = 1e-9;

// splitmix64: tiny, portable, deterministic across platforms.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  std::size_t pick(const std::vector<double>& cumulative) {
    const double u = uniform() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min<std::size_t>(
        static_cast<std::size_t>(it - cumulative.begin()),
        cumulative.size() - 1);
  }
};

struct TypeEntry {
  MemberType type;
  ComplianceMap map;
  const char* name;
};

// Rows ordered as in the basic and extended type tables; bits over the
// (own, partner) grid: d(00), d(01), d(10), d(11).
constexpr TypeEntry kTypeTable[] = {
    {MemberType::SelfComplier, {{0, 0, 1, 1}}, "s"},
    {MemberType::JointComplier, {{0, 0, 0, 1}}, "j"},
    {MemberType::NeverTaker, {{0, 0, 0, 0}}, "n"},
    {MemberType::CrossDefier, {{0, 0, 1, 0}}, "d"},
    {MemberType::AlwaysTaker, {{1, 1, 1, 1}}, "at"},
    {MemberType::CrossComplier, {{0, 1, 1, 1}}, "cc"},
    {MemberType::CrossDefier2, {{1, 0, 1, 1}}, "cd2"},
    {MemberType::CrossDefier3, {{1, 0, 1, 0}}, "cd3"},
};

double contrast(const PotentialOutcomes& po, EffectKind kind) {
  switch (kind) {
    case EffectKind::AGivenNotB: return po.y10 - po.y00;
    case EffectKind::AGivenB: return po.y11 - po.y01;
    case EffectKind::BGivenNotA: return po.y01 - po.y00;
    case EffectKind::BGivenA: return po.y11 - po.y10;
    case EffectKind::Joint: return po.y11 - po.y00;
    case EffectKind::Laie: return (po.y11 - po.y01) - (po.y10 - po.y00);
  }
  return 0.0;
}

double total_weight(const Population& pop) {
  double w = 0.0;
  for (const auto& pr : pop) w += pr.weight;
  return w;
}

bool close(double lhs, double rhs) {
  return std::abs(lhs - rhs) <= kVerifyTol * std::max(1.0, std::abs(lhs));
}

void add_check(VerifyReport& report, std::string name, double lhs, double rhs) {
  VerifyCheck c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.rhs = rhs;
  c.pass = close(lhs, rhs);
  report.checks.push_back(std::move(c));
}

// Share-weighted effect with the empty-set convention: a vanishing set
// contributes nothing.
double term(const Population& pop, const PairPredicate& pred, EffectKind kind) {
  const double share = set_share(pop, pred);
  return share > 0.0 ? true_effect(pop, pred, kind) * share : 0.0;
}

void require_one_sided(const Population& pop) {
  for (const auto& pr : pop)
    if (!pr.map_a.one_sided() || !pr.map_b.one_sided())
      throw PreconditionError(
          "population contains takeup without the own instrument; this check "
          "requires one-sided noncompliance on both sides");
}

double require_share(const Population& pop, const PairPredicate& pred,
                     const char* what) {
  const double s = set_share(pop, pred);
  if (s <= 0.0)
    throw PreconditionError(std::string(what) + " has zero mass");
  return s;
}

}  // namespace

MemberType classify(const ComplianceMap& map) {
  for (const auto& e : kTypeTable)
    if (e.map == map) return e.type;
  return MemberType::Irregular;
}

ComplianceMap map_of(MemberType type) {
  for (const auto& e : kTypeTable)
    if (e.type == type) return e.map;
  throw SpecError("irregular member type has no canonical map");
}

std::string to_string(MemberType type) {
  for (const auto& e : kTypeTable)
    if (e.type == type) return e.name;
  return "irregular";
}

ComplianceMap parse_compliance_map(const std::string& text) {
  for (const auto& e : kTypeTable)
    if (text == e.name) return e.map;
  if (text.size() == 4 &&
      text.find_first_not_of("01") == std::string::npos) {
    ComplianceMap m;
    for (int i = 0; i < 4; ++i)
      m.bits[static_cast<std::size_t>(i)] =
          static_cast<std::uint8_t>(text[static_cast<std::size_t>(i)] - '0');
    return m;
  }
  throw SpecError("unknown compliance map '" + text +
                  "' (expected s/j/n/d/at/cc/cd2/cd3 or a 4-bit string)");
}

std::string format_compliance_map(const ComplianceMap& map) {
  const MemberType t = classify(map);
  if (t != MemberType::Irregular) return to_string(t);
  std::string s(4, '0');
  for (int i = 0; i < 4; ++i)
    s[static_cast<std::size_t>(i)] =
        static_cast<char>('0' + map.bits[static_cast<std::size_t>(i)]);
  return s;
}

std::string to_string(PopulationMode mode) {
  switch (mode) {
    case PopulationMode::OneSided: return "one_sided";
    case PopulationMode::MonotoneAOneSidedB: return "monotone_a_one_sided_b";
    case PopulationMode::OneSidedAMonotoneB: return "one_sided_a_monotone_b";
    case PopulationMode::Unrestricted: return "unrestricted";
  }
  return "?";
}

PopulationMode population_mode_from_string(const std::string& text) {
  for (auto m : {PopulationMode::OneSided, PopulationMode::MonotoneAOneSidedB,
                 PopulationMode::OneSidedAMonotoneB, PopulationMode::Unrestricted})
    if (text == to_string(m)) return m;
  throw SpecError("unknown population mode '" + text + "'");
}

void validate_spec(const PopulationSpec& spec) {
  if (spec.profiles.empty()) throw SpecError("population spec has no profiles");
  double total = 0.0;
  double mass_a = 0.0, mass_b = 0.0, mass_cc = 0.0;
  for (const auto& p : spec.profiles) {
    if (p.prob < 0.0) throw SpecError("negative profile probability");
    total += p.prob;
    const bool a_ok = spec.mode == PopulationMode::Unrestricted ||
                      (spec.mode == PopulationMode::MonotoneAOneSidedB
                           ? p.a.monotone()
                           : p.a.one_sided());
    const bool b_ok = spec.mode == PopulationMode::Unrestricted ||
                      (spec.mode == PopulationMode::OneSidedAMonotoneB
                           ? p.b.monotone()
                           : p.b.one_sided());
    if (!a_ok || !b_ok) {
      std::ostringstream os;
      os << "profile (" << format_compliance_map(p.a) << ", "
         << format_compliance_map(p.b) << ") is not allowed in mode "
         << to_string(spec.mode);
      throw SpecError(os.str());
    }
    if (p.outcomes) {
      for (double y : {p.outcomes->y00, p.outcomes->y01, p.outcomes->y10,
                       p.outcomes->y11})
        if (!std::isfinite(y)) throw SpecError("non-finite fixed outcome");
    }
    if (p.a(1, 0) == 1) mass_a += p.prob;
    if (p.b(1, 0) == 1) mass_b += p.prob;
    if (p.a(1, 1) == 1 && p.b(1, 1) == 1) mass_cc += p.prob;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw SpecError("profile probabilities sum to " + std::to_string(total));
  if (mass_a <= 0.0 || mass_b <= 0.0 || mass_cc <= 0.0)
    throw SpecError(
        "first-stage masses must be positive: need responders to the own "
        "instrument on both sides and joint takeup under double assignment");
  double assign_total = 0.0;
  for (double a : spec.assignment.p) {
    if (a <= 0.0)
      throw SpecError("all four assignment cells need positive probability");
    assign_total += a;
  }
  if (std::abs(assign_total - 1.0) > 1e-9)
    throw SpecError("assignment probabilities sum to " +
                    std::to_string(assign_total));
  if (!(spec.outcomes.k > 0.0)) throw SpecError("outcome bound K must be positive");
}

namespace {

PotentialOutcomes generate_outcomes(Rng& rng, const OutcomeModel& m) {
  auto u = [&] { return rng.uniform(); };
  PotentialOutcomes po;
  if (m.homogeneous) {
    const auto& h = *m.homogeneous;
    const double top = h.tau_a + h.tau_b + h.tau_ab;
    const double hi_shift = std::max({0.0, h.tau_a, h.tau_b, top});
    const double lo_shift = std::min({0.0, h.tau_a, h.tau_b, top});
    const double lo = -lo_shift, hi = m.k - hi_shift;
    if (hi < lo)
      throw SpecError("homogeneous effects do not fit inside [0, K]");
    po.y00 = lo + (hi - lo) * u();
    po.y10 = po.y00 + h.tau_a;
    po.y01 = po.y00 + h.tau_b;
    po.y11 = po.y00 + top;
    return po;
  }
  if (m.no_interaction) {
    po.y00 = m.k / 3.0 * u();
    po.y10 = po.y00 + m.k / 3.0 * u();
    po.y01 = po.y00 + m.k / 3.0 * u();
    po.y11 = po.y10 + po.y01 - po.y00;
    return po;
  }
  po.y00 = m.k * u();
  if (m.monotone_response) {
    po.y10 = po.y00 + (m.k - po.y00) * u();
    po.y01 = po.y00 + (m.k - po.y00) * u();
  } else {
    po.y10 = m.k * u();
    po.y01 = m.k * u();
  }
  if (m.y11_ge_max) {
    const double floor = std::max(po.y10, po.y01);
    po.y11 = floor + (m.k - floor) * u();
  } else if (m.y11_ge_y00) {
    po.y11 = po.y00 + (m.k - po.y00) * u();
  } else {
    po.y11 = m.k * u();
  }
  return po;
}

}  // namespace

Population make_population(const PopulationSpec& spec, std::size_t n_pairs) {
  validate_spec(spec);
  if (n_pairs == 0) throw SpecError("population size must be at least 1");
  std::vector<double> cumulative;
  cumulative.reserve(spec.profiles.size());
  double running = 0.0;
  for (const auto& p : spec.profiles) {
    running += p.prob;
    cumulative.push_back(running);
  }
  Rng rng(spec.seed);
  Population pop;
  pop.reserve(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const auto& profile = spec.profiles[rng.pick(cumulative)];
    SyntheticPair pr;
    pr.map_a = profile.a;
    pr.map_b = profile.b;
    pr.po = profile.outcomes ? *profile.outcomes
                             : generate_outcomes(rng, spec.outcomes);
    pop.push_back(pr);
  }
  return pop;
}

CellTable exact_cell_table(const Population& pop, const AssignmentProbs& assign) {
  if (pop.empty()) throw PreconditionError("population is empty");
  for (double a : assign.p)
    if (a <= 0.0)
      throw PreconditionError("assignment probabilities must be positive");

  struct Acc {
    double mass = 0.0, ysum = 0.0;
    std::array<double, kCells> dmass{};
    std::array<double, kCells> dysum{};
  };
  std::array<Acc, kCells> acc{};
  for (const auto& pr : pop) {
    for (int za = 0; za < 2; ++za) {
      for (int zb = 0; zb < 2; ++zb) {
        const double w = pr.weight * assign.at(za, zb);
        const int da = pr.d_a(za, zb), db = pr.d_b(za, zb);
        const double y = pr.po.at(da, db);
        Acc& a = acc[static_cast<std::size_t>(cell_index(za, zb))];
        a.mass += w;
        a.ysum += w * y;
        a.dmass[static_cast<std::size_t>(cell_index(da, db))] += w;
        a.dysum[static_cast<std::size_t>(cell_index(da, db))] += w * y;
      }
    }
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

Dataset sample_dataset(const Population& pop, std::size_t n, std::uint64_t seed,
                       const AssignmentProbs& assign) {
  if (pop.empty()) throw PreconditionError("population is empty");
  if (n == 0) throw PreconditionError("sample size must be at least 1");
  std::vector<double> pair_cum;
  pair_cum.reserve(pop.size());
  double running = 0.0;
  for (const auto& pr : pop) {
    running += pr.weight;
    pair_cum.push_back(running);
  }
  std::vector<double> cell_cum(4);
  running = 0.0;
  for (int z = 0; z < kCells; ++z) {
    running += assign.p[static_cast<std::size_t>(z)];
    cell_cum[static_cast<std::size_t>(z)] = running;
  }

  Rng rng(seed);
  Dataset data;
  data.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const SyntheticPair& pr = pop[rng.pick(pair_cum)];
    const int z = static_cast<int>(rng.pick(cell_cum));
    const int za = z / 2, zb = z % 2;
    Observation obs;
    obs.z_a = za;
    obs.z_b = zb;
    obs.d_a = pr.d_a(za, zb);
    obs.d_b = pr.d_b(za, zb);
    obs.y = pr.po.at(obs.d_a, obs.d_b);
    data.rows.push_back(obs);
  }
  return data;
}

double set_share(const Population& pop, const PairPredicate& pred) {
  double hit = 0.0;
  for (const auto& pr : pop)
    if (pred(pr)) hit += pr.weight;
  return hit / total_weight(pop);
}

double true_effect(const Population& pop, const PairPredicate& pred,
                   EffectKind kind) {
  double w = 0.0, sum = 0.0;
  for (const auto& pr : pop) {
    if (!pred(pr)) continue;
    w += pr.weight;
    sum += pr.weight * contrast(pr.po, kind);
  }
  if (w <= 0.0) throw PreconditionError("effect requested on a zero-mass set");
  return sum / w;
}

double mean_potential(const Population& pop, const PairPredicate& pred, int d_a,
                      int d_b) {
  double w = 0.0, sum = 0.0;
  for (const auto& pr : pop) {
    if (!pred(pr)) continue;
    w += pr.weight;
    sum += pr.weight * pr.po.at(d_a, d_b);
  }
  if (w <= 0.0) throw PreconditionError("moment requested on a zero-mass set");
  return sum / w;
}

namespace {

bool type_in(MemberType t, const std::vector<MemberType>& types) {
  return std::find(types.begin(), types.end(), t) != types.end();
}

}  // namespace

PairPredicate a_is(std::initializer_list<MemberType> types) {
  std::vector<MemberType> v(types);
  return [v](const SyntheticPair& pr) { return type_in(classify(pr.map_a), v); };
}

PairPredicate b_is(std::initializer_list<MemberType> types) {
  std::vector<MemberType> v(types);
  return [v](const SyntheticPair& pr) { return type_in(classify(pr.map_b), v); };
}

PairPredicate pair_is(std::initializer_list<MemberType> a,
                      std::initializer_list<MemberType> b) {
  std::vector<MemberType> va(a), vb(b);
  return [va, vb](const SyntheticPair& pr) {
    return type_in(classify(pr.map_a), va) && type_in(classify(pr.map_b), vb);
  };
}

std::string to_string(Theorem theorem) {
  switch (theorem) {
    case Theorem::T1: return "T1";
    case Theorem::T2Eq5: return "T2_EQ5";
    case Theorem::T2Eq6: return "T2_EQ6";
    case Theorem::Cor2: return "COR2";
    case Theorem::T3: return "T3";
    case Theorem::B1: return "B1";
    case Theorem::B2: return "B2";
    case Theorem::B3: return "B3";
    case Theorem::L1: return "L1";
    case Theorem::A1: return "A1";
    case Theorem::A2: return "A2";
    case Theorem::BoundsContain: return "BOUNDS_CONTAIN";
  }
  return "?";
}

Theorem theorem_from_string(const std::string& text) {
  for (auto t : {Theorem::T1, Theorem::T2Eq5, Theorem::T2Eq6, Theorem::Cor2,
                 Theorem::T3, Theorem::B1, Theorem::B2, Theorem::B3, Theorem::L1,
                 Theorem::A1, Theorem::A2, Theorem::BoundsContain})
    if (text == to_string(t)) return t;
  throw SpecError("unknown theorem '" + text + "'");
}

namespace {

using MT = MemberType;

void verify_t1(const Population& pop, const CellTable& table, VerifyReport& r) {
  require_one_sided(pop);
  auto responders_a = [](const SyntheticPair& pr) { return pr.d_a(1, 0) == 1; };
  auto responders_b = [](const SyntheticPair& pr) { return pr.d_b(0, 1) == 1; };
  require_share(pop, responders_a, "own-instrument responders of A");
  require_share(pop, responders_b, "own-instrument responders of B");

  add_check(r, "wald_a0 = effect of A alone among self/defier A",
            wald(table, Side::A, 0),
            true_effect(pop, responders_a, EffectKind::AGivenNotB));
  add_check(r, "wald_b0 = effect of B alone among self/defier B",
            wald(table, Side::B, 0),
            true_effect(pop, responders_b, EffectKind::BGivenNotA));

  const double p_sd_a = set_share(pop, responders_a);
  add_check(r, "self/defier decomposition of wald_a0",
            wald(table, Side::A, 0) * p_sd_a,
            term(pop, a_is({MT::SelfComplier}), EffectKind::AGivenNotB) +
                term(pop, a_is({MT::CrossDefier}), EffectKind::AGivenNotB));
}

void verify_t2(const Population& pop, const CellTable& table, bool five_term,
               VerifyReport& r) {
  require_one_sided(pop);
  auto c_a = [](const SyntheticPair& pr) { return pr.d_a(1, 1) == 1; };
  auto c_b = [](const SyntheticPair& pr) { return pr.d_b(1, 1) == 1; };
  const double p_c_a = require_share(pop, c_a, "compliers of A");
  const double p_c_b = require_share(pop, c_b, "compliers of B");
  auto cc = pair_is({MT::SelfComplier, MT::JointComplier},
                    {MT::SelfComplier, MT::JointComplier});

  if (!five_term) {
    const double rhs_a =
        true_effect(pop, c_a, EffectKind::AGivenNotB) +
        (term(pop, b_is({MT::JointComplier}), EffectKind::BGivenNotA) -
         term(pop, b_is({MT::CrossDefier}), EffectKind::BGivenNotA) +
         term(pop, cc, EffectKind::Laie)) /
            p_c_a;
    add_check(r, "wald_a1: four-term decomposition", wald(table, Side::A, 1), rhs_a);
    const double rhs_b =
        true_effect(pop, c_b, EffectKind::BGivenNotA) +
        (term(pop, a_is({MT::JointComplier}), EffectKind::AGivenNotB) -
         term(pop, a_is({MT::CrossDefier}), EffectKind::AGivenNotB) +
         term(pop, cc, EffectKind::Laie)) /
            p_c_b;
    add_check(r, "wald_b1: four-term decomposition", wald(table, Side::B, 1), rhs_b);
    return;
  }

  const auto c = {MT::SelfComplier, MT::JointComplier};
  const auto nd = {MT::NeverTaker, MT::CrossDefier};
  const double rhs_a =
      (term(pop, pair_is(c, {MT::JointComplier}), EffectKind::Joint) +
       term(pop, pair_is(c, {MT::SelfComplier}), EffectKind::AGivenB) +
       term(pop, pair_is(c, nd), EffectKind::AGivenNotB) -
       term(pop, b_is({MT::CrossDefier}), EffectKind::BGivenNotA) +
       term(pop, pair_is(nd, {MT::JointComplier}), EffectKind::BGivenNotA)) /
      p_c_a;
  add_check(r, "wald_a1: five-term decomposition", wald(table, Side::A, 1), rhs_a);
  const double rhs_b =
      (term(pop, pair_is({MT::JointComplier}, c), EffectKind::Joint) +
       term(pop, pair_is({MT::SelfComplier}, c), EffectKind::BGivenA) +
       term(pop, pair_is(nd, c), EffectKind::BGivenNotA) -
       term(pop, a_is({MT::CrossDefier}), EffectKind::AGivenNotB) +
       term(pop, pair_is({MT::JointComplier}, nd), EffectKind::AGivenNotB)) /
      p_c_b;
  add_check(r, "wald_b1: five-term decomposition", wald(table, Side::B, 1), rhs_b);
}

void verify_cor2(const Population& pop, const CellTable& table, VerifyReport& r) {
  require_one_sided(pop);
  if (set_share(pop, a_is({MT::CrossDefier})) > 0.0 ||
      set_share(pop, b_is({MT::CrossDefier})) > 0.0)
    throw PreconditionError("corollary requires no cross-defiers on either side");
  if (set_share(pop, pair_is({MT::NeverTaker}, {MT::JointComplier})) > 0.0 ||
      set_share(pop, pair_is({MT::JointComplier}, {MT::NeverTaker})) > 0.0)
    throw PreconditionError("corollary requires no never/joint pairs");

  auto c_a = [](const SyntheticPair& pr) { return pr.d_a(1, 1) == 1; };
  auto c_b = [](const SyntheticPair& pr) { return pr.d_b(1, 1) == 1; };
  const double p_c_a = require_share(pop, c_a, "compliers of A");
  const double p_c_b = require_share(pop, c_b, "compliers of B");
  const auto c = {MT::SelfComplier, MT::JointComplier};

  const double rhs_a =
      (term(pop, pair_is(c, {MT::JointComplier}), EffectKind::Joint) +
       term(pop, pair_is(c, {MT::SelfComplier}), EffectKind::AGivenB) +
       term(pop, pair_is(c, {MT::NeverTaker}), EffectKind::AGivenNotB)) /
      p_c_a;
  add_check(r, "wald_a1: three-term decomposition", wald(table, Side::A, 1), rhs_a);
  const double rhs_b =
      (term(pop, pair_is({MT::JointComplier}, c), EffectKind::Joint) +
       term(pop, pair_is({MT::SelfComplier}, c), EffectKind::BGivenA) +
       term(pop, pair_is({MT::NeverTaker}, c), EffectKind::BGivenNotA)) /
      p_c_b;
  add_check(r, "wald_b1: three-term decomposition", wald(table, Side::B, 1), rhs_b);
}

void verify_t3(const Population& pop, const CellTable& table, VerifyReport& r) {
  require_one_sided(pop);
  const IvEstimates est = saturated_iv(table);
  auto everyone = [](const SyntheticPair&) { return true; };
  add_check(r, "intercept = mean untreated outcome", est.beta(0),
            mean_potential(pop, everyone, 0, 0));

  auto responders_a = [](const SyntheticPair& pr) { return pr.d_a(1, 0) == 1; };
  auto responders_b = [](const SyntheticPair& pr) { return pr.d_b(0, 1) == 1; };
  const double ate_a_ref = true_effect(pop, responders_a, EffectKind::AGivenNotB);
  const double ate_b_ref = true_effect(pop, responders_b, EffectKind::BGivenNotA);
  add_check(r, "beta_A = effect of A alone among self/defier A", est.beta(1),
            ate_a_ref);
  add_check(r, "beta_B = effect of B alone among self/defier B", est.beta(2),
            ate_b_ref);

  auto cc = pair_is({MT::SelfComplier, MT::JointComplier},
                    {MT::SelfComplier, MT::JointComplier});
  const double p_cc = require_share(pop, cc, "double compliers");
  auto hetero = [&](std::initializer_list<MT> set, bool side_a, bool ref_minus) {
    const PairPredicate pred = side_a ? a_is(set) : b_is(set);
    const double share = set_share(pop, pred);
    if (share <= 0.0) return 0.0;
    const double ate = true_effect(
        pop, pred, side_a ? EffectKind::AGivenNotB : EffectKind::BGivenNotA);
    const double ref = side_a ? ate_a_ref : ate_b_ref;
    return share / p_cc * (ref_minus ? ref - ate : ate - ref);
  };
  const double rhs = true_effect(pop, cc, EffectKind::Laie) +
                     hetero({MT::JointComplier}, true, false) +
                     hetero({MT::JointComplier}, false, false) +
                     hetero({MT::CrossDefier}, true, true) +
                     hetero({MT::CrossDefier}, false, true);
  add_check(r, "beta_AB: interaction plus heterogeneity terms", est.beta(3), rhs);
}

// The intention-to-treat decomposition over the six switch sets, for either
// member's instrument moving while the other is held at z.
void verify_b1_orientation(const Population& pop, const CellTable& table, int z,
                           bool vary_a, VerifyReport& r) {
  auto da = [vary_a](const SyntheticPair& pr, int on, int held) {
    return vary_a ? pr.d_a(on, held) : pr.d_b(held, on);
  };
  auto db = [vary_a](const SyntheticPair& pr, int on, int held) {
    return vary_a ? pr.d_b(on, held) : pr.d_a(held, on);
  };
  auto p1 = [&](const SyntheticPair& pr) { return da(pr, 1, z) == 1 && da(pr, 0, z) == 0; };
  auto p2 = [&](const SyntheticPair& pr) { return da(pr, 1, z) == 0 && da(pr, 0, z) == 1; };
  auto p3 = [&](const SyntheticPair& pr) { return db(pr, 1, z) == 1 && db(pr, 0, z) == 0; };
  auto p4 = [&](const SyntheticPair& pr) { return db(pr, 1, z) == 0 && db(pr, 0, z) == 1; };
  auto p5 = [&](const SyntheticPair& pr) {
    return da(pr, 1, z) * db(pr, 1, z) == 1 && da(pr, 0, z) * db(pr, 0, z) == 0;
  };
  auto p6 = [&](const SyntheticPair& pr) {
    return da(pr, 1, z) * db(pr, 1, z) == 0 && da(pr, 0, z) * db(pr, 0, z) == 1;
  };

  const EffectKind own = vary_a ? EffectKind::AGivenNotB : EffectKind::BGivenNotA;
  const EffectKind other = vary_a ? EffectKind::BGivenNotA : EffectKind::AGivenNotB;
  const double rhs_num = term(pop, p1, own) - term(pop, p2, own) +
                         term(pop, p3, other) - term(pop, p4, other) +
                         term(pop, p5, EffectKind::Laie) -
                         term(pop, p6, EffectKind::Laie);
  const double rhs_den = set_share(pop, p1) - set_share(pop, p2);

  const auto& on_cell = vary_a ? table.cell(1, z) : table.cell(z, 1);
  const auto& off_cell = vary_a ? table.cell(0, z) : table.cell(z, 0);
  const double lhs_num = *on_cell.ybar - *off_cell.ybar;
  const double lhs_den = vary_a ? on_cell.dbar_a - off_cell.dbar_a
                                : on_cell.dbar_b - off_cell.dbar_b;

  std::ostringstream tag;
  tag << "instrument " << (vary_a ? 'A' : 'B') << ", partner at " << z;
  add_check(r, "outcome contrast, " + tag.str(), lhs_num, rhs_num);
  add_check(r, "takeup contrast, " + tag.str(), lhs_den, rhs_den);
}

void verify_b2(const Population& pop, const CellTable& table, VerifyReport& r) {
  for (const auto& pr : pop) {
    if (!pr.map_a.monotone())
      throw PreconditionError("member A map violates monotonicity");
    if (!pr.map_b.one_sided())
      throw PreconditionError("member B map violates one-sided noncompliance");
  }
  auto p1 = [](const SyntheticPair& pr) {
    return pr.d_a(1, 0) == 1 && pr.d_a(0, 0) == 0;
  };
  require_share(pop, p1, "A switchers at partner off");
  add_check(r, "wald_a0 = effect of A alone among self/defier/cross-complier A",
            wald(table, Side::A, 0),
            true_effect(pop, p1, EffectKind::AGivenNotB));
}

void verify_b3(const Population& pop, const CellTable& table, VerifyReport& r) {
  for (const auto& pr : pop) {
    if (!pr.map_a.one_sided())
      throw PreconditionError("member A map violates one-sided noncompliance");
    if (!pr.map_b.monotone())
      throw PreconditionError("member B map violates monotonicity");
  }
  auto p1 = [](const SyntheticPair& pr) { return pr.d_a(1, 1) == 1; };
  auto p3 = [](const SyntheticPair& pr) {
    return pr.d_b(1, 1) == 1 && pr.d_b(0, 1) == 0;
  };
  auto p4 = [](const SyntheticPair& pr) {
    return pr.d_b(1, 1) == 0 && pr.d_b(0, 1) == 1;
  };
  auto p5 = [](const SyntheticPair& pr) {
    return pr.d_a(1, 1) == 1 && pr.d_b(1, 1) == 1;
  };
  const double p_1 = require_share(pop, p1, "compliers of A");
  const double rhs = true_effect(pop, p1, EffectKind::AGivenNotB) +
                     (term(pop, p3, EffectKind::BGivenNotA) -
                      term(pop, p4, EffectKind::BGivenNotA) +
                      term(pop, p5, EffectKind::Laie)) /
                         p_1;
  add_check(r, "wald_a1: decomposition with a monotone partner instrument",
            wald(table, Side::A, 1), rhs);
}

void verify_l1(const Population& pop, const CellTable& table, VerifyReport& r) {
  require_one_sided(pop);
  const auto& both = table.cell(1, 1);
  add_check(r, "P(D_A=1 | own only) = P(self/defier A)", table.cell(1, 0).dbar_a,
            set_share(pop, a_is({MT::SelfComplier, MT::CrossDefier})));
  add_check(r, "P(D_B=1 | own only) = P(self/defier B)", table.cell(0, 1).dbar_b,
            set_share(pop, b_is({MT::SelfComplier, MT::CrossDefier})));
  add_check(r, "P(D=10 | both) = P(complier A, never/defier B)",
            both.treat_share[cell_index(1, 0)],
            set_share(pop, pair_is({MT::SelfComplier, MT::JointComplier},
                                   {MT::NeverTaker, MT::CrossDefier})));
  add_check(r, "P(D=01 | both) = P(never/defier A, complier B)",
            both.treat_share[cell_index(0, 1)],
            set_share(pop, pair_is({MT::NeverTaker, MT::CrossDefier},
                                   {MT::SelfComplier, MT::JointComplier})));
  add_check(r, "P(D=11 | both) = P(double compliers)",
            both.treat_share[cell_index(1, 1)],
            set_share(pop, pair_is({MT::SelfComplier, MT::JointComplier},
                                   {MT::SelfComplier, MT::JointComplier})));
  // Corollary complements.
  add_check(r, "P(D=00 | both) = P(never/defier, never/defier)",
            both.treat_share[cell_index(0, 0)],
            set_share(pop, pair_is({MT::NeverTaker, MT::CrossDefier},
                                   {MT::NeverTaker, MT::CrossDefier})));
  add_check(r, "P(D_A=0 | own only) = P(joint/never A)",
            1.0 - table.cell(1, 0).dbar_a,
            set_share(pop, a_is({MT::JointComplier, MT::NeverTaker})));
  add_check(r, "P(D_A=1 | both) = P(complier A)", both.dbar_a,
            set_share(pop, a_is({MT::SelfComplier, MT::JointComplier})));
  add_check(r, "P(D_A=0 | both) = P(never/defier A)", 1.0 - both.dbar_a,
            set_share(pop, a_is({MT::NeverTaker, MT::CrossDefier})));
  add_check(r, "P(D_B=1 | both) = P(complier B)", both.dbar_b,
            set_share(pop, b_is({MT::SelfComplier, MT::JointComplier})));
}

void verify_a1(const Population& pop, VerifyReport& r) {
  auto everyone = [](const SyntheticPair&) { return true; };
  auto a_both = [](const SyntheticPair& pr) { return pr.d_a(1, 1) == 1; };
  auto b_both = [](const SyntheticPair& pr) { return pr.d_b(1, 1) == 1; };
  auto a_self = a_is({MT::SelfComplier});
  struct Split {
    const char* name;
    PairPredicate set;
    PairPredicate condition;
  };
  const Split splits[] = {
      {"all pairs by A takeup under double assignment", everyone, a_both},
      {"all pairs by B takeup under double assignment", everyone, b_both},
      {"A compliers by B takeup under double assignment", a_both, b_both},
      {"all pairs by A self-complier", everyone, a_self},
  };
  const std::pair<EffectKind, const char*> kinds[] = {
      {EffectKind::AGivenNotB, "A alone"}, {EffectKind::AGivenB, "A given B"},
      {EffectKind::BGivenNotA, "B alone"}, {EffectKind::BGivenA, "B given A"},
      {EffectKind::Joint, "joint"},        {EffectKind::Laie, "interaction"},
  };
  for (const auto& split : splits) {
    auto part1 = [&](const SyntheticPair& pr) {
      return split.set(pr) && split.condition(pr);
    };
    auto part2 = [&](const SyntheticPair& pr) {
      return split.set(pr) && !split.condition(pr);
    };
    if (set_share(pop, part1) <= 0.0 || set_share(pop, part2) <= 0.0) continue;
    for (const auto& [kind, kind_name] : kinds) {
      add_check(r,
                std::string("partition of ") + split.name + ", " + kind_name,
                term(pop, split.set, kind),
                term(pop, part1, kind) + term(pop, part2, kind));
    }
  }
  if (r.checks.empty())
    throw PreconditionError("population admits no nontrivial partition");
}

void verify_a2(const Population& pop, const CellTable& table, VerifyReport& r) {
  require_one_sided(pop);
  const TypeShares shares = type_shares(table);
  const IdentifiedMoments m = identified_moments(table, shares);

  const auto c = {MT::SelfComplier, MT::JointComplier};
  const auto nd = {MT::NeverTaker, MT::CrossDefier};
  const auto nj = {MT::NeverTaker, MT::JointComplier};
  const auto sd = {MT::SelfComplier, MT::CrossDefier};
  auto everyone = [](const SyntheticPair&) { return true; };

  struct Entry {
    const char* name;
    const std::optional<double>& observed;
    PairPredicate set;
    int d_a, d_b;
  };
  const Entry entries[] = {
      {"E[Y(00)]", m.m00_all, everyone, 0, 0},
      {"E[Y(00) | never/joint A]", m.m00_nj_a, a_is(nj), 0, 0},
      {"E[Y(00) | never/joint B]", m.m00_nj_b, b_is(nj), 0, 0},
      {"E[Y(00) | both never/defier]", m.m00_ndnd, pair_is(nd, nd), 0, 0},
      {"E[Y(10) | self/defier A]", m.m10_sd_a, a_is(sd), 1, 0},
      {"E[Y(10) | complier A, never/defier B]", m.m10_c_nd, pair_is(c, nd), 1, 0},
      {"E[Y(01) | self/defier B]", m.m01_sd_b, b_is(sd), 0, 1},
      {"E[Y(01) | never/defier A, complier B]", m.m01_nd_c, pair_is(nd, c), 0, 1},
      {"E[Y(11) | double compliers]", m.m11_cc, pair_is(c, c), 1, 1},
      {"E[Y(00) | self/defier A] (derived)", m.m00_sd_a, a_is(sd), 0, 0},
      {"E[Y(00) | self/defier B] (derived)", m.m00_sd_b, b_is(sd), 0, 0},
  };
  for (const auto& e : entries) {
    const double share = set_share(pop, e.set);
    if (share <= 0.0) {
      // Zero-mass sets must come out undefined, not wrong.
      add_check(r, std::string(e.name) + " stays undefined on an empty set",
                e.observed ? 1.0 : 0.0, 0.0);
      continue;
    }
    add_check(r, e.name, require_moment(e.observed, e.name),
              mean_potential(pop, e.set, e.d_a, e.d_b));
  }
}

void contain_check(VerifyReport& r, const std::string& name,
                   const AssumedInterval& iv, double truth) {
  VerifyCheck c;
  c.name = name + " contains " + std::to_string(truth);
  c.lhs = iv.lo;
  c.rhs = iv.hi;
  c.pass = iv.contains(truth, kVerifyTol * std::max(1.0, std::abs(truth)));
  r.checks.push_back(std::move(c));
}

void verify_bounds_contain(const Population& pop, const CellTable& table,
                           VerifyReport& r) {
  require_one_sided(pop);
  double k = 0.0;
  bool y11_ge_y00 = true, y11_ge_max = true;
  for (const auto& pr : pop) {
    for (double y : {pr.po.y00, pr.po.y01, pr.po.y10, pr.po.y11}) {
      if (y < 0.0)
        throw PreconditionError("population violates the outcome lower bound 0");
      k = std::max(k, y);
    }
    if (pr.po.y10 < pr.po.y00 || pr.po.y01 < pr.po.y00)
      throw PreconditionError("population violates monotone response");
    y11_ge_y00 = y11_ge_y00 && pr.po.y11 >= pr.po.y00;
    y11_ge_max = y11_ge_max && pr.po.y11 >= std::max(pr.po.y10, pr.po.y01);
  }
  k = std::max(k, 1.0);

  const bool no_d_a = set_share(pop, a_is({MT::CrossDefier})) == 0.0;
  const bool no_j_b = set_share(pop, b_is({MT::JointComplier})) == 0.0;
  Restrictions restr;
  restr.no_cross_defiers_a = no_d_a;
  restr.no_joint_compliers_b = no_j_b;
  const TypeShares shares = type_shares(table, restr);
  const IdentifiedMoments moments = identified_moments(table, shares);

  auto cc = pair_is({MT::SelfComplier, MT::JointComplier},
                    {MT::SelfComplier, MT::JointComplier});
  require_share(pop, cc, "double compliers");
  const double truth_y00 = mean_potential(pop, cc, 0, 0);
  const double truth_y10 = mean_potential(pop, cc, 1, 0);
  const double truth_y01 = mean_potential(pop, cc, 0, 1);
  const double truth_joint = true_effect(pop, cc, EffectKind::Joint);
  const double truth_laie = true_effect(pop, cc, EffectKind::Laie);

  BoundInputs inputs{shares, moments, k, {}, true};
  contain_check(r, "untreated mean among double compliers",
                bound_y00_cc(inputs), truth_y00);
  contain_check(r, "joint effect among double compliers",
                bound_joint_cc(inputs), truth_joint);
  if (y11_ge_y00) {
    BoundInputs tightened = inputs;
    tightened.strengthen.y11_ge_y00 = true;
    contain_check(r, "joint effect, tightened",
                  bound_joint_cc(tightened), truth_joint);
  }

  std::optional<AuxMomentBounds> aux;
  if (no_d_a && no_j_b) {
    const LaieDirectBounds direct = bound_laie_direct(inputs);
    contain_check(r, "treated-A mean among double compliers", direct.y10_cc,
                  truth_y10);
    contain_check(r, "treated-B mean among double compliers", direct.y01_cc,
                  truth_y01);
    contain_check(r, "interaction effect, direct", direct.laie, truth_laie);
    if (y11_ge_max) {
      BoundInputs tightened = inputs;
      tightened.strengthen.y11_ge_max = true;
      contain_check(r, "interaction effect, direct tightened",
                    bound_laie_direct(tightened).laie, truth_laie);
    }
    if (shares.marginals_a->joint > 1e-9 && shares.marginals_b->defier > 1e-9) {
      aux = bound_aux_moments(inputs);
      auto j_a = a_is({MT::JointComplier});
      auto d_b = b_is({MT::CrossDefier});
      contain_check(r, "untreated mean among joint-complier A",
                    aux->y00_joint_a, mean_potential(pop, j_a, 0, 0));
      contain_check(r, "treated-A mean among joint-complier A",
                    aux->y10_joint_a, mean_potential(pop, j_a, 1, 0));
      contain_check(r, "treated-B mean among cross-defier B",
                    aux->y01_defier_b, mean_potential(pop, d_b, 0, 1));
      contain_check(r, "untreated mean among cross-defier B",
                    aux->y00_defier_b, mean_potential(pop, d_b, 0, 0));
      contain_check(r, "effect of A alone among its joint compliers",
                    aux->effect_a_joint,
                    true_effect(pop, j_a, EffectKind::AGivenNotB));
      contain_check(r, "effect of B alone among its cross-defiers",
                    aux->effect_b_defier,
                    true_effect(pop, d_b, EffectKind::BGivenNotA));
    }
  }
  if (no_d_a) {
    const IvEstimates est = saturated_iv(table);
    const IndirectInputs iv{est.beta(3), est.beta(1), est.beta(2)};
    const double p_j_b = set_share(pop, b_is({MT::JointComplier}));
    const AuxMomentBounds* aux_ptr = (aux && p_j_b == 0.0) ? &*aux : nullptr;
    contain_check(r, "interaction effect, indirect",
                  bound_laie_indirect(inputs, iv, p_j_b, aux_ptr), truth_laie);
  }
}

}  // namespace

VerifyReport verify(const Population& pop, const AssignmentProbs& assign,
                    Theorem theorem) {
  if (pop.empty()) throw PreconditionError("population is empty");
  VerifyReport report;
  report.theorem = theorem;
  const CellTable table = exact_cell_table(pop, assign);
  switch (theorem) {
    case Theorem::T1: verify_t1(pop, table, report); break;
    case Theorem::T2Eq5: verify_t2(pop, table, false, report); break;
    case Theorem::T2Eq6: verify_t2(pop, table, true, report); break;
    case Theorem::Cor2: verify_cor2(pop, table, report); break;
    case Theorem::T3: verify_t3(pop, table, report); break;
    case Theorem::B1:
      for (int z : {0, 1}) {
        verify_b1_orientation(pop, table, z, true, report);
        verify_b1_orientation(pop, table, z, false, report);
      }
      break;
    case Theorem::B2: verify_b2(pop, table, report); break;
    case Theorem::B3: verify_b3(pop, table, report); break;
    case Theorem::L1: verify_l1(pop, table, report); break;
    case Theorem::A1: verify_a1(pop, report); break;
    case Theorem::A2: verify_a2(pop, table, report); break;
    case Theorem::BoundsContain: verify_bounds_contain(pop, table, report); break;
  }
  report.pass = !report.checks.empty();
  for (const auto& c : report.checks) report.pass = report.pass && c.pass;
  return report;
}

PopulationSpec random_population_spec(std::uint64_t seed,
                                      const RandomPopulationOptions& options) {
  Rng rng(derive_seed(seed, 0xa11ce));

  auto allowed = [&](bool monotone_side, bool unrestricted) {
    std::vector<ComplianceMap> maps;
    if (unrestricted) {
      for (int bits = 0; bits < 16; ++bits) {
        ComplianceMap m;
        for (int i = 0; i < 4; ++i)
          m.bits[static_cast<std::size_t>(i)] =
              static_cast<std::uint8_t>((bits >> i) & 1);
        maps.push_back(m);
      }
      return maps;
    }
    for (const auto& e : kTypeTable) {
      if (monotone_side ? e.map.monotone() : e.map.one_sided())
        maps.push_back(e.map);
    }
    return maps;
  };

  const bool unrestricted = options.mode == PopulationMode::Unrestricted;
  std::vector<ComplianceMap> maps_a =
      allowed(options.mode == PopulationMode::MonotoneAOneSidedB, unrestricted);
  std::vector<ComplianceMap> maps_b =
      allowed(options.mode == PopulationMode::OneSidedAMonotoneB, unrestricted);

  auto drop = [](std::vector<ComplianceMap>& maps, MemberType t) {
    maps.erase(std::remove(maps.begin(), maps.end(), map_of(t)), maps.end());
  };
  if (options.no_cross_defiers_a) drop(maps_a, MemberType::CrossDefier);
  if (options.no_cross_defiers_b) drop(maps_b, MemberType::CrossDefier);
  if (options.no_joint_compliers_b) drop(maps_b, MemberType::JointComplier);
  if (options.only_noninteractive) {
    maps_a = {map_of(MemberType::SelfComplier), map_of(MemberType::NeverTaker)};
    maps_b = maps_a;
  }

  PopulationSpec spec;
  spec.mode = options.mode;
  spec.outcomes = options.outcomes;
  spec.seed = derive_seed(seed, 0x9a1f5);

  double total = 0.0;
  for (const auto& ma : maps_a) {
    for (const auto& mb : maps_b) {
      if (options.no_nj_pairs) {
        const MemberType ta = classify(ma), tb = classify(mb);
        if ((ta == MemberType::NeverTaker && tb == MemberType::JointComplier) ||
            (ta == MemberType::JointComplier && tb == MemberType::NeverTaker))
          continue;
      }
      // Skewed sparse masses: roughly half the profiles absent.
      const double w = rng.uniform() < 0.5 ? 0.0 : -std::log(1.0 - rng.uniform());
      if (w <= 0.0) continue;
      spec.profiles.push_back({ma, mb, w, std::nullopt});
      total += w;
    }
  }
  // A floor on the (self, self) profile keeps every first-stage mass positive.
  const ComplianceMap self = map_of(MemberType::SelfComplier);
  const double floor = std::max(total, 1e-12) / 9.0;
  bool found = false;
  for (auto& p : spec.profiles) {
    if (p.a == self && p.b == self) {
      p.prob += floor;
      found = true;
      break;
    }
  }
  if (!found) spec.profiles.push_back({self, self, floor, std::nullopt});
  total += floor;
  for (auto& p : spec.profiles) p.prob /= total;

  double assign_total = 0.0;
  for (auto& a : spec.assignment.p) {
    a = 0.1 + rng.uniform();
    assign_total += a;
  }
  for (auto& a : spec.assignment.p) a /= assign_total;
  return spec;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  Rng rng(master ^ (index + 1) * 0x9e3779b97f4a7c15ull);
  return rng.next();
}

}  // namespace factiv::oracle
