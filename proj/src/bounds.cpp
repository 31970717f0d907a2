#include "factiv/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "factiv/errors.hpp"

namespace factiv {

namespace {

constexpr double kShareTol = 1e-9;

void validate_inputs(const BoundInputs& in) {
  if (!(in.k > 0.0)) throw SchemaError("outcome upper bound K must be positive");
  auto check = [&](const std::optional<double>& m, const char* name) {
    if (m && (*m < -1e-9 || *m > in.k + 1e-9)) {
      std::ostringstream os;
      os << name << " = " << *m << " lies outside [0, " << in.k
         << "]; the bounded-outcomes assumption fails at this K";
      throw IdentificationError(os.str());
    }
  };
  const IdentifiedMoments& m = in.moments;
  check(m.m00_all, "E[Y(00)]");
  check(m.m00_nj_a, "E[Y(00) | never/joint A]");
  check(m.m00_nj_b, "E[Y(00) | never/joint B]");
  check(m.m00_ndnd, "E[Y(00) | both never/defier]");
  check(m.m10_sd_a, "E[Y(10) | self/defier A]");
  check(m.m10_c_nd, "E[Y(10) | complier A, never/defier B]");
  check(m.m01_sd_b, "E[Y(01) | self/defier B]");
  check(m.m01_nd_c, "E[Y(01) | never/defier A, complier B]");
  check(m.m11_cc, "E[Y(11) | double compliers]");
}

double require_p_cc(const BoundInputs& in) {
  if (in.shares.p_cc <= kShareTol)
    throw IdentificationError("double-complier share P(c,c) is zero");
  return in.shares.p_cc;
}

bool tighten_y00(const BoundInputs& in) {
  // y11_ge_max implies y11_ge_y00 under monotone response.
  return in.strengthen.y11_ge_y00 || in.strengthen.y11_ge_max;
}

AssumptionSet base_assumptions() {
  return {AssumptionTag::OneSided, AssumptionTag::BoundedOutcomes,
          AssumptionTag::MonotoneResponse};
}

// The resolved marginals needed by the formal bounds: no cross-defiers on the
// A side, no joint compliers on the B side.
const ResolvedMarginals& marginals_no_defier_a(const BoundInputs& in) {
  const auto& m = in.shares.marginals_a;
  if (!m || m->defier != 0.0)
    throw PreconditionError(
        "requires type shares resolved under no cross-defiers for A");
  return *m;
}

const ResolvedMarginals& marginals_no_joint_b(const BoundInputs& in) {
  const auto& m = in.shares.marginals_b;
  if (!m || m->joint != 0.0)
    throw PreconditionError(
        "requires type shares resolved under no joint compliers for B");
  return *m;
}

}  // namespace

AssumedInterval bound_y00_cc(const BoundInputs& in, bool clip) {
  validate_inputs(in);
  const double p_cc = require_p_cc(in);
  const TypeShares& s = in.shares;
  const IdentifiedMoments& m = in.moments;

  const double m00 = require_moment(m.m00_all, "E[Y(00)]");
  double hi = (m00 - mass_weighted(m.m00_ndnd, s.p_ndnd,
                                   "E[Y(00) | both never/defier]")) /
              p_cc;
  double lo = hi -
              (mass_weighted(m.m10_c_nd, s.p_c_ndA,
                             "E[Y(10) | complier A, never/defier B]") +
               mass_weighted(m.m01_nd_c, s.p_ndA_c,
                             "E[Y(01) | never/defier A, complier B]")) /
                  p_cc;

  AssumptionSet tags = base_assumptions();
  if (tighten_y00(in)) {
    hi = std::min(hi, require_moment(m.m11_cc, "E[Y(11) | double compliers]"));
    tags.insert(in.strengthen.y11_ge_max ? AssumptionTag::Y11GeMax
                                         : AssumptionTag::Y11GeY00);
  }
  AssumedInterval out = make_interval(lo, hi, tags);
  return clip ? clip_interval(out, in.k) : out;
}

AssumedInterval bound_joint_cc(const BoundInputs& in) {
  const AssumedInterval y00 = bound_y00_cc(in);
  const double m11 = require_moment(in.moments.m11_cc,
                                    "E[Y(11) | double compliers]");
  double lo = m11 - y00.hi;
  double hi = m11 - y00.lo;
  if (tighten_y00(in)) lo = std::max(lo, 0.0);
  return make_interval(lo, hi, y00.assumptions);
}

LaieDirectBounds bound_laie_direct(const BoundInputs& in) {
  validate_inputs(in);
  const double p_cc = require_p_cc(in);
  const TypeShares& s = in.shares;
  const IdentifiedMoments& m = in.moments;
  const ResolvedMarginals& ma = marginals_no_defier_a(in);
  const ResolvedMarginals& mb = marginals_no_joint_b(in);

  AssumptionSet tags = base_assumptions();
  tags.insert(AssumptionTag::NoCrossDefiersA);
  tags.insert(AssumptionTag::NoJointCompliersB);

  // With no cross-defiers for A, the self/defier responders are exactly the
  // self-compliers, and the never/defier set on the A side is the never
  // takers.
  double lo10 = (mass_weighted(m.m10_sd_a, ma.self, "E[Y(10) | self A]") -
                 mass_weighted(m.m10_c_nd, s.p_c_ndA,
                               "E[Y(10) | complier A, never/defier B]")) /
                p_cc;
  double hi10 = lo10 + in.k * ma.joint / p_cc;

  double hi01 = (mass_weighted(m.m01_sd_b, s.p_sd_b, "E[Y(01) | self/defier B]") -
                 mass_weighted(m.m01_nd_c, s.p_ndA_c,
                               "E[Y(01) | never A, complier B]")) /
                p_cc;
  double lo01 = hi01 - in.k * mb.defier / p_cc;

  const double m11 = require_moment(m.m11_cc, "E[Y(11) | double compliers]");
  AssumptionSet component_tags = tags;
  if (in.strengthen.y11_ge_max) {
    hi10 = std::min(hi10, m11);
    hi01 = std::min(hi01, m11);
    component_tags.insert(AssumptionTag::Y11GeMax);
  }

  LaieDirectBounds out;
  out.y00_cc = bound_y00_cc(in, in.clip_components);
  out.y10_cc = make_interval(lo10, hi10, component_tags);
  out.y01_cc = make_interval(lo01, hi01, component_tags);
  if (in.clip_components) {
    out.y10_cc = clip_interval(out.y10_cc, in.k);
    out.y01_cc = clip_interval(out.y01_cc, in.k);
  }

  AssumptionSet laie_tags = component_tags.united(out.y00_cc.assumptions);
  out.laie = make_interval(
      m11 + out.y00_cc.lo - out.y10_cc.hi - out.y01_cc.hi,
      m11 + out.y00_cc.hi - out.y10_cc.lo - out.y01_cc.lo, laie_tags);
  return out;
}

AuxMomentBounds bound_aux_moments(const BoundInputs& in) {
  validate_inputs(in);
  const TypeShares& s = in.shares;
  const IdentifiedMoments& m = in.moments;
  const ResolvedMarginals& ma = marginals_no_defier_a(in);
  const ResolvedMarginals& mb = marginals_no_joint_b(in);
  if (ma.joint <= kShareTol)
    throw IdentificationError("joint-complier share of A is zero");
  if (mb.defier <= kShareTol)
    throw IdentificationError("cross-defier share of B is zero");

  AssumptionSet tags = base_assumptions();
  tags.insert(AssumptionTag::NoCrossDefiersA);
  tags.insert(AssumptionTag::NoJointCompliersB);

  // Under the two type restrictions the observed sets specialize:
  // never/defier pairs on the A side are (n, .) pairs and the compliers of B
  // are its self-compliers.
  const double w_nj_a = mass_weighted(m.m00_nj_a, s.p_nj_a,
                                      "E[Y(00) | never/joint A]");
  const double w_ndnd = mass_weighted(m.m00_ndnd, s.p_ndnd,
                                      "E[Y(00) | both never/defier]");
  const double w_ns = mass_weighted(m.m01_nd_c, s.p_ndA_c,
                                    "E[Y(01) | never A, self B]");
  const double hi00j = (w_nj_a - w_ndnd) / ma.joint;
  const double lo00j = hi00j - w_ns / ma.joint;

  const double w_cnd = mass_weighted(m.m10_c_nd, s.p_c_ndA,
                                     "E[Y(10) | complier A, never/defier B]");
  const double w_s10 = mass_weighted(m.m10_sd_a, ma.self, "E[Y(10) | self A]");
  const double lo10j = (w_cnd - w_s10) / ma.joint;
  const double hi10j = lo10j + in.k * s.p_cc / ma.joint;

  const double w_sd01 = mass_weighted(m.m01_sd_b, s.p_sd_b,
                                      "E[Y(01) | self/defier B]");
  const double hi01d = (w_sd01 - w_ns) / mb.defier;
  const double lo01d = hi01d - in.k * s.p_cc / mb.defier;  // P(c,s) = P(c,c)

  const double w_sd00 =
      mass_weighted(m.m00_sd_b, s.p_sd_b, "E[Y(00) | self/defier B]");
  const double lo00d = (w_sd00 - in.k * mb.self) / mb.defier;
  const double hi00d = std::min(w_sd00, w_ndnd + w_cnd) / mb.defier;

  auto finish = [&](double lo, double hi) {
    AssumedInterval iv = make_interval(lo, hi, tags);
    return in.clip_components ? clip_interval(iv, in.k) : iv;
  };

  AuxMomentBounds out;
  out.y00_joint_a = finish(lo00j, hi00j);
  out.y10_joint_a = finish(lo10j, hi10j);
  out.y01_defier_b = finish(lo01d, hi01d);
  out.y00_defier_b = finish(lo00d, hi00d);

  // Effect intervals from differencing the clipped moment intervals; monotone
  // response and boundedness keep any standalone effect inside [0, k].
  auto effect = [&](const AssumedInterval& treated, const AssumedInterval& base) {
    AssumedInterval raw = make_interval(treated.lo - base.hi, treated.hi - base.lo,
                                        tags);
    return clip_interval(raw, in.k);
  };
  out.effect_a_joint = effect(out.y10_joint_a, out.y00_joint_a);
  out.effect_b_defier = effect(out.y01_defier_b, out.y00_defier_b);
  return out;
}

double laie_indirect_identified_part(const BoundInputs& in,
                                     const IndirectInputs& iv) {
  const double p_cc = require_p_cc(in);
  const ResolvedMarginals& ma = marginals_no_defier_a(in);
  const double net_defier_b = -in.shares.contrast_b;  // P(.,d) - P(.,j)
  return iv.beta_ab + ma.joint / p_cc * iv.ate_a_ref -
         net_defier_b / p_cc * iv.ate_b_ref;
}

AssumedInterval bound_laie_indirect(const BoundInputs& in, const IndirectInputs& iv,
                                    Interval p_j_b, const AuxMomentBounds* aux) {
  validate_inputs(in);
  const double p_cc = require_p_cc(in);
  const ResolvedMarginals& ma = marginals_no_defier_a(in);
  if (p_j_b.lo > p_j_b.hi || p_j_b.lo < 0.0)
    throw SchemaError("joint-complier share range for B must satisfy 0 <= lo <= hi");
  const double net_defier_b = -in.shares.contrast_b;
  if (net_defier_b + p_j_b.lo < -kShareTol)
    throw RestrictionError(
        "cross-defier share of B would be negative at the supplied "
        "joint-complier share");

  const double identified = laie_indirect_identified_part(in, iv);

  AssumptionSet tags = base_assumptions();
  tags.insert(AssumptionTag::NoCrossDefiersA);

  const Interval trivial{0.0, in.k};
  const bool p_zero = p_j_b.lo == 0.0 && p_j_b.hi == 0.0;
  Interval effect_a = trivial;
  Interval effect_b = trivial;
  if (aux && p_zero) {
    // The auxiliary intervals are derived under no joint compliers for B, so
    // they apply only at p_j_b = 0.
    effect_a = {aux->effect_a_joint.lo, aux->effect_a_joint.hi};
    effect_b = {aux->effect_b_defier.lo, aux->effect_b_defier.hi};
    tags = tags.united(aux->effect_a_joint.assumptions);
  } else if (p_zero) {
    tags.insert(AssumptionTag::NoJointCompliersB);
  }

  // The bound is the hull over the endpoints of the p_j_b range; each
  // unidentified term is linear in p_j_b with a sign-stable coefficient.
  auto at = [&](double p) {
    Interval total{identified, identified};
    total = total + scaled(-ma.joint / p_cc, effect_a);
    total = total + scaled((net_defier_b + p) / p_cc, effect_b);
    total = total + scaled(-p / p_cc, trivial);
    return total;
  };
  const Interval lo_end = at(p_j_b.lo);
  const Interval hi_end = at(p_j_b.hi);
  return make_interval(std::min(lo_end.lo, hi_end.lo),
                       std::max(lo_end.hi, hi_end.hi), tags);
}

AssumedInterval bound_laie_indirect(const BoundInputs& in, const IndirectInputs& iv,
                                    double p_j_b, const AuxMomentBounds* aux) {
  return bound_laie_indirect(in, iv, Interval{p_j_b, p_j_b}, aux);
}

}  // namespace factiv
