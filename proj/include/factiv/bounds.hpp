#pragma once

#include <optional>

#include "factiv/identification.hpp"
#include "factiv/interval.hpp"

namespace factiv {

// Optional unit-level monotonicity restrictions that tighten the bounds.
// Under monotone response, y11_ge_max implies y11_ge_y00, and the
// implementation applies the implied tightening.
struct Strengthenings {
  bool y11_ge_y00 = false;  // joint takeup never hurts relative to no treatment
  bool y11_ge_max = false;  // joint takeup weakly beats each standalone arm
};

struct BoundInputs {
  TypeShares shares;
  IdentifiedMoments moments;
  double k = 100.0;  // outcome upper bound; the lower bound is normalized to 0
  Strengthenings strengthen;
  // Replace uninformative component bounds by the trivial [0, k] ones before
  // combining them. Disable for diagnostics only.
  bool clip_components = true;
};

// Bounds on the mean untreated outcome among double compliers. Unclipped by
// default so that an upper bound above k is visible; pass clip to apply the
// trivial [0, k] replacement.
AssumedInterval bound_y00_cc(const BoundInputs& in, bool clip = false);

// Bounds on the joint effect among double compliers.
AssumedInterval bound_joint_cc(const BoundInputs& in);

struct LaieDirectBounds {
  AssumedInterval y00_cc;
  AssumedInterval y10_cc;
  AssumedInterval y01_cc;
  AssumedInterval laie;
};

// Direct bounds on the interaction effect among double compliers. Requires
// type shares resolved under no cross-defiers for A and no joint compliers
// for B.
LaieDirectBounds bound_laie_direct(const BoundInputs& in);

struct AuxMomentBounds {
  AssumedInterval y00_joint_a;   // E[Y(00) | A joint complier]
  AssumedInterval y10_joint_a;   // E[Y(10) | A joint complier]
  AssumedInterval y01_defier_b;  // E[Y(01) | B cross-defier]
  AssumedInterval y00_defier_b;  // E[Y(00) | B cross-defier]
  AssumedInterval effect_a_joint;   // effect of A alone among its joint compliers
  AssumedInterval effect_b_defier;  // effect of B alone among its cross-defiers
};

// Bounds the conditional means entering the unidentified heterogeneity terms,
// under no cross-defiers for A and no joint compliers for B. Throws
// IdentificationError when the joint-complier share of A or the cross-defier
// share of B vanishes.
AuxMomentBounds bound_aux_moments(const BoundInputs& in);

// Point estimates feeding the indirect decomposition of the interaction
// coefficient. The reference effects are the standalone-arm effects among the
// own-instrument responders (the slope coefficients of the saturated IV fit).
struct IndirectInputs {
  double beta_ab = 0.0;
  double ate_a_ref = 0.0;
  double ate_b_ref = 0.0;
};

// Indirect bound on the interaction effect among double compliers: the
// identified part of the decomposition plus interval-valued heterogeneity
// terms. `p_j_b` is the unidentified joint-complier share of B, supplied as a
// point or a range; `aux` intervals are used only when p_j_b is exactly zero
// (they are derived under that restriction), otherwise the trivial [0, k]
// intervals apply.
AssumedInterval bound_laie_indirect(const BoundInputs& in, const IndirectInputs& iv,
                                    Interval p_j_b,
                                    const AuxMomentBounds* aux = nullptr);
AssumedInterval bound_laie_indirect(const BoundInputs& in, const IndirectInputs& iv,
                                    double p_j_b = 0.0,
                                    const AuxMomentBounds* aux = nullptr);

// Identified part of the indirect decomposition (independent of p_j_b).
double laie_indirect_identified_part(const BoundInputs& in, const IndirectInputs& iv);

}  // namespace factiv
