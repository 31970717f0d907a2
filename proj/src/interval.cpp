#include "factiv/interval.hpp"

#include <sstream>

namespace factiv {

std::string to_string(AssumptionTag tag) {
  switch (tag) {
    case AssumptionTag::BoundedOutcomes: return "BOUNDED_OUTCOMES";
    case AssumptionTag::MonotoneResponse: return "MONOTONE_RESPONSE";
    case AssumptionTag::OneSided: return "ONE_SIDED";
    case AssumptionTag::NoCrossDefiersA: return "NO_CROSS_DEFIERS_A";
    case AssumptionTag::NoJointCompliersB: return "NO_JOINT_COMPLIERS_B";
    case AssumptionTag::Y11GeY00: return "Y11_GE_Y00";
    case AssumptionTag::Y11GeMax: return "Y11_GE_MAX";
  }
  return "?";
}

std::vector<AssumptionTag> AssumptionSet::tags() const {
  std::vector<AssumptionTag> out;
  for (unsigned i = 0; i < 7; ++i) {
    auto t = static_cast<AssumptionTag>(i);
    if (contains(t)) out.push_back(t);
  }
  return out;
}

std::string AssumptionSet::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (auto t : tags()) {
    if (!first) os << '+';
    os << factiv::to_string(t);
    first = false;
  }
  return first ? "(none)" : os.str();
}

AssumedInterval make_interval(double lo, double hi, AssumptionSet assumptions,
                              bool clipped) {
  if (!(lo <= hi)) {
    std::ostringstream os;
    os << "empty identified set [" << lo << ", " << hi
       << "] under " << assumptions.to_string()
       << "; the maintained assumptions contradict the data";
    throw IdentificationError(os.str());
  }
  return AssumedInterval{lo, hi, assumptions, clipped};
}

AssumedInterval clip_interval(const AssumedInterval& iv, double k) {
  const double lo = std::max(iv.lo, 0.0);
  const double hi = std::min(iv.hi, k);
  const bool changed = lo != iv.lo || hi != iv.hi;
  AssumedInterval out = make_interval(lo, hi, iv.assumptions, iv.clipped || changed);
  return out;
}

std::optional<AssumedInterval> intersect(const AssumedInterval& a,
                                         const AssumedInterval& b) {
  const double lo = std::max(a.lo, b.lo);
  const double hi = std::min(a.hi, b.hi);
  if (lo > hi) return std::nullopt;
  AssumedInterval out;
  out.lo = lo;
  out.hi = hi;
  out.assumptions = a.assumptions.united(b.assumptions);
  out.clipped = a.clipped || b.clipped;
  return out;
}

}  // namespace factiv
