#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "factiv/errors.hpp"

namespace factiv {

// Auxiliary assumptions an interval can be conditioned on.
enum class AssumptionTag : std::uint8_t {
  BoundedOutcomes,     // potential outcomes lie in [0, K]
  MonotoneResponse,    // Y(10) >= Y(00) and Y(01) >= Y(00) unit-wise
  OneSided,            // no treatment access without the own instrument
  NoCrossDefiersA,
  NoJointCompliersB,
  Y11GeY00,            // Y(11) >= Y(00) unit-wise
  Y11GeMax,            // Y(11) >= max(Y(10), Y(01)) unit-wise
};

std::string to_string(AssumptionTag tag);

class AssumptionSet {
 public:
  AssumptionSet() = default;
  AssumptionSet(std::initializer_list<AssumptionTag> tags) {
    for (auto t : tags) insert(t);
  }
  void insert(AssumptionTag t) { bits_ |= bit(t); }
  bool contains(AssumptionTag t) const { return (bits_ & bit(t)) != 0; }
  AssumptionSet united(const AssumptionSet& other) const {
    AssumptionSet s;
    s.bits_ = bits_ | other.bits_;
    return s;
  }
  std::vector<AssumptionTag> tags() const;
  std::string to_string() const;

 private:
  static std::uint8_t bit(AssumptionTag t) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(t));
  }
  std::uint8_t bits_ = 0;
};

// A numeric interval together with the assumption set under which it is
// valid. `clipped` records whether the trivial [0, K] clipping was applied.
struct AssumedInterval {
  double lo = 0.0;
  double hi = 0.0;
  AssumptionSet assumptions;
  bool clipped = false;

  double width() const { return hi - lo; }
  bool contains(double x, double tol = 0.0) const {
    return x >= lo - tol && x <= hi + tol;
  }
};

// Constructs the interval, rejecting crossed endpoints: an empty identified
// set signals that the maintained assumptions contradict the data.
AssumedInterval make_interval(double lo, double hi, AssumptionSet assumptions,
                              bool clipped = false);

// Clips to [0, k]; throws IdentificationError if the result is empty.
AssumedInterval clip_interval(const AssumedInterval& iv, double k);

std::optional<AssumedInterval> intersect(const AssumedInterval& a,
                                         const AssumedInterval& b);

// Endpoint arithmetic for linear combinations a*[lo,hi] + ...
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

inline Interval operator+(Interval x, Interval y) {
  return {x.lo + y.lo, x.hi + y.hi};
}

inline Interval scaled(double a, Interval x) {
  return a >= 0.0 ? Interval{a * x.lo, a * x.hi} : Interval{a * x.hi, a * x.lo};
}

}  // namespace factiv
