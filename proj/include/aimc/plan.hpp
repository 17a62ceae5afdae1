/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <stdexcept>
#include <vector>

/**
 * Pulse-routing plans.
 *
 * Each polarity of a unit cell holds one device (single-device mode) or two
 * (two-device mode, slots a and b). Before programming starts, the target
 * conductance of each polarity is split into a role assignment: exactly one
 * slot is "programmable" (iterated on by the engines) and the other, if
 * present, gets a one-time fixed action (driven to zero or to its SET cap).
 * The plan is computed once from the targets and the per-device caps, so both
 * engines route pulses identically.
 */

namespace aimc {

enum class FixedAction {
  kNone,   // no companion slot, or companion untouched
  kReset,  // drive the companion slot to zero once
  kSet,    // drive the companion slot to its SET cap once
};

struct PolarityPlan {
  int prog_slot = 0;             // 0 = slot a, 1 = slot b
  FixedAction fixed_action = FixedAction::kNone;
  double prog_target_us = 0.0;   // conductance target for the programmable slot
  bool attainable = true;        // false when the target exceeds what the slots can hold
};

struct CellPlan {
  PolarityPlan pos;
  PolarityPlan neg;
};

/// Single-device mode: slot a carries the whole target.
inline PolarityPlan plan_single(double target_us, double cap_a) {
  if (!(target_us >= 0.0)) throw std::invalid_argument("plan_single: negative target");
  PolarityPlan p;
  p.prog_slot = 0;
  p.fixed_action = FixedAction::kNone;
  p.prog_target_us = target_us;
  p.attainable = target_us <= cap_a;
  return p;
}

/**
 * Two-device mode. The slot with the larger cap (slot a on ties) is "hi".
 *
 *  - target fits in hi alone: program hi, reset the other slot;
 *  - target exceeds both caps combined: saturate both, mark unattainable;
 *  - otherwise: set hi to its cap and program the residual into the other slot.
 */
inline PolarityPlan plan_pair(double target_us, double cap_a, double cap_b) {
  if (!(target_us >= 0.0)) throw std::invalid_argument("plan_pair: negative target");
  const int hi = cap_b > cap_a ? 1 : 0;
  const int lo = 1 - hi;
  const double cap_hi = hi == 0 ? cap_a : cap_b;
  const double cap_lo = hi == 0 ? cap_b : cap_a;
  PolarityPlan p;
  if (target_us <= cap_hi) {
    p.prog_slot = hi;
    p.fixed_action = FixedAction::kReset;
    p.prog_target_us = target_us;
    p.attainable = true;
  } else if (target_us > cap_hi + cap_lo) {
    p.prog_slot = lo;
    p.fixed_action = FixedAction::kSet;
    p.prog_target_us = cap_lo;
    p.attainable = false;
  } else {
    p.prog_slot = lo;
    p.fixed_action = FixedAction::kSet;
    p.prog_target_us = target_us - cap_hi;
    p.attainable = true;
  }
  return p;
}

/// Role assignment for every cell of an array, row-major.
struct ProgrammingPlan {
  int rows = 0;
  int cols = 0;
  std::vector<CellPlan> cells;
  int unattainable = 0;  // polarity targets that exceed the available caps

  const CellPlan& at(int i, int j) const { return cells[static_cast<size_t>(i) * cols + j]; }
  CellPlan& at(int i, int j) { return cells[static_cast<size_t>(i) * cols + j]; }
};

}  // namespace aimc
