#pragma once

#include <stdexcept>
#include <vector>

#include "synapse/random.hpp"

namespace synapse {

/// Synthetic focused-Kerr hysteresis trace: normalized signal against
/// an ascending field sweep. One step means the domain wall passed the
/// notch directly; a pin-then-depin event shows two steps.
struct KerrTrace {
    std::vector<double> field_axis_mT;
    std::vector<double> signal;  ///< total clean change normalized to 1
};

struct DetectionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// passed = 1: single smoothed step at notch_field. passed = 0: two
/// steps (notch then depin), each carrying at least 40% of the total
/// signal. Additive noise of the given amplitude on every sample.
KerrTrace synthesize_kerr_trace(int passed, double depin_field_mT,
                                double notch_field_mT, double noise_amplitude,
                                Rng& rng);

/// The measurement-chain detection rule: differentiate the signal,
/// find the peaks, and report pinned (0) only when two peaks exist
/// whose raw-signal steps both exceed 24% of the total change;
/// otherwise passed (1). Throws DetectionError on a flat or too-short
/// trace.
int detect_pinning(const KerrTrace& trace);

}  // namespace synapse
