#pragma once

#include "rfad/sim/scenario.hpp"

namespace rfad::sim {

struct MotionResult {
    std::vector<SkeletonFrame> frames;      // one per frame in [0, duration)
    std::vector<ActionSegment> segments;    // ground truth, exactly the scripted intervals
};

// Deterministic keyframed motion for the built-in vocabulary plus seeded
// jitter. Validates scripts (bounds, known classes, interaction partners).
MotionResult synth_motion(const Scenario& sc);

}  // namespace rfad::sim
