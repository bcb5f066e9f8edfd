#pragma once

#include <vector>

#include "rfad/core/types.hpp"

namespace rfad {

// Fixed-length windows over a track, stepped by stride from the track's first
// frame. Full windows are emitted while they fit; one trailing partial window
// (right-padded with zeros, confidence 0) covers the remainder. Gap frames
// inside the track span are also zero/confidence-0.
std::vector<SkeletonSequence> window_sequence(const Track& track, int T, int stride);

// Single dense window starting at an absolute frame (same padding rules).
SkeletonSequence track_window_at(const Track& track, int start_frame, int T);

}  // namespace rfad
