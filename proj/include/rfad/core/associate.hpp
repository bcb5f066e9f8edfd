#pragma once

#include <vector>

#include "rfad/core/types.hpp"

namespace rfad {

// Greedy nearest-neighbor track association. Per frame, (open track, detection)
// pairs within gate_dist are taken in ascending torso-centroid distance; each
// side is used at most once. Unmatched detections open new tracks with
// sequential ids; tracks idle for more than max_gap frames stop accepting.
// Deterministic: ties break on (track id, detection order).
std::vector<Track> associate_frames(const std::vector<SkeletonFrame>& frames, double gate_dist,
                                    int max_gap);

}  // namespace rfad
