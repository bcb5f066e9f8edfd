#include "rfad/core/window.hpp"

#include <stdexcept>

namespace rfad {

SkeletonSequence track_window_at(const Track& track, int start_frame, int T) {
    const int nj = track.entries.empty() ? kNumJoints
                                         : static_cast<int>(track.entries.front().joints.size());
    SkeletonSequence seq;
    seq.person_id = track.person_id;
    seq.start_frame = start_frame;
    seq.values = nn::Tensor({4, T, nj});
    for (const auto& e : track.entries) {
        const int t = e.frame_index - start_frame;
        if (t < 0 || t >= T) continue;
        for (int j = 0; j < nj; ++j) {
            const Joint& jt = e.joints[static_cast<size_t>(j)];
            seq.values.at({0, t, j}) = jt.x;
            seq.values.at({1, t, j}) = jt.y;
            seq.values.at({2, t, j}) = jt.z;
            seq.values.at({3, t, j}) = jt.confidence;
        }
    }
    return seq;
}

std::vector<SkeletonSequence> window_sequence(const Track& track, int T, int stride) {
    if (T < 1 || stride < 1) throw std::invalid_argument("window_sequence: T and stride must be >= 1");
    std::vector<SkeletonSequence> out;
    if (track.entries.empty()) return out;
    const int first = track.first_frame();
    const int len = track.last_frame() - first + 1;
    for (int s = 0;; s += stride) {
        if (s + T <= len) {
            out.push_back(track_window_at(track, first + s, T));
        } else if (s < len) {
            out.push_back(track_window_at(track, first + s, T));  // trailing partial, zero-padded
            break;
        } else {
            break;
        }
    }
    return out;
}

}  // namespace rfad
