#include "rfad/core/segments.hpp"

#include <algorithm>
#include <stdexcept>

namespace rfad {

double interval_iou(int s0, int e0, int s1, int e1) {
    if (s0 >= e0 || s1 >= e1) throw std::invalid_argument("interval_iou: empty interval");
    const int inter = std::min(e0, e1) - std::max(s0, s1);
    if (inter <= 0) return 0.0;
    const int uni = (e0 - s0) + (e1 - s1) - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double segment_iou(const ActionSegment& a, const ActionSegment& b) {
    return interval_iou(a.start_frame, a.end_frame, b.start_frame, b.end_frame);
}

bool same_participants(const ActionSegment& a, const ActionSegment& b) {
    return a.participants == b.participants;
}

}  // namespace rfad
