#pragma once

#include "rfad/core/types.hpp"

namespace rfad {

// IoU of half-open frame intervals [s0,e0) and [s1,e1).
double interval_iou(int s0, int e0, int s1, int e1);

double segment_iou(const ActionSegment& a, const ActionSegment& b);

// Same participant sets (order-insensitive; stored ascending anyway).
bool same_participants(const ActionSegment& a, const ActionSegment& b);

}  // namespace rfad
