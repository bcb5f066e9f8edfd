#pragma once

#include <string>
#include <vector>

#include "rfad/core/types.hpp"

namespace rfad {

struct ClassAp {
    double theta = 0.0;
    int class_id = 0;
    double ap = 0.0;
    int gt_count = 0;
    int pred_count = 0;
};

struct EvalReport {
    std::vector<double> thetas;
    std::vector<ClassAp> per_class;  // one entry per (theta, class present in GT)
    std::vector<double> map_at;      // parallel to thetas
    bool has_joint_error = false;
    double mean_joint_error_cm = 0.0;
    int gt_total = 0;
    int pred_total = 0;
};

// Detection AP for one class at IoU threshold theta. Predictions are ranked by
// descending score (ties: earlier start frame first, then input order) and
// greedily matched to the unmatched GT with the same participant set and the
// highest IoU >= theta (ties: earliest GT in input order). AP is the exact
// area under the all-point interpolated precision-recall curve.
double average_precision(const std::vector<ActionSegment>& preds,
                         const std::vector<ActionSegment>& gts, double theta, int class_id);

// Per-class AP then unweighted mean over classes present in GT.
EvalReport mean_map(const std::vector<ActionSegment>& preds, const std::vector<ActionSegment>& gts,
                    const std::vector<double>& thetas);

// Persons matched per frame by torso-centroid distance (greedy, gated); mean
// Euclidean joint distance over matched persons, in centimeters. Returns
// false if nothing matched.
bool mean_joint_error_cm(const std::vector<Track>& pred, const std::vector<Track>& gt,
                         double gate_dist, double* out_cm);

std::string report_text(const EvalReport& r);   // one `name value` per line
std::string report_table(const EvalReport& r);  // TSV for plotting

}  // namespace rfad
