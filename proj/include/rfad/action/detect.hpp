#pragma once

#include <vector>

#include "rfad/action/features.hpp"
#include "rfad/core/types.hpp"
#include "rfad/nn/graph.hpp"
#include "rfad/nn/params.hpp"

namespace rfad::action {

enum class SlotKind { kSingle, kPair };

// One detection candidate stream: a person, or an ascending-id pair whose
// features are fused by a learned projection.
struct CandidateSlot {
    SlotKind kind = SlotKind::kSingle;
    std::vector<int> participants;  // 1 id, or 2 distinct ids ascending
    nn::Var feat;                   // (c_feat, t_f)
};

// Candidate time window in frames, scored before classification.
struct TemporalProposal {
    double start = 0.0, end = 0.0;  // [start, end), clipped to the sequence
    double score = 0.0;             // anchor objectness, logistic
    int t_index = 0;                // feature timestep of the emitting anchor
    int anchor = 0;                 // index into cfg.anchor_frames
};

struct Detection {
    ActionSegment segment;
    SlotKind kind = SlotKind::kSingle;
};

// N single slots plus C(N,2) pair slots (ascending-id concat + projection).
// persons: (person_id, features (c_feat, t_f)). With cfg.single_slot, all
// features max-pool into one slot listing every participant.
std::vector<CandidateSlot> build_slots(const nn::ParamStore& ps,
                                       const std::vector<std::pair<int, nn::Var>>& persons,
                                       const ActionConfig& cfg);

// Per-timestep anchor scores and (center, length) offsets: (3A, t_f) with
// channel layout [3a]=objectness logit, [3a+1]=d_center, [3a+2]=d_length.
nn::Var proposal_head(const nn::ParamStore& ps, const nn::Var& feat, const ActionConfig& cfg);

// Anchor window in frames, centered at the timestep's frame, clipped to
// [0, t_frames].
struct AnchorWindow {
    double start = 0.0, end = 0.0;
    double center() const { return 0.5 * (start + end); }
    double len() const { return end - start; }
};
AnchorWindow anchor_window(const ActionConfig& cfg, int t_index, int anchor, int t_frames);

double window_iou(double s0, double e0, double s1, double e1);

// Score + decode every anchor, 1D NMS at cfg.nms_iou, keep cfg.top_k.
std::vector<TemporalProposal> decode_proposals(const nn::Tensor& head, const ActionConfig& cfg,
                                               int t_frames);

// Crop the slot features to [start, end) frames, resize to cfg.crop_len, and
// emit actionness logit (1,1), class logits (1, vocab), boundary offsets (1,2).
struct RefineVars {
    nn::Var actionness;
    nn::Var class_logits;
    nn::Var boundary;
};
RefineVars classify_refine(const nn::ParamStore& ps, const CandidateSlot& slot,
                           double start_frame, double end_frame, const ActionConfig& cfg);

// Boundary offsets applied to a proposal window, clipped to [0, t_frames].
AnchorWindow refine_window(double start, double end, double d_center, double d_length,
                           int t_frames);

// Full head over one window: proposals per slot, refinement, actionness
// threshold, class argmax over the slot kind's vocabulary. Scores are
// actionness times class probability. With cfg.single_slot, each surviving
// detection is replicated once per participant (identity is unresolved).
std::vector<Detection> detect_window(const nn::ParamStore& ps,
                                     const std::vector<CandidateSlot>& slots,
                                     const ActionConfig& cfg, int t_frames);

// Remove single-person detections that a linked, overlapping (IoU >= 0.5)
// interaction detection covering that participant explains. Result sorted by
// descending score. Links referencing unknown classes are errors.
std::vector<Detection> priority_resolve(std::vector<Detection> dets,
                                        const std::vector<ClassDef>& classes,
                                        const std::vector<ClassLink>& links);

}  // namespace rfad::action
