#pragma once

#include <unordered_map>
#include <vector>

#include "rfad/action/detect.hpp"
#include "rfad/action/features.hpp"
#include "rfad/core/formats.hpp"
#include "rfad/core/types.hpp"
#include "rfad/nn/params.hpp"
#include "rfad/sim/render.hpp"
#include "rfad/skelgen/skelgen.hpp"

namespace rfad::pipeline {

// Knobs for full-stream inference: sliding heatmap windows feed the skeleton
// generator, per-step poses are associated into tracks, and per-window track
// crops feed the action detector.
struct PipelineConfig {
    skelgen::SkelgenConfig skel;
    action::ActionConfig act;
    int window = 30;               // frames per inference window
    int stride = 15;               // hop between window starts
    double dedupe_dist = 0.4;      // meters; same-frame duplicate pose radius
    double assoc_gate = 0.9;       // meters; track association gate
    int assoc_max_gap = 15;        // frames a track survives unobserved
    int min_track_len = 3;         // observations required to keep a track
    std::vector<ClassDef> classes;
    std::vector<ClassLink> links;
};

struct PredictResult {
    std::vector<SkeletonFrame> frames;      // predicted poses at observed frames
    std::vector<ActionSegment> detections;  // resolved, sorted by descending score
};

// Full inference over a heatmap stream: deterministic given parameters and
// input. Throws if the stream is shorter than one window.
PredictResult predict(const nn::ParamStore& ps, const sim::HeatmapStream& heat,
                      const PipelineConfig& cfg);

// Union overlapping detections that share class, participants, and kind;
// merged score is the max of the parts. Output is grouped deterministically;
// input order does not matter.
std::vector<action::Detection> merge_overlaps(std::vector<action::Detection> dets);

// Group frames into one track per person id (entries in frame order).
std::vector<Track> tracks_from_frames(const std::vector<SkeletonFrame>& frames);

// Greedy id mapping from predicted to reference persons by mean torso-centroid
// distance over co-visible frames. Predicted ids with no co-visible reference
// map to fresh ids past the reference range.
std::unordered_map<int, int> match_person_ids(const std::vector<SkeletonFrame>& pred,
                                              const std::vector<SkeletonFrame>& ref);

// Rewrite participant ids through the map (missing ids stay put); participant
// lists are re-sorted ascending.
void remap_participants(std::vector<ActionSegment>& segments,
                        const std::unordered_map<int, int>& id_map);

}  // namespace rfad::pipeline
