#pragma once

#include <vector>

#include "rfad/core/types.hpp"
#include "rfad/nn/ops.hpp"
#include "rfad/nn/params.hpp"

namespace rfad::skelgen {

// Skeleton generator: dual-view spatio-temporal encoder, box proposals on the
// horizontal view, per-proposal 3D pose readout with a soft-argmax head.
struct SkelgenConfig {
    int window = 30;            // heatmap frames per input window
    SceneGrids grids;           // shared calibration of both views
    int roi = 4;                // spatial crop size for pose estimation
    int depth_bins = 16;        // z bins in each joint heat volume
    double tau = 1.0;           // soft-argmax temperature
    double anchor_cells = 12.0; // person-sized anchor edge, horizontal cells
    double nms_iou = 0.5;
    double score_thresh = 0.5;
    int max_per_step = 2;       // proposals kept per feature timestep

    static constexpr int kTemporalStride = 4;  // product of block strides
    static constexpr int kSpatialStride = 4;

    int t_feat() const;   // temporal length after the four blocks
    int feat_h() const;   // horizontal-view latent rows
    int feat_w() const;   // latent cols (both views)
    int feat_vh() const;  // vertical-view latent rows
    // input frame at the center of feature timestep t
    int step_frame(int t) const { return t * kTemporalStride; }
};

struct FeatureMaps {
    nn::Var hor;  // (C, T', H', W')
    nn::Var ver;  // (C, T', H'', W')
};

// Box in continuous horizontal-grid cell coordinates (integers at centers).
struct RegionProposal {
    int t_index = 0;
    double cx = 0.0, cy = 0.0, w = 0.0, h = 0.0;
    double score = 0.0;

    double x0() const { return cx - w / 2.0; }
    double x1() const { return cx + w / 2.0; }
    double y0() const { return cy - h / 2.0; }
    double y1() const { return cy + h / 2.0; }
};

struct PoseOutput {
    nn::Var coords;  // (N_j, 3) meters, columns (x, y, z)
    nn::Var conf;    // (N_j) in (0,1]
};

// Registers all generator parameters under the "skelgen." prefix.
void init_skeleton_params(nn::ParamStore& ps, const SkelgenConfig& cfg, uint64_t seed);

// Dual conv stacks; throws on a window whose grids mismatch the config.
FeatureMaps feature_net(const nn::Var& hor_window, const nn::Var& ver_window,
                        const nn::ParamStore& ps, const SkelgenConfig& cfg);

// Proposal head on the horizontal features: per cell, objectness logit plus
// (dx, dy, dw, dh) offsets from the anchor. Shape (5, T', H', W').
nn::Var rpn_forward(const FeatureMaps& fm, const nn::ParamStore& ps);

// Decode + clip + per-timestep NMS + per-timestep top-K; result sorted by
// descending score (deterministic tie-breaks).
std::vector<RegionProposal> propose_regions(const nn::Tensor& rpn_out, const SkelgenConfig& cfg,
                                            double nms_iou, double score_thresh);

double box_iou(const RegionProposal& a, const RegionProposal& b);

// Expected cell coordinate of the power-normalized volume: p_i proportional
// to v_i^(1/tau). Returns (3,) as (d, h, w); throws on negative entries,
// an all-zero volume, or tau <= 0. Exactly reproduces a one-hot argmax for
// any tau, and converges to the discrete argmax as tau -> 0.
nn::Var soft_argmax(const nn::Var& volume, double tau);

// Crop both views to the proposal, fuse, and emit per-joint heat volumes;
// coordinates are read out with soft_argmax and mapped to meters with the
// grid calibration (box treated as a constant). Throws on degenerate boxes.
PoseOutput estimate_pose(const FeatureMaps& fm, const RegionProposal& rp,
                         const nn::ParamStore& ps, const SkelgenConfig& cfg);

// Stacks per-timestep pose outputs into the (4, frames, N_j) channel layout
// (x, y, z, confidence), linearly resampled from step_frames onto 0..frames-1.
nn::Var pose_window(const std::vector<PoseOutput>& steps, const std::vector<double>& step_frames,
                    int frames);

}  // namespace rfad::skelgen
