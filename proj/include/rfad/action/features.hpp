#pragma once

#include <cstdint>
#include <vector>

#include "rfad/core/formats.hpp"
#include "rfad/nn/graph.hpp"
#include "rfad/nn/params.hpp"

namespace rfad::action {

// Shared configuration of the action recognizer: the two-stream skeleton
// feature extractor (with gate + temporal attention) and the detection head.
// All of its parameters live under the "action." prefix in the ParamStore.
struct ActionConfig {
    int n_joints = 14;
    int in_ch = 4;     // x, y, z, confidence channels
    int c_point = 16;  // point-level conv width
    int c_feat = 32;   // per-stream latent width; also the attention width
    int heads = 4;
    bool attention = true;  // false: mask forced open, no self-attention

    // Detection head.
    std::vector<int> single_classes;  // class ids scored by single-person slots
    std::vector<int> pair_classes;    // class ids scored by pair slots
    std::vector<int> anchor_frames{16, 32, 64};
    int top_k = 20;
    double nms_iou = 0.7;
    int crop_len = 8;        // proposal crops resized to this many steps
    int refine_hidden = 64;
    double actionness_thresh = 0.5;
    bool single_slot = false;  // ablation: max-pool all persons into one slot

    // One feature timestep per two frames (temporal stride of the point conv).
    static constexpr int kTemporalStride = 2;
    int feat_steps(int t_frames) const { return (t_frames - 1) / kTemporalStride + 1; }
    // Continuous feature-axis coordinate of a frame index.
    static double frame_to_feat(double frame) { return frame / kTemporalStride; }
};

// Default config with class vocabularies split from a ClassDef list.
ActionConfig make_action_config(const std::vector<ClassDef>& classes);

// Latents of the two streams, each (c_feat, t_f, n_joints).
struct StreamFeatures {
    nn::Var f_s;  // over raw keypoints
    nn::Var f_t;  // over frame differences
};

// Registers every "action." parameter (both streams, gate, attention,
// detection head) with seeded init.
void init_action_params(nn::ParamStore& ps, const ActionConfig& cfg, uint64_t seed);

// First difference along the frame axis, zero-prepended so length is kept.
// seq (C, T, J) -> (C, T, J); the confidence channel is differenced too.
nn::Var frame_difference(const nn::Var& seq);

// seq (in_ch, T, n_joints) -> (c_feat, t_f, n_joints): point-level convs over
// (channel, time) per joint, then a joints<->channels transpose for the
// co-occurrence conv, then transpose back.
nn::Var spatial_stream(const nn::ParamStore& ps, const nn::Var& seq, const ActionConfig& cfg);

// Same architecture (own weights) applied to frame_difference(seq).
nn::Var temporal_stream(const nn::ParamStore& ps, const nn::Var& seq, const ActionConfig& cfg);

StreamFeatures stream_features(const nn::ParamStore& ps, const nn::Var& seq,
                               const ActionConfig& cfg);

// Gate = logistic(conv1x1(concat(f_s, f_t), w_m) + b_m), one value per
// (timestep, joint), multiplied onto the channel-concatenated features.
// Returns the masked concatenation (2*c_feat, t_f, n_joints).
nn::Var attention_mask(const StreamFeatures& f, const nn::Var& w_m, const nn::Var& b_m);

// Intermediates exposed for inspection/tests.
struct AttentionTrace {
    std::vector<nn::Var> head_weights;  // per head, (t_f, t_f), rows sum to 1
    nn::Var pre_residual;               // attention output before the residual add
};

// Scaled dot-product multi-headed self-attention over timesteps with a
// residual connection. x (c, t_f) -> (c, t_f); heads must divide c.
nn::Var temporal_self_attention(const nn::ParamStore& ps, const nn::Var& x,
                                const ActionConfig& cfg, AttentionTrace* trace = nullptr);

// Full per-person path: streams -> gate (or plain concat when attention is
// off) -> 1x1 fusion -> max over joints -> self-attention (skipped when off).
// seq (in_ch, T, n_joints) -> (c_feat, t_f).
nn::Var person_features(const nn::ParamStore& ps, const nn::Var& seq, const ActionConfig& cfg);

}  // namespace rfad::action
