#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rfad/action/detect.hpp"
#include "rfad/action/features.hpp"
#include "rfad/core/types.hpp"
#include "rfad/nn/optim.hpp"
#include "rfad/nn/params.hpp"
#include "rfad/sim/render.hpp"
#include "rfad/skelgen/skelgen.hpp"

namespace rfad::train {

struct TrainConfig {
    skelgen::SkelgenConfig skel;
    action::ActionConfig act;
    int window = 30;  // frames per training window (must equal skel.window)
    double lr = 1e-2;
    double momentum = 0.9;
    int64_t total_steps = 2000;
    double lambda_det = 1.0;  // detection-loss weight on rf batches
    int ratio = 1;            // rf batches per skeleton batch
    enum class Mode { kEndToEnd, kSeparate } mode = Mode::kEndToEnd;
    uint64_t seed = 1;
};

// All learnable state. Parameters are partitioned by name prefix:
// "skelgen." (skeleton generator) and "action." (action recognizer);
// construction fails if any parameter is outside both partitions.
struct ModelState {
    nn::ParamStore params;
    nn::SgdOptimizer opt;
    int64_t step = 0;

    explicit ModelState(const TrainConfig& cfg);
};

bool in_skeleton_partition(const std::string& name);
bool in_action_partition(const std::string& name);
void check_partitions(const nn::ParamStore& ps);  // throws std::logic_error

// One scenario's worth of training material. `heat` may be empty for
// skeleton-modality datasets.
struct ScenarioData {
    sim::HeatmapStream heat;
    std::vector<SkeletonFrame> frames;    // dense ground truth
    std::vector<ActionSegment> segments;  // absolute frames
};

struct TrainBatch {
    enum class Kind { kRf, kSkeleton };
    Kind kind = Kind::kSkeleton;
    nn::Tensor hor, ver;                  // rf only: (1, T, rows, cols) windows
    std::vector<SkeletonFrame> gt_frames;  // exactly T frames, local indices
    std::vector<ActionSegment> segments;   // window-local, clipped
};

// Window [start, start+T) of a scenario as a batch; segments are clipped to
// the window and shifted to local coordinates.
TrainBatch make_rf_batch(const ScenarioData& sc, int start, const TrainConfig& cfg);
TrainBatch make_skeleton_batch(const ScenarioData& sc, int start, const TrainConfig& cfg);

// Axis-aligned joint bounding box in horizontal-grid cell coordinates,
// padded and clamped to a plausible person size.
struct GtBox {
    double cx = 0.0, cy = 0.0, w = 0.0, h = 0.0;
};
GtBox gt_box(const std::vector<Joint>& joints, const SceneGrids& grids);

// Teacher labels for the box-proposal head: objectness 1 at the feature cell
// nearest each person's box center; 0 where the cell is > 2 cells from every
// center and the anchor box IoU is < 0.3; other cells carry zero weight.
// Box offsets are regressed at positive cells only.
struct RpnTargets {
    nn::Tensor obj, obj_w;  // (1, T', H', W')
    nn::Tensor box, box_w;  // (4, T', H', W')
};
RpnTargets make_rpn_targets(const std::vector<SkeletonFrame>& gt_frames,
                            const skelgen::SkelgenConfig& scfg);
nn::Var loss_rpn(const nn::Var& rpn_out, const RpnTargets& t);

// Greedy centroid matching between predictions and ground truth, then
// smooth-L1 over matched joint coordinates in meters, averaged over matched
// persons and joints. Unmatched predictions carry no term here (the
// objectness loss covers them).
nn::Var loss_skeleton(const std::vector<skelgen::PoseOutput>& preds,
                      const std::vector<std::vector<Joint>>& gts);

// Label for one anchor window: positive at IoU >= 0.5 with some ground-truth
// segment (gt_index = best match), negative when the best IoU is < 0.3,
// ignored in between. Degenerate anchors (clipped below one frame) are absent.
struct AnchorLabel {
    int t_index = 0;
    int anchor = 0;
    int label = -1;     // 1 positive, 0 negative, -1 ignored
    int gt_index = -1;  // into slot_gt for positives
};
std::vector<AnchorLabel> label_anchors(const std::vector<ActionSegment>& slot_gt,
                                       const action::ActionConfig& acfg, int t_frames);

// Anchor windows are labeled by label_anchors against the ground-truth
// segments of the slot's participants. Sum of balanced objectness+actionness
// BCE, class cross-entropy on positives, and smooth-L1 (center, length)
// regression on positives, averaged over slots.
nn::Var loss_detection(const nn::ParamStore& ps, const std::vector<action::CandidateSlot>& slots,
                       const std::vector<ActionSegment>& gt, const action::ActionConfig& acfg,
                       int t_frames);

// Full differentiable rf pass: encoder, box teacher losses, teacher-forced
// poses, pose windows into the action head. In separate mode the action path
// sees detached poses.
struct RfForward {
    nn::Var loss_pose;
    nn::Var loss_rpn;
    nn::Var loss_det;
};
RfForward rf_forward(const nn::ParamStore& ps, const TrainBatch& batch, const TrainConfig& cfg);

// Detection loss over ground-truth skeleton windows (confidence 1).
nn::Var skeleton_forward(const nn::ParamStore& ps, const TrainBatch& batch,
                         const TrainConfig& cfg);

struct StepLosses {
    double total = 0.0;
    double skeleton = 0.0;   // pose + box-teacher losses (rf batches)
    double detection = 0.0;
};

// One optimizer update. rf batches: loss_skeleton-side + lambda*detection,
// applied to both partitions. Skeleton batches: detection loss only, applied
// only to the action partition (the skeleton partition is not offered to the
// optimizer at all, leaving it bitwise unchanged).
StepLosses multimodal_step(ModelState& st, const TrainBatch& batch, const TrainConfig& cfg);

// Deterministic interleave: `ratio` rf batches then one skeleton batch,
// repeated; rf-only when no skeleton data exists.
std::vector<TrainBatch::Kind> alternate_schedule(int ratio, int64_t steps, bool have_skeleton);

// Seeded training loop: windows are sampled uniformly per step from the
// scheduled modality's dataset. `on_step` (optional) observes progress.
void train_loop(ModelState& st, const std::vector<ScenarioData>& rf_data,
                const std::vector<ScenarioData>& skel_data, const TrainConfig& cfg,
                const std::function<void(int64_t, const StepLosses&)>& on_step = {});

}  // namespace rfad::train
