#include "rfad/train/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "rfad/nn/ops.hpp"

namespace rfad::train {

using nn::Tensor;
using nn::Var;

namespace {

Var add_all(const std::vector<Var>& xs) {
    if (xs.empty()) return nn::constant_scalar(0.0);
    Var s = xs[0];
    for (size_t i = 1; i < xs.size(); ++i) s = nn::add(s, xs[i]);
    return s;
}

}  // namespace

ModelState::ModelState(const TrainConfig& cfg)
    : opt(nn::SgdConfig{cfg.lr, cfg.momentum, cfg.total_steps}) {
    if (cfg.window != cfg.skel.window)
        throw std::invalid_argument("ModelState: window must match the generator window");
    skelgen::init_skeleton_params(params, cfg.skel, cfg.seed);
    action::init_action_params(params, cfg.act, cfg.seed ^ 0x517cc1b727220a95ULL);
    check_partitions(params);
}

bool in_skeleton_partition(const std::string& name) { return name.rfind("skelgen.", 0) == 0; }
bool in_action_partition(const std::string& name) { return name.rfind("action.", 0) == 0; }

void check_partitions(const nn::ParamStore& ps) {
    for (const auto& n : ps.names())
        if (!in_skeleton_partition(n) && !in_action_partition(n))
            throw std::logic_error("parameter outside both partitions: " + n);
}

TrainBatch make_skeleton_batch(const ScenarioData& sc, int start, const TrainConfig& cfg) {
    const int T = cfg.window;
    if (start < 0 || start + T > static_cast<int>(sc.frames.size()))
        throw std::invalid_argument("make_skeleton_batch: window out of range");
    TrainBatch b;
    b.kind = TrainBatch::Kind::kSkeleton;
    b.gt_frames.reserve(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) {
        SkeletonFrame f = sc.frames[static_cast<size_t>(start + t)];
        f.frame_index = t;
        b.gt_frames.push_back(std::move(f));
    }
    for (const auto& seg : sc.segments) {
        const int s = std::max(seg.start_frame - start, 0);
        const int e = std::min(seg.end_frame - start, T);
        if (e - s < 1) continue;
        ActionSegment local = seg;
        local.start_frame = s;
        local.end_frame = e;
        b.segments.push_back(local);
    }
    return b;
}

TrainBatch make_rf_batch(const ScenarioData& sc, int start, const TrainConfig& cfg) {
    TrainBatch b = make_skeleton_batch(sc, start, cfg);
    b.kind = TrainBatch::Kind::kRf;
    const int T = cfg.window;
    if (start + T > static_cast<int>(sc.heat.frames.size()))
        throw std::invalid_argument("make_rf_batch: heatmap window out of range");
    const Tensor& h0 = sc.heat.frames[static_cast<size_t>(start)].hor;
    const Tensor& v0 = sc.heat.frames[static_cast<size_t>(start)].ver;
    b.hor = Tensor({1, T, h0.dim(0), h0.dim(1)});
    b.ver = Tensor({1, T, v0.dim(0), v0.dim(1)});
    for (int t = 0; t < T; ++t) {
        const auto& fr = sc.heat.frames[static_cast<size_t>(start + t)];
        std::copy(fr.hor.vec().begin(), fr.hor.vec().end(),
                  b.hor.data() + static_cast<int64_t>(t) * h0.size());
        std::copy(fr.ver.vec().begin(), fr.ver.vec().end(),
                  b.ver.data() + static_cast<int64_t>(t) * v0.size());
    }
    return b;
}

GtBox gt_box(const std::vector<Joint>& joints, const SceneGrids& grids) {
    if (joints.empty()) throw std::invalid_argument("gt_box: no joints");
    double umin = 1e30, umax = -1e30, vmin = 1e30, vmax = -1e30;
    for (const auto& j : joints) {
        const double u = grids.x.meters_to_cell(j.x);
        const double v = grids.y.meters_to_cell(j.y);
        umin = std::min(umin, u), umax = std::max(umax, u);
        vmin = std::min(vmin, v), vmax = std::max(vmax, v);
    }
    const double pad = 2.0;
    GtBox box;
    box.w = std::clamp(umax - umin + 2.0 * pad, 6.0, 24.0);
    box.h = std::clamp(vmax - vmin + 2.0 * pad, 6.0, 24.0);
    box.cx = std::clamp(0.5 * (umin + umax), 0.0, grids.x.cells - 1.0);
    box.cy = std::clamp(0.5 * (vmin + vmax), 0.0, grids.y.cells - 1.0);
    return box;
}

RpnTargets make_rpn_targets(const std::vector<SkeletonFrame>& gt_frames,
                            const skelgen::SkelgenConfig& scfg) {
    const int T = scfg.t_feat(), H = scfg.feat_h(), W = scfg.feat_w();
    const int stride = skelgen::SkelgenConfig::kSpatialStride;
    const double A = scfg.anchor_cells;
    RpnTargets t;
    t.obj = Tensor({1, T, H, W});
    t.obj_w = Tensor({1, T, H, W});
    t.box = Tensor({4, T, H, W});
    t.box_w = Tensor({4, T, H, W});
    const int64_t plane = static_cast<int64_t>(T) * H * W;

    int64_t npos = 0, nneg = 0;
    std::vector<int64_t> pos_cells, neg_cells;
    for (int ti = 0; ti < T; ++ti) {
        const int f = scfg.step_frame(ti);
        if (f >= static_cast<int>(gt_frames.size()))
            throw std::invalid_argument("make_rpn_targets: window too short");
        std::vector<GtBox> boxes;
        for (const auto& p : gt_frames[static_cast<size_t>(f)].persons)
            boxes.push_back(gt_box(p.joints, scfg.grids));

        // Positive: the cell nearest each box center.
        for (const auto& g : boxes) {
            const int cx = std::clamp(static_cast<int>(std::lround(g.cx / stride)), 0, W - 1);
            const int cy = std::clamp(static_cast<int>(std::lround(g.cy / stride)), 0, H - 1);
            const int64_t at = (static_cast<int64_t>(ti) * H + cy) * W + cx;
            if (t.obj[at] == 1.0) continue;  // two centers in one cell: first wins
            t.obj[at] = 1.0;
            pos_cells.push_back(at);
            ++npos;
            t.box[at] = (g.cx - stride * cx) / A;
            t.box[plane + at] = (g.cy - stride * cy) / A;
            t.box[2 * plane + at] = std::log(g.w / A);
            t.box[3 * plane + at] = std::log(g.h / A);
        }
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const int64_t at = (static_cast<int64_t>(ti) * H + y) * W + x;
                if (t.obj[at] == 1.0) continue;
                bool negative = true;
                for (const auto& g : boxes) {
                    const double d = std::hypot(x - g.cx / stride, y - g.cy / stride);
                    if (d <= 2.0) {
                        negative = false;
                        break;
                    }
                    skelgen::RegionProposal anchor{ti, static_cast<double>(stride * x),
                                                   static_cast<double>(stride * y), A, A, 1.0};
                    skelgen::RegionProposal gt{ti, g.cx, g.cy, g.w, g.h, 1.0};
                    if (skelgen::box_iou(anchor, gt) >= 0.3) {
                        negative = false;
                        break;
                    }
                }
                if (negative) {
                    neg_cells.push_back(at);
                    ++nneg;
                }
            }
    }
    const double pw = npos > 0 ? 0.5 / static_cast<double>(npos) : 0.0;
    const double nw = nneg > 0 ? (npos > 0 ? 0.5 : 1.0) / static_cast<double>(nneg) : 0.0;
    for (int64_t at : pos_cells) {
        t.obj_w[at] = pw;
        for (int c = 0; c < 4; ++c) t.box_w[c * plane + at] = 1.0 / (4.0 * static_cast<double>(npos));
    }
    for (int64_t at : neg_cells) t.obj_w[at] = nw;
    return t;
}

Var loss_rpn(const Var& rpn_out, const RpnTargets& t) {
    auto obj = nn::slice0(rpn_out, 0, 1);
    auto box = nn::slice0(rpn_out, 1, 4);
    return nn::add(nn::bce_logits(obj, t.obj, t.obj_w), nn::smooth_l1(box, t.box, 1.0, t.box_w));
}

namespace {

Vec3 pred_centroid(const skelgen::PoseOutput& p) {
    // Torso rows of the (N_j, 3) coordinate matrix: neck and both hips.
    const Tensor& c = p.coords->value;
    Vec3 v;
    for (int j : {kNeck, kLHip, kRHip}) {
        v.x += c[j * 3 + 0] / 3.0;
        v.y += c[j * 3 + 1] / 3.0;
        v.z += c[j * 3 + 2] / 3.0;
    }
    return v;
}

}  // namespace

Var loss_skeleton(const std::vector<skelgen::PoseOutput>& preds,
                  const std::vector<std::vector<Joint>>& gts) {
    struct Cand {
        double d;
        size_t i, j;
    };
    std::vector<Cand> cands;
    for (size_t i = 0; i < preds.size(); ++i) {
        const Vec3 pc = pred_centroid(preds[i]);
        for (size_t j = 0; j < gts.size(); ++j) {
            const Vec3 gc = torso_centroid(gts[j]);
            cands.push_back({std::hypot(pc.x - gc.x, pc.y - gc.y, pc.z - gc.z), i, j});
        }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.d != b.d) return a.d < b.d;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    std::vector<bool> used_p(preds.size(), false), used_g(gts.size(), false);
    std::vector<std::pair<size_t, size_t>> matches;
    for (const auto& c : cands) {
        if (used_p[c.i] || used_g[c.j]) continue;
        used_p[c.i] = used_g[c.j] = true;
        matches.push_back({c.i, c.j});
    }
    if (matches.empty()) return nn::constant_scalar(0.0);

    std::vector<Var> terms;
    const double w = 1.0 / (static_cast<double>(matches.size()) * kNumJoints);
    for (const auto& [pi, gj] : matches) {
        const auto& joints = gts[gj];
        Tensor target({kNumJoints, 3});
        for (int j = 0; j < kNumJoints; ++j) {
            target[j * 3 + 0] = joints[static_cast<size_t>(j)].x;
            target[j * 3 + 1] = joints[static_cast<size_t>(j)].y;
            target[j * 3 + 2] = joints[static_cast<size_t>(j)].z;
        }
        terms.push_back(nn::smooth_l1(preds[pi].coords, target, 1.0, Tensor::full({kNumJoints, 3}, w)));
    }
    return add_all(terms);
}

namespace {

int vocab_index(const std::vector<int>& vocab, int class_id) {
    for (size_t i = 0; i < vocab.size(); ++i)
        if (vocab[static_cast<size_t>(i)] == class_id) return static_cast<int>(i);
    throw std::invalid_argument("loss_detection: class id not in the slot's vocabulary");
}

// Up to k indices evenly spread over [0, n); all of them when n <= k.
std::vector<size_t> spread_sample(size_t n, size_t k) {
    std::vector<size_t> idx;
    if (n <= k)
        for (size_t i = 0; i < n; ++i) idx.push_back(i);
    else
        for (size_t i = 0; i < k; ++i) idx.push_back(i * n / k);
    return idx;
}

constexpr size_t kMaxRefineCrops = 4;

}  // namespace

std::vector<AnchorLabel> label_anchors(const std::vector<ActionSegment>& slot_gt,
                                       const action::ActionConfig& acfg, int t_frames) {
    const int a_count = static_cast<int>(acfg.anchor_frames.size());
    const int t_f = acfg.feat_steps(t_frames);
    std::vector<AnchorLabel> out;
    for (int t = 0; t < t_f; ++t)
        for (int a = 0; a < a_count; ++a) {
            const auto aw = action::anchor_window(acfg, t, a, t_frames);
            if (aw.len() < 1.0) continue;
            double best = 0.0;
            int bg = -1;
            for (size_t g = 0; g < slot_gt.size(); ++g) {
                const double iou = action::window_iou(aw.start, aw.end, slot_gt[g].start_frame,
                                                      slot_gt[g].end_frame);
                if (iou > best) best = iou, bg = static_cast<int>(g);
            }
            AnchorLabel l{t, a, -1, -1};
            if (best >= 0.5)
                l.label = 1, l.gt_index = bg;
            else if (best < 0.3)
                l.label = 0;
            out.push_back(l);
        }
    return out;
}

Var loss_detection(const nn::ParamStore& ps, const std::vector<action::CandidateSlot>& slots,
                   const std::vector<ActionSegment>& gt, const action::ActionConfig& acfg,
                   int t_frames) {
    std::vector<Var> parts;
    const int a_count = static_cast<int>(acfg.anchor_frames.size());
    const int t_f = acfg.feat_steps(t_frames);
    for (const auto& slot : slots) {
        std::vector<ActionSegment> slot_gt;
        for (const auto& g : gt)
            if (g.participants == slot.participants) slot_gt.push_back(g);

        auto head = action::proposal_head(ps, slot.feat, acfg);
        Tensor obj_t({3 * a_count, t_f}), obj_w({3 * a_count, t_f});
        Tensor off_t({3 * a_count, t_f}), off_w({3 * a_count, t_f});
        struct Pos {
            action::AnchorWindow aw;
            const ActionSegment* g;
        };
        std::vector<Pos> pos;
        std::vector<action::AnchorWindow> neg;
        for (const auto& l : label_anchors(slot_gt, acfg, t_frames)) {
            const auto aw = action::anchor_window(acfg, l.t_index, l.anchor, t_frames);
            const int64_t at_obj = static_cast<int64_t>(3 * l.anchor) * t_f + l.t_index;
            if (l.label == 1) {
                const ActionSegment* bg = &slot_gt[static_cast<size_t>(l.gt_index)];
                obj_t[at_obj] = 1.0;
                obj_w[at_obj] = 1.0;  // rescaled below
                const double gc = 0.5 * (bg->start_frame + bg->end_frame);
                const double gl = bg->end_frame - bg->start_frame;
                off_t[(static_cast<int64_t>(3 * l.anchor) + 1) * t_f + l.t_index] =
                    (gc - aw.center()) / aw.len();
                off_t[(static_cast<int64_t>(3 * l.anchor) + 2) * t_f + l.t_index] =
                    std::log(gl / aw.len());
                pos.push_back({aw, bg});
            } else if (l.label == 0) {
                obj_w[at_obj] = -1.0;  // marks a negative; rescaled below
                neg.push_back(aw);
            }
        }
        const double npos = static_cast<double>(pos.size());
        const double nneg = static_cast<double>(neg.size());
        const double pw = npos > 0 ? 0.5 / npos : 0.0;
        const double nw = nneg > 0 ? 0.5 / nneg : 0.0;
        for (int64_t i = 0; i < obj_w.size(); ++i)
            obj_w[i] = obj_w[i] > 0.0 ? pw : (obj_w[i] < 0.0 ? nw : 0.0);
        if (npos > 0)
            for (int t = 0; t < t_f; ++t)
                for (int a = 0; a < a_count; ++a)
                    if (obj_t[static_cast<int64_t>(3 * a) * t_f + t] == 1.0)
                        for (int k = 1; k <= 2; ++k)
                            off_w[(static_cast<int64_t>(3 * a) + k) * t_f + t] = 1.0 / (2.0 * npos);

        std::vector<Var> slot_terms;
        slot_terms.push_back(nn::bce_logits(head, obj_t, obj_w));
        if (npos > 0) slot_terms.push_back(nn::smooth_l1(head, off_t, 1.0, off_w));

        // Refinement crops at a bounded, evenly spread sample of the labeled
        // anchors. Wide segments label most anchors positive; capping the
        // crop count keeps per-crop gradients at a usable scale and bounds
        // the cost of a step.
        const auto pos_idx = spread_sample(pos.size(), kMaxRefineCrops);
        const auto neg_idx = spread_sample(neg.size(), kMaxRefineCrops);
        const double cpw = pos_idx.empty() ? 0.0 : 0.5 / static_cast<double>(pos_idx.size());
        const double cnw = neg_idx.empty() ? 0.0 : 0.5 / static_cast<double>(neg_idx.size());
        std::vector<Var> acts;
        std::vector<double> act_targets, act_weights;
        std::vector<Var> cls_rows;
        std::vector<int> cls_targets;
        std::vector<Var> bnd_rows;
        Tensor bnd_t({static_cast<int>(pos_idx.size()), 2});
        const auto& vocab =
            slot.kind == action::SlotKind::kSingle ? acfg.single_classes : acfg.pair_classes;
        for (size_t i = 0; i < pos_idx.size(); ++i) {
            const Pos& p = pos[pos_idx[i]];
            const auto rv = action::classify_refine(ps, slot, p.aw.start, p.aw.end, acfg);
            acts.push_back(rv.actionness);
            act_targets.push_back(1.0);
            act_weights.push_back(cpw);
            cls_rows.push_back(rv.class_logits);
            cls_targets.push_back(vocab_index(vocab, p.g->class_id));
            bnd_rows.push_back(rv.boundary);
            const double gc = 0.5 * (p.g->start_frame + p.g->end_frame);
            const double gl = p.g->end_frame - p.g->start_frame;
            bnd_t[static_cast<int64_t>(i) * 2] = (gc - p.aw.center()) / p.aw.len();
            bnd_t[static_cast<int64_t>(i) * 2 + 1] = std::log(gl / p.aw.len());
        }
        for (size_t k : neg_idx) {
            const auto rv = action::classify_refine(ps, slot, neg[k].start, neg[k].end, acfg);
            acts.push_back(rv.actionness);
            act_targets.push_back(0.0);
            act_weights.push_back(cnw);
        }
        if (!acts.empty()) {
            auto stacked = nn::concat0(acts);  // (n, 1)
            const int n = static_cast<int>(acts.size());
            Tensor tt({n, 1}), ww({n, 1});
            for (int i = 0; i < n; ++i) {
                tt[i] = act_targets[static_cast<size_t>(i)];
                ww[i] = act_weights[static_cast<size_t>(i)];
            }
            slot_terms.push_back(nn::bce_logits(stacked, tt, ww));
        }
        if (!cls_rows.empty()) {
            const double ncrop = static_cast<double>(cls_rows.size());
            auto logits = nn::concat0(cls_rows);  // (ncrop, vocab)
            slot_terms.push_back(nn::ce_rows(logits, cls_targets,
                                             Tensor::full({static_cast<int>(cls_rows.size())},
                                                          1.0 / ncrop)));
            auto bnd = nn::concat0(bnd_rows);  // (ncrop, 2)
            slot_terms.push_back(nn::smooth_l1(bnd, bnd_t, 1.0,
                                               Tensor::full({static_cast<int>(cls_rows.size()), 2},
                                                            1.0 / (2.0 * ncrop))));
        }
        parts.push_back(add_all(slot_terms));
    }
    if (parts.empty()) return nn::constant_scalar(0.0);
    return nn::scale(add_all(parts), 1.0 / static_cast<double>(parts.size()));
}

RfForward rf_forward(const nn::ParamStore& ps, const TrainBatch& batch, const TrainConfig& cfg) {
    if (batch.kind != TrainBatch::Kind::kRf)
        throw std::invalid_argument("rf_forward: wrong batch kind");
    if (static_cast<int>(batch.gt_frames.size()) != cfg.window)
        throw std::invalid_argument("rf_forward: batch window mismatch");
    const auto& scfg = cfg.skel;
    auto fm = skelgen::feature_net(nn::constant(batch.hor), nn::constant(batch.ver), ps, scfg);
    auto rpn = skelgen::rpn_forward(fm, ps);

    RfForward out;
    out.loss_rpn = loss_rpn(rpn, make_rpn_targets(batch.gt_frames, scfg));

    const int tf = scfg.t_feat();
    std::map<int, std::vector<skelgen::PoseOutput>> per_person;
    std::vector<double> step_frames;
    std::vector<Var> step_losses;
    for (int t = 0; t < tf; ++t) {
        const int f = scfg.step_frame(t);
        const SkeletonFrame& gt = batch.gt_frames[static_cast<size_t>(f)];
        std::vector<skelgen::PoseOutput> preds;
        std::vector<std::vector<Joint>> gts;
        for (const auto& p : gt.persons) {
            const GtBox box = gt_box(p.joints, scfg.grids);
            skelgen::RegionProposal rp{t, box.cx, box.cy, box.w, box.h, 1.0};
            preds.push_back(skelgen::estimate_pose(fm, rp, ps, scfg));
            gts.push_back(p.joints);
            per_person[p.person_id].push_back(preds.back());
        }
        step_losses.push_back(loss_skeleton(preds, gts));
        step_frames.push_back(f);
    }
    out.loss_pose = nn::scale(add_all(step_losses), 1.0 / tf);

    std::vector<std::pair<int, Var>> persons;
    for (auto& [pid, steps] : per_person) {
        if (static_cast<int>(steps.size()) != tf) continue;  // person must span the window
        std::vector<skelgen::PoseOutput> s = steps;
        if (cfg.mode == TrainConfig::Mode::kSeparate)
            for (auto& po : s) {
                po.coords = nn::detach(po.coords);
                po.conf = nn::detach(po.conf);
            }
        auto window = skelgen::pose_window(s, step_frames, cfg.window);
        persons.push_back({pid, action::person_features(ps, window, cfg.act)});
    }
    if (persons.empty()) {
        out.loss_det = nn::constant_scalar(0.0);
        return out;
    }
    auto slots = action::build_slots(ps, persons, cfg.act);
    out.loss_det = loss_detection(ps, slots, batch.segments, cfg.act, cfg.window);
    return out;
}

Var skeleton_forward(const nn::ParamStore& ps, const TrainBatch& batch, const TrainConfig& cfg) {
    if (static_cast<int>(batch.gt_frames.size()) != cfg.window)
        throw std::invalid_argument("skeleton_forward: batch window mismatch");
    const int T = cfg.window;
    std::map<int, Tensor> seqs;
    for (int t = 0; t < T; ++t)
        for (const auto& p : batch.gt_frames[static_cast<size_t>(t)].persons) {
            auto [it, fresh] = seqs.try_emplace(p.person_id, Tensor({4, T, kNumJoints}));
            Tensor& s = it->second;
            for (int j = 0; j < kNumJoints; ++j) {
                const auto& jt = p.joints[static_cast<size_t>(j)];
                s[(0 * T + t) * kNumJoints + j] = jt.x;
                s[(1 * T + t) * kNumJoints + j] = jt.y;
                s[(2 * T + t) * kNumJoints + j] = jt.z;
                s[(3 * T + t) * kNumJoints + j] = jt.confidence;
            }
        }
    if (seqs.empty()) return nn::constant_scalar(0.0);
    std::vector<std::pair<int, Var>> persons;
    for (auto& [pid, s] : seqs)
        persons.push_back({pid, action::person_features(ps, nn::constant(std::move(s)), cfg.act)});
    auto slots = action::build_slots(ps, persons, cfg.act);
    return loss_detection(ps, slots, batch.segments, cfg.act, cfg.window);
}

StepLosses multimodal_step(ModelState& st, const TrainBatch& batch, const TrainConfig& cfg) {
    st.params.zero_grads();
    StepLosses out;
    if (batch.kind == TrainBatch::Kind::kRf) {
        auto f = rf_forward(st.params, batch, cfg);
        auto skel_side = nn::add(f.loss_pose, f.loss_rpn);
        auto total = nn::add(skel_side, nn::scale(f.loss_det, cfg.lambda_det));
        nn::backward(total);
        out.total = total->value[0];
        out.skeleton = skel_side->value[0];
        out.detection = f.loss_det->value[0];
        st.opt.apply(st.params.all(), st.step);
    } else {
        auto l = skeleton_forward(st.params, batch, cfg);
        nn::backward(l);
        out.total = out.detection = l->value[0];
        // The skeleton partition is never offered to the optimizer here.
        st.opt.apply(st.params.with_prefix("action."), st.step);
    }
    ++st.step;
    return out;
}

std::vector<TrainBatch::Kind> alternate_schedule(int ratio, int64_t steps, bool have_skeleton) {
    if (ratio < 1) throw std::invalid_argument("alternate_schedule: ratio must be >= 1");
    std::vector<TrainBatch::Kind> out;
    out.reserve(static_cast<size_t>(steps));
    for (int64_t i = 0; i < steps; ++i) {
        const bool skel = have_skeleton && (i % (ratio + 1)) == ratio;
        out.push_back(skel ? TrainBatch::Kind::kSkeleton : TrainBatch::Kind::kRf);
    }
    return out;
}

void train_loop(ModelState& st, const std::vector<ScenarioData>& rf_data,
                const std::vector<ScenarioData>& skel_data, const TrainConfig& cfg,
                const std::function<void(int64_t, const StepLosses&)>& on_step) {
    const auto schedule = alternate_schedule(cfg.ratio, cfg.total_steps, !skel_data.empty());
    std::mt19937_64 rng(cfg.seed ^ 0x2545f4914f6cdd1dULL);
    for (int64_t i = 0; i < cfg.total_steps; ++i) {
        const bool rf = schedule[static_cast<size_t>(i)] == TrainBatch::Kind::kRf;
        const auto& data = rf ? rf_data : skel_data;
        if (data.empty()) throw std::invalid_argument("train_loop: scheduled dataset is empty");
        const auto& sc = data[rng() % data.size()];
        const int span = static_cast<int>(sc.frames.size()) - cfg.window;
        if (span < 0) throw std::invalid_argument("train_loop: scenario shorter than a window");
        const int start = span == 0 ? 0 : static_cast<int>(rng() % (span + 1));
        const TrainBatch batch =
            rf ? make_rf_batch(sc, start, cfg) : make_skeleton_batch(sc, start, cfg);
        const StepLosses losses = multimodal_step(st, batch, cfg);
        if (on_step) on_step(st.step, losses);
    }
}

}  // namespace rfad::train
