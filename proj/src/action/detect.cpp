#include "rfad/action/detect.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "rfad/core/segments.hpp"
#include "rfad/nn/ops.hpp"

namespace rfad::action {

using nn::Tensor;
using nn::Var;

std::vector<CandidateSlot> build_slots(const nn::ParamStore& ps,
                                       const std::vector<std::pair<int, Var>>& persons,
                                       const ActionConfig& cfg) {
    if (persons.empty()) throw std::invalid_argument("build_slots: need at least one person");
    auto sorted = persons;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (size_t i = 0; i < sorted.size(); ++i) {
        if (i > 0 && sorted[i].first == sorted[i - 1].first)
            throw std::invalid_argument("build_slots: duplicate person id");
        if (!sorted[i].second->value.same_shape(sorted[0].second->value))
            throw std::invalid_argument("build_slots: feature shapes differ");
    }

    std::vector<CandidateSlot> slots;
    if (cfg.single_slot) {
        Var pooled = sorted[0].second;
        std::vector<int> ids{sorted[0].first};
        for (size_t i = 1; i < sorted.size(); ++i) {
            pooled = nn::emax(pooled, sorted[i].second);
            ids.push_back(sorted[i].first);
        }
        slots.push_back({SlotKind::kSingle, ids, pooled});
        return slots;
    }
    for (const auto& [id, feat] : sorted) slots.push_back({SlotKind::kSingle, {id}, feat});
    for (size_t i = 0; i < sorted.size(); ++i)
        for (size_t j = i + 1; j < sorted.size(); ++j) {
            auto cat = nn::concat0({sorted[i].second, sorted[j].second});
            auto proj = nn::add_bias_ch(nn::matmul(ps.get("action.det.pair.w"), cat),
                                        ps.get("action.det.pair.b"));
            slots.push_back({SlotKind::kPair, {sorted[i].first, sorted[j].first}, proj});
        }
    return slots;
}

Var proposal_head(const nn::ParamStore& ps, const Var& feat, const ActionConfig& cfg) {
    const Tensor& v = feat->value;
    if (v.rank() != 2 || v.dim(0) != cfg.c_feat)
        throw std::invalid_argument("proposal_head: expected (c_feat, t_f) features");
    const int t_f = v.dim(1);
    auto x = nn::reshape(feat, {cfg.c_feat, t_f, 1});
    auto h = nn::relu(nn::conv2d(x, ps.get("action.det.prop.h.w"), ps.get("action.det.prop.h.b"),
                                 {1, 1}, {1, 0}));
    auto o = nn::conv2d(h, ps.get("action.det.prop.o.w"), ps.get("action.det.prop.o.b"),
                        {1, 1}, {0, 0});
    return nn::reshape(o, {3 * static_cast<int>(cfg.anchor_frames.size()), t_f});
}

AnchorWindow anchor_window(const ActionConfig& cfg, int t_index, int anchor, int t_frames) {
    const double c = t_index * ActionConfig::kTemporalStride;
    const double half = 0.5 * cfg.anchor_frames[static_cast<size_t>(anchor)];
    return {std::max(0.0, c - half), std::min(static_cast<double>(t_frames), c + half)};
}

double window_iou(double s0, double e0, double s1, double e1) {
    const double inter = std::min(e0, e1) - std::max(s0, s1);
    if (inter <= 0.0) return 0.0;
    const double uni = (e0 - s0) + (e1 - s1) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

static double sigmoid_v(double z) { return 1.0 / (1.0 + std::exp(-z)); }

static AnchorWindow decode_window(double center, double len, double d_center, double d_length,
                                  int t_frames) {
    const double c = center + d_center * len;
    const double l = len * std::exp(std::clamp(d_length, -4.0, 4.0));
    AnchorWindow w{c - 0.5 * l, c + 0.5 * l};
    w.start = std::clamp(w.start, 0.0, static_cast<double>(t_frames));
    w.end = std::clamp(w.end, 0.0, static_cast<double>(t_frames));
    return w;
}

AnchorWindow refine_window(double start, double end, double d_center, double d_length,
                           int t_frames) {
    return decode_window(0.5 * (start + end), end - start, d_center, d_length, t_frames);
}

std::vector<TemporalProposal> decode_proposals(const Tensor& head, const ActionConfig& cfg,
                                               int t_frames) {
    const int a_count = static_cast<int>(cfg.anchor_frames.size());
    const int t_f = cfg.feat_steps(t_frames);
    if (head.rank() != 2 || head.dim(0) != 3 * a_count || head.dim(1) != t_f)
        throw std::invalid_argument("decode_proposals: head shape mismatch");
    std::vector<TemporalProposal> cand;
    for (int t = 0; t < t_f; ++t)
        for (int a = 0; a < a_count; ++a) {
            const AnchorWindow aw = anchor_window(cfg, t, a, t_frames);
            if (aw.len() < 1.0) continue;
            const double obj = head[(3 * a) * t_f + t];
            const double dc = head[(3 * a + 1) * t_f + t];
            const double dl = head[(3 * a + 2) * t_f + t];
            const AnchorWindow w = decode_window(aw.center(), aw.len(), dc, dl, t_frames);
            if (w.len() < 1.0) continue;
            cand.push_back({w.start, w.end, sigmoid_v(obj), t, a});
        }
    std::stable_sort(cand.begin(), cand.end(), [](const auto& x, const auto& y) {
        if (x.score != y.score) return x.score > y.score;
        if (x.t_index != y.t_index) return x.t_index < y.t_index;
        return x.anchor < y.anchor;
    });
    std::vector<TemporalProposal> kept;
    for (const auto& p : cand) {
        if (static_cast<int>(kept.size()) >= cfg.top_k) break;
        bool suppressed = false;
        for (const auto& k : kept)
            if (window_iou(p.start, p.end, k.start, k.end) >= cfg.nms_iou) {
                suppressed = true;
                break;
            }
        if (!suppressed) kept.push_back(p);
    }
    return kept;
}

RefineVars classify_refine(const nn::ParamStore& ps, const CandidateSlot& slot,
                           double start_frame, double end_frame, const ActionConfig& cfg) {
    if (!(end_frame > start_frame))
        throw std::invalid_argument("classify_refine: zero-length crop");
    const Tensor& v = slot.feat->value;
    if (v.rank() != 2 || v.dim(0) != cfg.c_feat)
        throw std::invalid_argument("classify_refine: bad slot features");
    auto crop = nn::crop_resize_cols(slot.feat, ActionConfig::frame_to_feat(start_frame),
                                     ActionConfig::frame_to_feat(end_frame), cfg.crop_len);
    auto flat = nn::reshape(crop, {1, cfg.c_feat * cfg.crop_len});
    auto h = nn::relu(nn::add_bias_row(nn::matmul(flat, ps.get("action.det.ref.w1")),
                                       ps.get("action.det.ref.b1")));
    const char* cls = slot.kind == SlotKind::kSingle ? "action.det.ref.cls_s" : "action.det.ref.cls_p";
    if (!ps.has(std::string(cls) + ".w"))
        throw std::invalid_argument("classify_refine: no class vocabulary for slot kind");
    RefineVars out;
    out.actionness = nn::add_bias_row(nn::matmul(h, ps.get("action.det.ref.act.w")),
                                      ps.get("action.det.ref.act.b"));
    out.class_logits = nn::add_bias_row(nn::matmul(h, ps.get(std::string(cls) + ".w")),
                                        ps.get(std::string(cls) + ".b"));
    out.boundary = nn::add_bias_row(nn::matmul(h, ps.get("action.det.ref.bnd.w")),
                                    ps.get("action.det.ref.bnd.b"));
    return out;
}

std::vector<Detection> detect_window(const nn::ParamStore& ps,
                                     const std::vector<CandidateSlot>& slots,
                                     const ActionConfig& cfg, int t_frames) {
    std::vector<Detection> dets;
    for (const auto& slot : slots) {
        const auto& vocab =
            slot.kind == SlotKind::kSingle ? cfg.single_classes : cfg.pair_classes;
        if (vocab.empty()) continue;
        const Tensor head = proposal_head(ps, slot.feat, cfg)->value;
        for (const auto& p : decode_proposals(head, cfg, t_frames)) {
            const RefineVars rv = classify_refine(ps, slot, p.start, p.end, cfg);
            const double act = sigmoid_v(rv.actionness->value[0]);
            if (act < cfg.actionness_thresh) continue;
            const AnchorWindow w = refine_window(p.start, p.end, rv.boundary->value[0],
                                                 rv.boundary->value[1], t_frames);
            if (w.len() < 1.0) continue;
            const Tensor& logits = rv.class_logits->value;
            int best = 0;
            double mx = logits[0], lse = 0.0;
            for (int i = 1; i < logits.size(); ++i)
                if (logits[i] > mx) mx = logits[i], best = i;
            for (int i = 0; i < logits.size(); ++i) lse += std::exp(logits[i] - mx);
            const double cls_prob = 1.0 / lse;  // exp(mx - mx) / sum

            ActionSegment seg;
            seg.class_id = vocab[static_cast<size_t>(best)];
            seg.start_frame = static_cast<int>(std::lround(w.start));
            seg.end_frame = static_cast<int>(std::lround(w.end));
            seg.start_frame = std::clamp(seg.start_frame, 0, t_frames - 1);
            seg.end_frame = std::clamp(seg.end_frame, seg.start_frame + 1, t_frames);
            seg.score = act * cls_prob;
            if (cfg.single_slot && slot.participants.size() > 1) {
                for (int id : slot.participants) {
                    seg.participants = {id};
                    dets.push_back({seg, slot.kind});
                }
            } else {
                seg.participants = slot.participants;
                dets.push_back({seg, slot.kind});
            }
        }
    }
    return dets;
}

std::vector<Detection> priority_resolve(std::vector<Detection> dets,
                                        const std::vector<ClassDef>& classes,
                                        const std::vector<ClassLink>& links) {
    std::set<int> interactions, singles;
    for (const auto& c : classes) (c.interaction ? interactions : singles).insert(c.class_id);
    std::set<std::pair<int, int>> rules;
    for (const auto& l : links) {
        if (!interactions.count(l.interaction_class) || !singles.count(l.action_class))
            throw std::invalid_argument("priority_resolve: link references unknown class");
        rules.insert({l.interaction_class, l.action_class});
    }

    std::vector<bool> removed(dets.size(), false);
    for (const auto& d : dets) {
        if (d.kind != SlotKind::kPair || !interactions.count(d.segment.class_id)) continue;
        for (size_t i = 0; i < dets.size(); ++i) {
            const auto& s = dets[i];
            if (removed[i] || s.kind != SlotKind::kSingle || s.segment.participants.size() != 1)
                continue;
            if (!rules.count({d.segment.class_id, s.segment.class_id})) continue;
            const int pid = s.segment.participants[0];
            if (std::find(d.segment.participants.begin(), d.segment.participants.end(), pid) ==
                d.segment.participants.end())
                continue;
            if (segment_iou(d.segment, s.segment) >= 0.5) removed[i] = true;
        }
    }
    std::vector<Detection> out;
    for (size_t i = 0; i < dets.size(); ++i)
        if (!removed[i]) out.push_back(dets[i]);
    std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
        if (a.segment.score != b.segment.score) return a.segment.score > b.segment.score;
        if (a.segment.start_frame != b.segment.start_frame)
            return a.segment.start_frame < b.segment.start_frame;
        if (a.segment.class_id != b.segment.class_id) return a.segment.class_id < b.segment.class_id;
        return a.segment.participants < b.segment.participants;
    });
    return out;
}

}  // namespace rfad::action
