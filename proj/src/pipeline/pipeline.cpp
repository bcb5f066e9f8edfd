#include "rfad/pipeline/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "rfad/core/associate.hpp"
#include "rfad/nn/graph.hpp"

namespace rfad::pipeline {
namespace {

using nn::Tensor;
using nn::Var;

double centroid_dist(const Vec3& a, const Vec3& b) {
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                     (a.z - b.z) * (a.z - b.z));
}

double mean_confidence(const PersonPose& p) {
    double s = 0.0;
    for (const auto& j : p.joints) s += j.confidence;
    return p.joints.empty() ? 0.0 : s / static_cast<double>(p.joints.size());
}

// Clamped ascending window starts covering [0, total) with the given hop.
std::vector<int> window_starts(int total, int window, int stride) {
    std::vector<int> starts;
    for (int s = 0;; s += stride) {
        if (s + window >= total) {
            starts.push_back(total - window);
            break;
        }
        starts.push_back(s);
    }
    return starts;
}

// Stack frames [start, start+window) into (1, T, H, W) view tensors.
std::pair<Tensor, Tensor> heat_window(const sim::HeatmapStream& heat, int start, int window) {
    const Tensor& h0 = heat.frames[static_cast<size_t>(start)].hor;
    const Tensor& v0 = heat.frames[static_cast<size_t>(start)].ver;
    Tensor hor({1, window, h0.dim(0), h0.dim(1)});
    Tensor ver({1, window, v0.dim(0), v0.dim(1)});
    for (int t = 0; t < window; ++t) {
        const auto& fr = heat.frames[static_cast<size_t>(start + t)];
        std::copy(fr.hor.vec().begin(), fr.hor.vec().end(),
                  hor.data() + static_cast<int64_t>(t) * h0.size());
        std::copy(fr.ver.vec().begin(), fr.ver.vec().end(),
                  ver.data() + static_cast<int64_t>(t) * v0.size());
    }
    return {std::move(hor), std::move(ver)};
}

// Poses for every window, keyed by absolute frame. Overlapping windows can
// re-observe a frame; duplicates are resolved later.
std::map<int, std::vector<PersonPose>> run_pose_stage(const nn::ParamStore& ps,
                                                      const sim::HeatmapStream& heat,
                                                      const std::vector<int>& starts,
                                                      const PipelineConfig& cfg) {
    std::map<int, std::vector<PersonPose>> by_frame;
    for (int s : starts) {
        auto [hor, ver] = heat_window(heat, s, cfg.window);
        const auto fm = skelgen::feature_net(nn::constant(hor), nn::constant(ver), ps, cfg.skel);
        const Var rpn = skelgen::rpn_forward(fm, ps);
        const auto regions = skelgen::propose_regions(rpn->value, cfg.skel, cfg.skel.nms_iou,
                                                      cfg.skel.score_thresh);
        for (const auto& rp : regions) {
            const auto pose = skelgen::estimate_pose(fm, rp, ps, cfg.skel);
            PersonPose p;
            p.joints.resize(kNumJoints);
            for (int j = 0; j < kNumJoints; ++j) {
                p.joints[static_cast<size_t>(j)] = {pose.coords->value.at({j, 0}),
                                                    pose.coords->value.at({j, 1}),
                                                    pose.coords->value.at({j, 2}),
                                                    pose.conf->value.at({j})};
            }
            by_frame[s + cfg.skel.step_frame(rp.t_index)].push_back(std::move(p));
        }
    }
    return by_frame;
}

// Keep the most confident pose per nearby cluster within one frame.
std::vector<PersonPose> dedupe_frame(std::vector<PersonPose> poses, double min_dist) {
    std::stable_sort(poses.begin(), poses.end(), [](const PersonPose& a, const PersonPose& b) {
        return mean_confidence(a) > mean_confidence(b);
    });
    std::vector<PersonPose> kept;
    for (auto& p : poses) {
        const Vec3 c = torso_centroid(p.joints);
        const bool dup = std::any_of(kept.begin(), kept.end(), [&](const PersonPose& k) {
            return centroid_dist(c, torso_centroid(k.joints)) < min_dist;
        });
        if (!dup) kept.push_back(std::move(p));
    }
    return kept;
}

// Track entries inside [start, start+window) as a dense feature window.
Var track_features(const nn::ParamStore& ps, const Track& tr, int start,
                   const PipelineConfig& cfg) {
    std::vector<skelgen::PoseOutput> steps;
    std::vector<double> rel_frames;
    for (const auto& e : tr.entries) {
        if (e.frame_index < start || e.frame_index >= start + cfg.window) continue;
        Tensor coords({kNumJoints, 3});
        Tensor conf({kNumJoints});
        for (int j = 0; j < kNumJoints; ++j) {
            const Joint& jt = e.joints[static_cast<size_t>(j)];
            coords.at({j, 0}) = jt.x;
            coords.at({j, 1}) = jt.y;
            coords.at({j, 2}) = jt.z;
            conf.at({j}) = jt.confidence;
        }
        steps.push_back({nn::constant(coords), nn::constant(conf)});
        rel_frames.push_back(static_cast<double>(e.frame_index - start));
    }
    if (steps.size() < 2) return nullptr;
    const Var seq = skelgen::pose_window(steps, rel_frames, cfg.window);
    return action::person_features(ps, seq, cfg.act);
}

}  // namespace

std::vector<action::Detection> merge_overlaps(std::vector<action::Detection> dets) {
    std::map<std::tuple<int, std::vector<int>, int>, std::vector<action::Detection>> groups;
    for (auto& d : dets)
        groups[{d.segment.class_id, d.segment.participants, static_cast<int>(d.kind)}].push_back(
            std::move(d));
    std::vector<action::Detection> out;
    for (auto& [key, group] : groups) {
        std::sort(group.begin(), group.end(), [](const action::Detection& a,
                                                 const action::Detection& b) {
            return std::tie(a.segment.start_frame, a.segment.end_frame) <
                   std::tie(b.segment.start_frame, b.segment.end_frame);
        });
        action::Detection cur = group.front();
        for (size_t i = 1; i < group.size(); ++i) {
            const auto& next = group[i];
            if (next.segment.start_frame < cur.segment.end_frame) {
                cur.segment.end_frame = std::max(cur.segment.end_frame, next.segment.end_frame);
                cur.segment.score = std::max(cur.segment.score, next.segment.score);
            } else {
                out.push_back(cur);
                cur = next;
            }
        }
        out.push_back(cur);
    }
    return out;
}

std::vector<Track> tracks_from_frames(const std::vector<SkeletonFrame>& frames) {
    std::vector<const SkeletonFrame*> ordered;
    ordered.reserve(frames.size());
    for (const auto& f : frames) ordered.push_back(&f);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const SkeletonFrame* a, const SkeletonFrame* b) {
                         return a->frame_index < b->frame_index;
                     });
    std::map<int, Track> by_id;
    for (const SkeletonFrame* f : ordered) {
        for (const auto& p : f->persons) {
            Track& tr = by_id[p.person_id];
            tr.person_id = p.person_id;
            tr.entries.push_back({f->frame_index, p.joints});
        }
    }
    std::vector<Track> out;
    out.reserve(by_id.size());
    for (auto& [id, tr] : by_id) out.push_back(std::move(tr));
    return out;
}

std::unordered_map<int, int> match_person_ids(const std::vector<SkeletonFrame>& pred,
                                              const std::vector<SkeletonFrame>& ref) {
    std::map<int, std::map<int, Vec3>> pc, rc;  // id -> frame -> centroid
    for (const auto& f : pred)
        for (const auto& p : f.persons) pc[p.person_id][f.frame_index] = torso_centroid(p.joints);
    for (const auto& f : ref)
        for (const auto& p : f.persons) rc[p.person_id][f.frame_index] = torso_centroid(p.joints);

    std::vector<std::tuple<double, int, int>> cand;  // (mean dist, pred id, ref id)
    for (const auto& [pid, pmap] : pc) {
        for (const auto& [rid, rmap] : rc) {
            double sum = 0.0;
            int n = 0;
            for (const auto& [frame, c] : pmap) {
                const auto it = rmap.find(frame);
                if (it == rmap.end()) continue;
                sum += centroid_dist(c, it->second);
                ++n;
            }
            if (n > 0) cand.emplace_back(sum / n, pid, rid);
        }
    }
    std::sort(cand.begin(), cand.end());

    std::unordered_map<int, int> map;
    std::map<int, bool> ref_used;
    for (const auto& [dist, pid, rid] : cand) {
        if (map.count(pid) || ref_used[rid]) continue;
        map[pid] = rid;
        ref_used[rid] = true;
    }
    int fresh = rc.empty() ? 0 : rc.rbegin()->first + 1;
    for (const auto& [pid, pmap] : pc)
        if (!map.count(pid)) map[pid] = fresh++;
    return map;
}

void remap_participants(std::vector<ActionSegment>& segments,
                        const std::unordered_map<int, int>& id_map) {
    for (auto& seg : segments) {
        for (auto& id : seg.participants) {
            const auto it = id_map.find(id);
            if (it != id_map.end()) id = it->second;
        }
        std::sort(seg.participants.begin(), seg.participants.end());
    }
}

PredictResult predict(const nn::ParamStore& ps, const sim::HeatmapStream& heat,
                      const PipelineConfig& cfg) {
    if (cfg.window <= 0 || cfg.stride <= 0)
        throw std::invalid_argument("predict: window and stride must be positive");
    const int total = static_cast<int>(heat.frames.size());
    if (total < cfg.window) throw std::invalid_argument("predict: stream shorter than one window");
    const std::vector<int> starts = window_starts(total, cfg.window, cfg.stride);

    // Pose stage: per-window proposals and pose readout, then per-frame dedupe.
    std::map<int, std::vector<PersonPose>> by_frame = run_pose_stage(ps, heat, starts, cfg);
    std::vector<SkeletonFrame> raw_frames;
    for (auto& [frame, poses] : by_frame) {
        SkeletonFrame f;
        f.frame_index = frame;
        f.persons = dedupe_frame(std::move(poses), cfg.dedupe_dist);
        if (!f.persons.empty()) raw_frames.push_back(std::move(f));
    }

    // Identity stage: associate poses into tracks, drop flickers, renumber.
    std::vector<Track> tracks = associate_frames(raw_frames, cfg.assoc_gate, cfg.assoc_max_gap);
    std::erase_if(tracks, [&](const Track& t) {
        return static_cast<int>(t.entries.size()) < cfg.min_track_len;
    });
    for (size_t i = 0; i < tracks.size(); ++i) tracks[i].person_id = static_cast<int>(i);

    PredictResult out;
    std::map<int, SkeletonFrame> out_frames;
    for (const auto& tr : tracks) {
        for (const auto& e : tr.entries) {
            SkeletonFrame& f = out_frames[e.frame_index];
            f.frame_index = e.frame_index;
            f.persons.push_back({tr.person_id, e.joints});
        }
    }
    for (auto& [frame, f] : out_frames) out.frames.push_back(std::move(f));

    // Detection stage: per-window slot features over tracked persons.
    std::vector<action::Detection> dets;
    for (int s : starts) {
        std::vector<std::pair<int, Var>> persons;
        for (const auto& tr : tracks) {
            const Var feat = track_features(ps, tr, s, cfg);
            if (feat != nullptr) persons.emplace_back(tr.person_id, feat);
        }
        if (persons.empty()) continue;
        if (persons.size() > 6) persons.resize(6);  // slot head capacity; keeps lowest ids
        const auto slots = action::build_slots(ps, persons, cfg.act);
        for (auto& d : action::detect_window(ps, slots, cfg.act, cfg.window)) {
            d.segment.start_frame += s;
            d.segment.end_frame += s;
            dets.push_back(std::move(d));
        }
    }
    auto resolved = action::priority_resolve(merge_overlaps(std::move(dets)), cfg.classes,
                                             cfg.links);
    out.detections.reserve(resolved.size());
    for (auto& d : resolved) out.detections.push_back(std::move(d.segment));
    return out;
}

}  // namespace rfad::pipeline
