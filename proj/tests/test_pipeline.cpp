#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <vector>

#include "rfad/pipeline/pipeline.hpp"
#include "rfad/sim/motion.hpp"
#include "rfad/sim/scenario.hpp"

using namespace rfad;
using namespace rfad::pipeline;
using action::Detection;
using action::SlotKind;
using nn::Tensor;

namespace {

Detection det(int cls, std::vector<int> who, int s, int e, double score) {
    Detection d;
    d.segment.participants = std::move(who);
    d.segment.class_id = cls;
    d.segment.start_frame = s;
    d.segment.end_frame = e;
    d.segment.score = score;
    d.kind = d.segment.participants.size() == 2 ? SlotKind::kPair : SlotKind::kSingle;
    return d;
}

PersonPose point_person(int id, double x, double y, double z) {
    PersonPose p;
    p.person_id = id;
    p.joints.assign(kNumJoints, Joint{x, y, z, 1.0});
    return p;
}

PipelineConfig test_pipeline_config() {
    PipelineConfig cfg;
    cfg.classes = sim::builtin_classes();
    cfg.links = sim::builtin_links();
    cfg.act = action::make_action_config(cfg.classes);
    return cfg;
}

sim::HeatmapStream make_stream(uint64_t seed, int persons, int duration,
                               std::vector<SkeletonFrame>* gt = nullptr) {
    sim::Scenario sc = sim::random_scenario(seed, persons, duration);
    sim::MotionResult mr = sim::synth_motion(sc);
    if (gt) *gt = mr.frames;
    sim::RenderParams rp;
    rp.seed = seed;
    return sim::render_heatmaps(mr.frames, sc, rp);
}

}  // namespace

TEST_CASE("overlapping detections of one stream union with max score") {
    auto merged = merge_overlaps({det(2, {0}, 15, 40, 0.8), det(2, {0}, 39, 60, 0.3),
                                  det(2, {0}, 0, 20, 0.5)});
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].segment.start_frame == 0);
    CHECK(merged[0].segment.end_frame == 60);
    CHECK(merged[0].segment.score == 0.8);
}

TEST_CASE("touching or disjoint windows stay separate") {
    auto merged = merge_overlaps({det(2, {0}, 0, 20, 0.5), det(2, {0}, 20, 40, 0.6)});
    CHECK(merged.size() == 2);
}

TEST_CASE("merging never crosses class or participant boundaries") {
    auto merged = merge_overlaps({det(2, {0}, 0, 20, 0.5), det(3, {0}, 10, 30, 0.5),
                                  det(2, {1}, 10, 30, 0.5), det(5, {0, 1}, 10, 30, 0.5)});
    CHECK(merged.size() == 4);
}

TEST_CASE("merge result ignores input order") {
    std::vector<Detection> dets = {det(2, {0}, 0, 20, 0.5), det(2, {0}, 15, 40, 0.8),
                                   det(4, {1}, 5, 25, 0.9), det(4, {1}, 24, 50, 0.2)};
    auto a = merge_overlaps(dets);
    std::reverse(dets.begin(), dets.end());
    auto b = merge_overlaps(dets);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].segment == b[i].segment);
}

TEST_CASE("tracks_from_frames groups by person with ordered entries") {
    std::vector<SkeletonFrame> frames(3);
    frames[0].frame_index = 8;
    frames[0].persons = {point_person(1, 2, 2, 1)};
    frames[1].frame_index = 0;
    frames[1].persons = {point_person(0, 1, 1, 1), point_person(1, 2, 2, 1)};
    frames[2].frame_index = 4;
    frames[2].persons = {point_person(1, 2.1, 2, 1)};

    auto tracks = tracks_from_frames(frames);
    REQUIRE(tracks.size() == 2);
    CHECK(tracks[0].person_id == 0);
    CHECK(tracks[0].entries.size() == 1);
    CHECK(tracks[1].person_id == 1);
    REQUIRE(tracks[1].entries.size() == 3);
    CHECK(tracks[1].entries[0].frame_index == 0);
    CHECK(tracks[1].entries[2].frame_index == 8);
    CHECK(tracks[1].entries[1].joints[0].x == 2.1);
}

TEST_CASE("match_person_ids pairs nearest identities and invents fresh ids") {
    std::vector<SkeletonFrame> ref(2), pred(3);
    ref[0].frame_index = 0;
    ref[0].persons = {point_person(0, 1, 1, 1), point_person(1, 4, 4, 1)};
    ref[1].frame_index = 4;
    ref[1].persons = {point_person(0, 1, 1.1, 1), point_person(1, 4, 4.1, 1)};

    pred[0].frame_index = 0;
    pred[0].persons = {point_person(9, 1.05, 1, 1), point_person(5, 4.1, 4, 1)};
    pred[1].frame_index = 4;
    pred[1].persons = {point_person(9, 1.05, 1.1, 1)};
    pred[2].frame_index = 99;  // nothing to compare against
    pred[2].persons = {point_person(3, 0, 0, 1)};

    auto map = match_person_ids(pred, ref);
    CHECK(map.at(9) == 0);
    CHECK(map.at(5) == 1);
    CHECK(map.at(3) == 2);

    std::vector<ActionSegment> segs(1);
    segs[0].participants = {9, 5};
    remap_participants(segs, map);
    CHECK(segs[0].participants == std::vector<int>{0, 1});
}

TEST_CASE("predict rejects streams shorter than one window") {
    PipelineConfig cfg = test_pipeline_config();
    nn::ParamStore ps;
    skelgen::init_skeleton_params(ps, cfg.skel, 7);
    action::init_action_params(ps, cfg.act, 8);
    sim::HeatmapStream heat = make_stream(3, 1, 40);
    heat.frames.resize(10);
    CHECK_THROWS_AS(predict(ps, heat, cfg), std::invalid_argument);
}

TEST_CASE("predict with a silent proposal head yields an empty result") {
    PipelineConfig cfg = test_pipeline_config();
    nn::ParamStore ps;
    skelgen::init_skeleton_params(ps, cfg.skel, 7);
    action::init_action_params(ps, cfg.act, 8);
    ps.get("skelgen.rpn.b")->value.at({0}) = -40.0;
    auto r = predict(ps, make_stream(3, 2, 60), cfg);
    CHECK(r.frames.empty());
    CHECK(r.detections.empty());
}

TEST_CASE("predict is deterministic and structurally sound") {
    PipelineConfig cfg = test_pipeline_config();
    cfg.act.actionness_thresh = 0.0;  // untrained head: emit everything it refines
    nn::ParamStore ps;
    skelgen::init_skeleton_params(ps, cfg.skel, 7);
    action::init_action_params(ps, cfg.act, 8);
    ps.get("skelgen.rpn.b")->value.at({0}) = 4.0;  // untrained head: propose everywhere

    sim::HeatmapStream heat = make_stream(31, 2, 75);
    auto r1 = predict(ps, heat, cfg);
    auto r2 = predict(ps, heat, cfg);
    CHECK(r1.frames == r2.frames);
    CHECK(r1.detections == r2.detections);

    REQUIRE(!r1.frames.empty());
    for (size_t i = 1; i < r1.frames.size(); ++i)
        CHECK(r1.frames[i - 1].frame_index < r1.frames[i].frame_index);
    int max_id = -1;
    for (const auto& f : r1.frames) {
        CHECK(f.frame_index >= 0);
        CHECK(f.frame_index < 75);
        REQUIRE(!f.persons.empty());
        for (const auto& p : f.persons) {
            CHECK(p.person_id >= 0);
            CHECK(p.joints.size() == kNumJoints);
            max_id = std::max(max_id, p.person_id);
        }
    }

    REQUIRE(!r1.detections.empty());
    for (size_t i = 1; i < r1.detections.size(); ++i)
        CHECK(r1.detections[i - 1].score >= r1.detections[i].score);
    for (const auto& d : r1.detections) {
        CHECK(d.start_frame >= 0);
        CHECK(d.end_frame <= 75);
        CHECK(d.start_frame < d.end_frame);
        CHECK((d.participants.size() == 1 || d.participants.size() == 2));
        CHECK(std::is_sorted(d.participants.begin(), d.participants.end()));
        for (int id : d.participants) {
            CHECK(id >= 0);
            CHECK(id <= max_id);
        }
    }
}
