#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "helpers.hpp"
#include "rfad/sim/motion.hpp"
#include "rfad/sim/render.hpp"
#include "rfad/sim/scenario.hpp"
#include "rfad/train/train.hpp"

using namespace rfad;
using namespace rfad::train;
using nn::Tensor;
using nn::Var;

namespace {

TrainConfig test_config() {
    TrainConfig cfg;
    cfg.act = action::make_action_config(sim::builtin_classes());
    cfg.seed = 11;
    return cfg;
}

ScenarioData make_scenario_data(uint64_t seed, int persons, int duration) {
    sim::Scenario sc = sim::random_scenario(seed, persons, duration);
    sim::MotionResult mr = sim::synth_motion(sc);
    sim::RenderParams rp;
    rp.seed = seed;
    ScenarioData data;
    data.heat = sim::render_heatmaps(mr.frames, sc, rp);
    data.frames = mr.frames;
    data.segments = mr.segments;
    return data;
}

std::vector<Tensor> snapshot(const nn::ParamStore& ps, bool skeleton) {
    std::vector<Tensor> out;
    for (const auto& n : ps.names())
        if (in_skeleton_partition(n) == skeleton) out.push_back(ps.get(n)->value);
    return out;
}

bool all_equal(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i].vec() != b[i].vec()) return false;
    return true;
}

}  // namespace

TEST_CASE("every parameter belongs to exactly one training partition") {
    TrainConfig cfg = test_config();
    ModelState st(cfg);
    int skel = 0, act = 0;
    for (const auto& n : st.params.names()) {
        const bool s = in_skeleton_partition(n), a = in_action_partition(n);
        CHECK(s != a);
        (s ? skel : act)++;
    }
    CHECK(skel > 0);
    CHECK(act > 0);

    TrainConfig bad = cfg;
    bad.window = 20;  // generator still expects 30
    CHECK_THROWS_AS(ModelState{bad}, std::invalid_argument);
}

TEST_CASE("alternation schedule interleaves modalities at the configured ratio") {
    using K = TrainBatch::Kind;
    auto s1 = alternate_schedule(1, 6, true);
    CHECK(s1 == std::vector<K>{K::kRf, K::kSkeleton, K::kRf, K::kSkeleton, K::kRf, K::kSkeleton});
    auto s3 = alternate_schedule(3, 8, true);
    CHECK(s3 == std::vector<K>{K::kRf, K::kRf, K::kRf, K::kSkeleton, K::kRf, K::kRf, K::kRf,
                               K::kSkeleton});
    auto rf_only = alternate_schedule(2, 5, false);
    for (auto k : rf_only) CHECK(k == K::kRf);
    CHECK_THROWS_AS(alternate_schedule(0, 4, true), std::invalid_argument);
}

TEST_CASE("skeleton loss is zero on perfect predictions and quadratic in small errors") {
    std::vector<Joint> gt(kNumJoints);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& j : gt) j = {2.0 + u(rng), 3.0 + u(rng), 1.0 + std::abs(u(rng)), 1.0};

    Tensor coords({kNumJoints, 3});
    for (int j = 0; j < kNumJoints; ++j) {
        coords[j * 3 + 0] = gt[static_cast<size_t>(j)].x;
        coords[j * 3 + 1] = gt[static_cast<size_t>(j)].y;
        coords[j * 3 + 2] = gt[static_cast<size_t>(j)].z;
    }
    skelgen::PoseOutput perfect{nn::constant(coords), nn::constant(Tensor::full({kNumJoints}, 1.0))};
    CHECK(loss_skeleton({perfect}, {gt})->value[0] == 0.0);

    // One joint off by delta (below the transition point): quadratic value.
    const double delta = 0.25;
    Tensor off = coords;
    off[5 * 3 + 1] += delta;
    skelgen::PoseOutput shifted{nn::constant(off), perfect.conf};
    const double want = 0.5 * delta * delta / kNumJoints;
    CHECK(loss_skeleton({shifted}, {gt})->value[0] == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("skeleton loss matches predictions to ground truth by nearest centroid") {
    std::vector<Joint> a(kNumJoints), b(kNumJoints);
    for (int j = 0; j < kNumJoints; ++j) {
        a[static_cast<size_t>(j)] = {1.0, 1.0, 1.0, 1.0};
        b[static_cast<size_t>(j)] = {4.0, 4.0, 1.0, 1.0};
    }
    auto coords_of = [](const std::vector<Joint>& js) {
        Tensor c({kNumJoints, 3});
        for (int j = 0; j < kNumJoints; ++j) {
            c[j * 3 + 0] = js[static_cast<size_t>(j)].x;
            c[j * 3 + 1] = js[static_cast<size_t>(j)].y;
            c[j * 3 + 2] = js[static_cast<size_t>(j)].z;
        }
        return c;
    };
    auto conf = nn::constant(Tensor::full({kNumJoints}, 1.0));
    skelgen::PoseOutput pa{nn::constant(coords_of(a)), conf};
    skelgen::PoseOutput pb{nn::constant(coords_of(b)), conf};
    // Predictions in the opposite order of the ground-truth list still pair up.
    CHECK(loss_skeleton({pb, pa}, {a, b})->value[0] == 0.0);
    // Extra unmatched prediction adds nothing here.
    CHECK(loss_skeleton({pb, pa, pb}, {a, b})->value[0] == 0.0);
}

TEST_CASE("skeleton loss gradients match finite differences") {
    std::mt19937_64 rng(2);
    auto coords = testutil::random_leaf({kNumJoints, 3}, rng, 1.0, 2.0);
    std::vector<Joint> gt(kNumJoints);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    for (int j = 0; j < kNumJoints; ++j) {
        gt[static_cast<size_t>(j)] = {coords->value[j * 3] + u(rng),
                                      coords->value[j * 3 + 1] + u(rng),
                                      coords->value[j * 3 + 2] + u(rng), 1.0};
    }
    auto fwd = [&]() {
        skelgen::PoseOutput p{coords, nn::constant(Tensor::full({kNumJoints}, 1.0))};
        return loss_skeleton({p}, {gt});
    };
    auto gc = testutil::gradcheck(fwd, {coords}, 25, rng);
    CHECK(gc.probes >= 20);
    CHECK(gc.max_rel_err < 1e-4);
}

TEST_CASE("box teacher labels mark nearest cells positive and distant cells negative") {
    skelgen::SkelgenConfig scfg;
    std::vector<SkeletonFrame> frames(static_cast<size_t>(scfg.window));
    for (int t = 0; t < scfg.window; ++t) frames[static_cast<size_t>(t)].frame_index = t;
    // One person standing near (3.25, 2.85) meters on every frame.
    sim::Scenario sc;
    for (auto& f : frames) {
        PersonPose p;
        p.person_id = 0;
        for (int j = 0; j < kNumJoints; ++j) p.joints.push_back({3.25, 2.85, 1.0, 1.0});
        f.persons.push_back(p);
    }
    RpnTargets t = make_rpn_targets(frames, scfg);
    const int T = scfg.t_feat(), H = scfg.feat_h(), W = scfg.feat_w();
    REQUIRE(t.obj.shape() == std::vector<int>{1, T, H, W});

    // Box center: u = 3.25/0.1 - 0.5 = 32.0, v = 2.85/0.1 - 0.5 = 28.0.
    // Nearest feature cell: (x=4, y=4) at stride 8 (32/8=4, 28/8=3.5 -> 4).
    GtBox box = gt_box(frames[0].persons[0].joints, scfg.grids);
    CHECK(box.cx == doctest::Approx(32.0).epsilon(1e-12));
    CHECK(box.cy == doctest::Approx(28.0).epsilon(1e-12));
    const int64_t plane = static_cast<int64_t>(T) * H * W;
    double pos_w_sum = 0.0, neg_w_sum = 0.0;
    for (int ti = 0; ti < T; ++ti) {
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const int64_t at = (static_cast<int64_t>(ti) * H + y) * W + x;
                if (x == 4 && y == 4) {
                    CHECK(t.obj[at] == 1.0);
                    pos_w_sum += t.obj_w[at];
                    CHECK(t.box[at] == doctest::Approx(0.0 / 12.0));           // dx: 32-32
                    CHECK(t.box[plane + at] == doctest::Approx(-4.0 / 12.0));  // dy: 28-32
                } else {
                    CHECK(t.obj[at] == 0.0);
                    neg_w_sum += t.obj_w[at];
                    const double d = std::hypot(x - 4.0, y - 3.5);
                    if (d <= 2.0) CHECK(t.obj_w[at] == 0.0);  // near-center cells are ignored
                }
            }
    }
    CHECK(pos_w_sum == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(neg_w_sum == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("anchor labeling matches brute-force interval IoU on random segments") {
    action::ActionConfig acfg = action::make_action_config(sim::builtin_classes());
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int t_frames = 30;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<ActionSegment> gt;
        const int n = 1 + static_cast<int>(u(rng) * 4.99);  // up to 5 random segments
        for (int i = 0; i < n; ++i) {
            ActionSegment s;
            s.start_frame = static_cast<int>(u(rng) * 24);
            s.end_frame = s.start_frame + 2 + static_cast<int>(u(rng) * 26);
            s.end_frame = std::min(s.end_frame, t_frames);
            if (s.end_frame <= s.start_frame) s.end_frame = s.start_frame + 1;
            gt.push_back(s);
        }
        auto labels = label_anchors(gt, acfg, t_frames);
        for (const auto& l : labels) {
            const auto aw = action::anchor_window(acfg, l.t_index, l.anchor, t_frames);
            double best = 0.0;
            int best_g = -1;
            for (size_t g = 0; g < gt.size(); ++g) {
                const double iou =
                    action::window_iou(aw.start, aw.end, gt[g].start_frame, gt[g].end_frame);
                if (iou > best) best = iou, best_g = static_cast<int>(g);
            }
            if (best >= 0.5) {
                CHECK(l.label == 1);
                CHECK(l.gt_index == best_g);
            } else if (best < 0.3) {
                CHECK(l.label == 0);
            } else {
                CHECK(l.label == -1);
            }
        }
    }
}

TEST_CASE("detection loss vanishes with confident background and no ground truth") {
    TrainConfig cfg = test_config();
    ModelState st(cfg);
    std::mt19937_64 rng(4);

    // Force the proposal objectness and actionness biases very negative.
    for (const char* n : {"action.det.prop.o.b", "action.det.ref.act.b"}) {
        auto p = st.params.get(n);
        for (int64_t i = 0; i < p->value.size(); ++i) p->value[i] = -30.0;
    }
    std::vector<action::CandidateSlot> slots{
        {action::SlotKind::kSingle, {0}, nn::constant(testutil::random_tensor({32, 15}, rng, 0.0, 0.2))}};
    const double l = loss_detection(st.params, slots, {}, cfg.act, 30)->value[0];
    CHECK(l >= 0.0);
    CHECK(l < 1e-6);
}

TEST_CASE("detection loss gradients match finite differences") {
    TrainConfig cfg = test_config();
    ModelState st(cfg);
    std::mt19937_64 rng(5);

    auto feat = testutil::random_leaf({32, 15}, rng, -0.5, 0.5);
    std::vector<ActionSegment> gt;
    ActionSegment s;
    s.participants = {0};
    s.class_id = 2;
    s.start_frame = 6;
    s.end_frame = 24;
    gt.push_back(s);

    auto fwd = [&]() {
        std::vector<action::CandidateSlot> slots{{action::SlotKind::kSingle, {0}, feat}};
        return loss_detection(st.params, slots, gt, cfg.act, 30);
    };
    std::vector<Var> leaves{feat, st.params.get("action.det.prop.h.w"),
                            st.params.get("action.det.ref.w1"),
                            st.params.get("action.det.ref.cls_s.w"),
                            st.params.get("action.det.ref.bnd.w")};
    auto gc = testutil::gradcheck(fwd, leaves, 5, rng);
    CHECK(gc.probes >= 20);
    CHECK(gc.max_rel_err < 1e-4);
}

TEST_CASE("window batches clip segments and copy heatmap planes") {
    ScenarioData data = make_scenario_data(21, 2, 90);
    TrainConfig cfg = test_config();

    TrainBatch b = make_skeleton_batch(data, 20, cfg);
    CHECK(b.gt_frames.size() == 30);
    CHECK(b.gt_frames[0].frame_index == 0);
    CHECK(b.gt_frames[0].persons == data.frames[20].persons);
    for (const auto& seg : b.segments) {
        CHECK(seg.start_frame >= 0);
        CHECK(seg.end_frame <= 30);
        CHECK(seg.start_frame < seg.end_frame);
    }

    TrainBatch rf = make_rf_batch(data, 20, cfg);
    CHECK(rf.hor.shape() == std::vector<int>{1, 30, 64, 64});
    CHECK(rf.ver.shape() == std::vector<int>{1, 30, 32, 64});
    // Spot-check one copied plane.
    const Tensor& src = data.heat.frames[25].hor;
    for (int i = 0; i < 64; ++i)
        CHECK(rf.hor[(static_cast<int64_t>(5) * 64 + 31) * 64 + i] == src[31 * 64 + i]);

    CHECK_THROWS_AS(make_skeleton_batch(data, 61, cfg), std::invalid_argument);
    CHECK_THROWS_AS(make_rf_batch(data, -1, cfg), std::invalid_argument);
}

TEST_CASE("a skeleton-modality step leaves the generator partition bitwise unchanged") {
    ScenarioData data = make_scenario_data(22, 2, 90);
    TrainConfig cfg = test_config();
    cfg.total_steps = 10;
    ModelState st(cfg);

    auto skel_before = snapshot(st.params, true);
    auto act_before = snapshot(st.params, false);
    TrainBatch batch = make_skeleton_batch(data, 15, cfg);
    StepLosses l = multimodal_step(st, batch, cfg);
    CHECK(std::isfinite(l.total));
    CHECK(l.total > 0.0);
    CHECK(st.step == 1);

    CHECK(all_equal(skel_before, snapshot(st.params, true)));
    CHECK_FALSE(all_equal(act_before, snapshot(st.params, false)));

    // And again after an intervening rf step re-allocates generator grads.
    TrainBatch rf = make_rf_batch(data, 15, cfg);
    multimodal_step(st, rf, cfg);
    auto skel_mid = snapshot(st.params, true);
    CHECK_FALSE(all_equal(skel_before, skel_mid));  // rf step did move the generator
    multimodal_step(st, batch, cfg);
    CHECK(all_equal(skel_mid, snapshot(st.params, true)));
}

TEST_CASE("action-loss gradients reach the generator only in end-to-end mode") {
    ScenarioData data = make_scenario_data(23, 2, 90);
    TrainConfig cfg = test_config();
    ModelState st(cfg);
    TrainBatch batch = make_rf_batch(data, 10, cfg);

    auto grad_norm_of_generator = [&](TrainConfig::Mode mode) {
        TrainConfig c = cfg;
        c.mode = mode;
        st.params.zero_grads();
        RfForward f = rf_forward(st.params, batch, c);
        nn::backward(f.loss_det);
        double norm = 0.0;
        for (const auto& n : st.params.names()) {
            if (!in_skeleton_partition(n)) continue;
            const auto p = st.params.get(n);
            for (int64_t i = 0; i < p->grad.size(); ++i) norm += std::abs(p->grad[i]);
        }
        return norm;
    };
    CHECK(grad_norm_of_generator(TrainConfig::Mode::kEndToEnd) > 0.0);
    CHECK(grad_norm_of_generator(TrainConfig::Mode::kSeparate) == 0.0);
}

TEST_CASE("rf steps are reproducible and move both partitions") {
    ScenarioData data = make_scenario_data(24, 2, 90);
    TrainConfig cfg = test_config();
    cfg.total_steps = 4;

    ModelState a(cfg), b(cfg);
    TrainBatch batch = make_rf_batch(data, 30, cfg);
    StepLosses la = multimodal_step(a, batch, cfg);
    StepLosses lb = multimodal_step(b, batch, cfg);
    CHECK(la.total == lb.total);
    CHECK(std::isfinite(la.total));
    CHECK(la.skeleton > 0.0);
    CHECK(la.detection > 0.0);
    for (const auto& n : a.params.names())
        CHECK(a.params.get(n)->value.vec() == b.params.get(n)->value.vec());
}
