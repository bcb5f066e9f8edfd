#include "rfad/action/features.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "rfad/nn/ops.hpp"

namespace rfad::action {

using nn::Tensor;
using nn::Var;

ActionConfig make_action_config(const std::vector<ClassDef>& classes) {
    ActionConfig cfg;
    for (const auto& c : classes)
        (c.interaction ? cfg.pair_classes : cfg.single_classes).push_back(c.class_id);
    return cfg;
}

void init_action_params(nn::ParamStore& ps, const ActionConfig& cfg, uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto conv = [&](const std::string& name, std::vector<int> shape, int fan_in) {
        const int co = shape[0];
        ps.add(name + ".w", nn::he_normal(std::move(shape), fan_in, rng));
        ps.add(name + ".b", Tensor::zeros({co}));
    };
    for (const std::string s : {"action.feat.s", "action.feat.t"}) {
        conv(s + ".p1", {cfg.c_point, cfg.in_ch, 1, 1}, cfg.in_ch);
        conv(s + ".p2", {cfg.c_feat, cfg.c_point, 3, 1}, cfg.c_point * 3);
        conv(s + ".cc", {cfg.n_joints, cfg.n_joints, 3, 3}, cfg.n_joints * 9);
    }
    // Zero gate weights start every (timestep, joint) gate at logistic(0)=0.5.
    ps.add("action.feat.mask.w", Tensor::zeros({1, 2 * cfg.c_feat, 1, 1}));
    ps.add("action.feat.mask.b", Tensor::zeros({1}));
    conv("action.feat.fuse", {cfg.c_feat, 2 * cfg.c_feat, 1, 1}, 2 * cfg.c_feat);
    const double attn_std = 1.0 / std::sqrt(static_cast<double>(cfg.c_feat));
    for (const std::string w : {"wq", "wk", "wv", "wo"})
        ps.add("action.feat.attn." + w,
               nn::normal_init({cfg.c_feat, cfg.c_feat}, attn_std, rng));

    // Detection head (same training partition).
    ps.add("action.det.pair.w",
           nn::he_normal({cfg.c_feat, 2 * cfg.c_feat}, 2 * cfg.c_feat, rng));
    ps.add("action.det.pair.b", Tensor::zeros({cfg.c_feat}));
    conv("action.det.prop.h", {cfg.c_feat, cfg.c_feat, 3, 1}, cfg.c_feat * 3);
    const int a = static_cast<int>(cfg.anchor_frames.size());
    ps.add("action.det.prop.o.w", nn::he_normal({3 * a, cfg.c_feat, 1, 1}, cfg.c_feat, rng));
    Tensor prop_b({3 * a});
    for (int i = 0; i < a; ++i) prop_b[3 * i] = -2.0;  // low initial objectness
    ps.add("action.det.prop.o.b", prop_b);
    const int flat = cfg.c_feat * cfg.crop_len;
    ps.add("action.det.ref.w1", nn::he_normal({flat, cfg.refine_hidden}, flat, rng));
    ps.add("action.det.ref.b1", Tensor::zeros({cfg.refine_hidden}));
    ps.add("action.det.ref.act.w", nn::he_normal({cfg.refine_hidden, 1}, cfg.refine_hidden, rng));
    ps.add("action.det.ref.act.b", Tensor::zeros({1}));
    ps.add("action.det.ref.bnd.w", nn::normal_init({cfg.refine_hidden, 2}, 1e-2, rng));
    ps.add("action.det.ref.bnd.b", Tensor::zeros({2}));
    if (!cfg.single_classes.empty()) {
        const int v = static_cast<int>(cfg.single_classes.size());
        ps.add("action.det.ref.cls_s.w", nn::he_normal({cfg.refine_hidden, v}, cfg.refine_hidden, rng));
        ps.add("action.det.ref.cls_s.b", Tensor::zeros({v}));
    }
    if (!cfg.pair_classes.empty()) {
        const int v = static_cast<int>(cfg.pair_classes.size());
        ps.add("action.det.ref.cls_p.w", nn::he_normal({cfg.refine_hidden, v}, cfg.refine_hidden, rng));
        ps.add("action.det.ref.cls_p.b", Tensor::zeros({v}));
    }
}

static void check_seq(const Var& seq, const ActionConfig& cfg, const char* who) {
    const Tensor& v = seq->value;
    if (v.rank() != 3 || v.dim(0) != cfg.in_ch || v.dim(2) != cfg.n_joints)
        throw std::invalid_argument(std::string(who) + ": expected (in_ch, T, n_joints) input");
    if (v.dim(1) < 2) throw std::invalid_argument(std::string(who) + ": need at least 2 frames");
}

Var frame_difference(const Var& seq) {
    const Tensor& v = seq->value;
    if (v.rank() != 3) throw std::invalid_argument("frame_difference: expected rank-3 input");
    const int c = v.dim(0), t = v.dim(1), j = v.dim(2);
    if (t < 2) throw std::invalid_argument("frame_difference: need at least 2 frames");
    auto tm = nn::permute(seq, {1, 0, 2});  // (T, C, J)
    auto diff = nn::sub(nn::slice0(tm, 1, t - 1), nn::slice0(tm, 0, t - 1));
    auto padded = nn::concat0({nn::constant(Tensor::zeros({1, c, j})), diff});
    return nn::permute(padded, {1, 0, 2});
}

// Shared stream body: per-joint point convs, then joints<->channels transpose
// so the 3x3 conv mixes all joints (co-occurrence), then transpose back.
static Var stream_body(const nn::ParamStore& ps, const std::string& prefix, const Var& x,
                       const ActionConfig& cfg) {
    auto p1 = nn::relu(nn::conv2d(x, ps.get(prefix + ".p1.w"), ps.get(prefix + ".p1.b"),
                                  {1, 1}, {0, 0}));
    auto p2 = nn::relu(nn::conv2d(p1, ps.get(prefix + ".p2.w"), ps.get(prefix + ".p2.b"),
                                  {ActionConfig::kTemporalStride, 1}, {1, 0}));
    auto tj = nn::permute(p2, {2, 1, 0});  // (J, t_f, c_feat)
    auto cc = nn::relu(nn::conv2d(tj, ps.get(prefix + ".cc.w"), ps.get(prefix + ".cc.b"),
                                  {1, 1}, {1, 1}));
    return nn::permute(cc, {2, 1, 0});  // (c_feat, t_f, J)
}

Var spatial_stream(const nn::ParamStore& ps, const Var& seq, const ActionConfig& cfg) {
    check_seq(seq, cfg, "spatial_stream");
    return stream_body(ps, "action.feat.s", seq, cfg);
}

Var temporal_stream(const nn::ParamStore& ps, const Var& seq, const ActionConfig& cfg) {
    check_seq(seq, cfg, "temporal_stream");
    return stream_body(ps, "action.feat.t", frame_difference(seq), cfg);
}

StreamFeatures stream_features(const nn::ParamStore& ps, const Var& seq,
                               const ActionConfig& cfg) {
    return {spatial_stream(ps, seq, cfg), temporal_stream(ps, seq, cfg)};
}

Var attention_mask(const StreamFeatures& f, const Var& w_m, const Var& b_m) {
    if (!f.f_s->value.same_shape(f.f_t->value))
        throw std::invalid_argument("attention_mask: stream shapes differ");
    auto cat = nn::concat0({f.f_s, f.f_t});
    auto gate = nn::sigmoid(nn::conv2d(cat, w_m, b_m, {1, 1}, {0, 0}));  // (1, t_f, J)
    return nn::mul_bcast0(cat, gate);
}

Var temporal_self_attention(const nn::ParamStore& ps, const Var& x, const ActionConfig& cfg,
                            AttentionTrace* trace) {
    const Tensor& v = x->value;
    if (v.rank() != 2) throw std::invalid_argument("temporal_self_attention: expected (c, t_f)");
    const int c = v.dim(0), t = v.dim(1);
    if (cfg.heads <= 0 || c % cfg.heads != 0)
        throw std::invalid_argument("temporal_self_attention: head count must divide width");
    const int dh = c / cfg.heads;
    auto xt = nn::permute(x, {1, 0});  // (t_f, c)
    auto q = nn::matmul(xt, ps.get("action.feat.attn.wq"));
    auto k = nn::matmul(xt, ps.get("action.feat.attn.wk"));
    auto val = nn::matmul(xt, ps.get("action.feat.attn.wv"));
    std::vector<Var> heads;
    for (int h = 0; h < cfg.heads; ++h) {
        auto qh = nn::slice_cols(q, h * dh, dh);
        auto kh = nn::slice_cols(k, h * dh, dh);
        auto vh = nn::slice_cols(val, h * dh, dh);
        auto scores = nn::scale(nn::matmul(qh, nn::permute(kh, {1, 0})), 1.0 / std::sqrt(dh));
        auto weights = nn::softmax_rows(scores, t);
        if (trace) trace->head_weights.push_back(weights);
        heads.push_back(nn::matmul(weights, vh));
    }
    auto out = nn::matmul(nn::concat_cols(heads), ps.get("action.feat.attn.wo"));
    if (trace) trace->pre_residual = nn::permute(out, {1, 0});
    return nn::permute(nn::add(xt, out), {1, 0});
}

Var person_features(const nn::ParamStore& ps, const Var& seq, const ActionConfig& cfg) {
    auto streams = stream_features(ps, seq, cfg);
    Var cat = cfg.attention
                  ? attention_mask(streams, ps.get("action.feat.mask.w"), ps.get("action.feat.mask.b"))
                  : nn::concat0({streams.f_s, streams.f_t});
    auto fused = nn::relu(nn::conv2d(cat, ps.get("action.feat.fuse.w"),
                                     ps.get("action.feat.fuse.b"), {1, 1}, {0, 0}));
    const int t_f = fused->value.dim(1);
    auto pooled = nn::reshape(
        nn::reduce_max_rows(nn::reshape(fused, {cfg.c_feat * t_f, cfg.n_joints}), cfg.n_joints),
        {cfg.c_feat, t_f});
    if (!cfg.attention) return pooled;
    return temporal_self_attention(ps, pooled, cfg);
}

}  // namespace rfad::action
