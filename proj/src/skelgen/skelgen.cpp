#include "rfad/skelgen/skelgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rfad::skelgen {

using nn::Tensor;
using nn::Var;

namespace {

constexpr int kBlocks = 4;
constexpr int kChannels[kBlocks] = {8, 16, 32, 32};
constexpr std::array<int, 3> kStrides[kBlocks] = {{1, 2, 2}, {1, 2, 2}, {2, 1, 1}, {2, 1, 1}};

int chain_out(int size, int axis) {
    for (const auto& s : kStrides) size = (size + 2 - 3) / s[static_cast<size_t>(axis)] + 1;
    return size;
}

Var conv_block(const Var& x, const nn::ParamStore& ps, const std::string& prefix, int block) {
    return nn::relu(nn::conv3d(x, ps.get(prefix + ".w"), ps.get(prefix + ".b"),
                               kStrides[block], {1, 1, 1}));
}

void init_stream(nn::ParamStore& ps, const std::string& prefix, std::mt19937_64& rng) {
    int cin = 1;
    for (int b = 0; b < kBlocks; ++b) {
        const int cout = kChannels[b];
        const std::string name = prefix + ".c" + std::to_string(b + 1);
        ps.add(name + ".w", nn::he_normal({cout, cin, 3, 3, 3}, cin * 27, rng));
        ps.add(name + ".b", Tensor({cout}));
        cin = cout;
    }
}

}  // namespace

int SkelgenConfig::t_feat() const { return chain_out(window, 0); }
int SkelgenConfig::feat_h() const { return chain_out(grids.y.cells, 1); }
int SkelgenConfig::feat_w() const { return chain_out(grids.x.cells, 2); }
int SkelgenConfig::feat_vh() const { return chain_out(grids.z.cells, 1); }

void init_skeleton_params(nn::ParamStore& ps, const SkelgenConfig& cfg, uint64_t seed) {
    std::mt19937_64 rng(seed);
    init_stream(ps, "skelgen.hor", rng);
    init_stream(ps, "skelgen.ver", rng);

    const int c = kChannels[kBlocks - 1];
    ps.add("skelgen.rpn.w", nn::he_normal({5, c, 1, 3, 3}, c * 9, rng));
    Tensor rpn_b({5});
    rpn_b[0] = -2.0;  // start with low objectness so random boxes don't fire
    ps.add("skelgen.rpn.b", rpn_b);

    ps.add("skelgen.pose.mix.w", nn::he_normal({2 * c, 2 * c, 3, 3}, 2 * c * 9, rng));
    ps.add("skelgen.pose.mix.b", Tensor({2 * c}));
    const int head = kNumJoints * cfg.depth_bins;
    ps.add("skelgen.pose.head.w", nn::he_normal({head, 2 * c, 1, 1}, 2 * c, rng));
    ps.add("skelgen.pose.head.b", Tensor({head}));
}

FeatureMaps feature_net(const Var& hor_window, const Var& ver_window, const nn::ParamStore& ps,
                        const SkelgenConfig& cfg) {
    const Tensor& hv = hor_window->value;
    const Tensor& vv = ver_window->value;
    if (hv.rank() != 4 || hv.dim(0) != 1 || hv.dim(1) != cfg.window ||
        hv.dim(2) != cfg.grids.y.cells || hv.dim(3) != cfg.grids.x.cells)
        throw std::invalid_argument("feature_net: horizontal window shape mismatch");
    if (vv.rank() != 4 || vv.dim(0) != 1 || vv.dim(1) != cfg.window ||
        vv.dim(2) != cfg.grids.z.cells || vv.dim(3) != cfg.grids.x.cells)
        throw std::invalid_argument("feature_net: vertical window shape mismatch");

    FeatureMaps fm;
    fm.hor = hor_window;
    fm.ver = ver_window;
    for (int b = 0; b < kBlocks; ++b) {
        fm.hor = conv_block(fm.hor, ps, "skelgen.hor.c" + std::to_string(b + 1), b);
        fm.ver = conv_block(fm.ver, ps, "skelgen.ver.c" + std::to_string(b + 1), b);
    }
    return fm;
}

Var rpn_forward(const FeatureMaps& fm, const nn::ParamStore& ps) {
    return nn::conv3d(fm.hor, ps.get("skelgen.rpn.w"), ps.get("skelgen.rpn.b"), {1, 1, 1},
                      {0, 1, 1});
}

double box_iou(const RegionProposal& a, const RegionProposal& b) {
    const double ix = std::max(0.0, std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0()));
    const double iy = std::max(0.0, std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0()));
    const double inter = ix * iy;
    const double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<RegionProposal> propose_regions(const Tensor& rpn_out, const SkelgenConfig& cfg,
                                            double nms_iou, double score_thresh) {
    if (rpn_out.rank() != 4 || rpn_out.dim(0) != 5)
        throw std::invalid_argument("propose_regions: expected (5, T', H', W')");
    const int T = rpn_out.dim(1), H = rpn_out.dim(2), W = rpn_out.dim(3);
    const int64_t plane = static_cast<int64_t>(T) * H * W;
    const double A = cfg.anchor_cells;
    const double wmax = cfg.grids.x.cells - 0.5, hmax = cfg.grids.y.cells - 0.5;

    std::vector<RegionProposal> kept;
    for (int t = 0; t < T; ++t) {
        std::vector<RegionProposal> cands;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const int64_t at = (static_cast<int64_t>(t) * H + y) * W + x;
                const double score = 1.0 / (1.0 + std::exp(-rpn_out[at]));
                if (score < score_thresh) continue;
                RegionProposal rp;
                rp.t_index = t;
                rp.score = score;
                const double ax = SkelgenConfig::kSpatialStride * x;
                const double ay = SkelgenConfig::kSpatialStride * y;
                rp.cx = ax + rpn_out[plane + at] * A;
                rp.cy = ay + rpn_out[2 * plane + at] * A;
                rp.w = A * std::exp(std::clamp(rpn_out[3 * plane + at], -4.0, 4.0));
                rp.h = A * std::exp(std::clamp(rpn_out[4 * plane + at], -4.0, 4.0));
                // clip to grid bounds (cell-edge space)
                const double x0 = std::max(-0.5, rp.x0()), x1 = std::min(wmax, rp.x1());
                const double y0 = std::max(-0.5, rp.y0()), y1 = std::min(hmax, rp.y1());
                if (x1 - x0 < 1e-6 || y1 - y0 < 1e-6) continue;
                rp.cx = (x0 + x1) / 2.0;
                rp.w = x1 - x0;
                rp.cy = (y0 + y1) / 2.0;
                rp.h = y1 - y0;
                cands.push_back(rp);
            }
        std::stable_sort(cands.begin(), cands.end(),
                         [](const RegionProposal& a, const RegionProposal& b) {
                             return a.score > b.score;
                         });
        std::vector<RegionProposal> step_kept;
        for (const auto& c : cands) {
            if (static_cast<int>(step_kept.size()) >= cfg.max_per_step) break;
            bool suppressed = false;
            for (const auto& k : step_kept)
                if (box_iou(c, k) >= nms_iou) {
                    suppressed = true;
                    break;
                }
            if (!suppressed) step_kept.push_back(c);
        }
        kept.insert(kept.end(), step_kept.begin(), step_kept.end());
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [](const RegionProposal& a, const RegionProposal& b) {
                         return a.score > b.score;
                     });
    return kept;
}

Var soft_argmax(const Var& volume, double tau) {
    const Tensor& v = volume->value;
    if (v.rank() != 3) throw std::invalid_argument("soft_argmax: expected (D,H,W)");
    if (!(tau > 0.0)) throw std::invalid_argument("soft_argmax: temperature must be positive");
    for (int64_t i = 0; i < v.size(); ++i)
        if (v[i] < 0.0) throw std::invalid_argument("soft_argmax: negative entry");
    const int D = v.dim(0), H = v.dim(1), W = v.dim(2);
    const int64_t vol = static_cast<int64_t>(D) * H * W;
    Tensor coords({static_cast<int>(vol), 3});
    int64_t i = 0;
    for (int d = 0; d < D; ++d)
        for (int h = 0; h < H; ++h)
            for (int w = 0; w < W; ++w, ++i) {
                coords[i * 3 + 0] = d;
                coords[i * 3 + 1] = h;
                coords[i * 3 + 2] = w;
            }
    Var p = nn::reshape(volume, {1, static_cast<int>(vol)});
    if (tau != 1.0) p = nn::pow_scalar(p, 1.0 / tau);
    p = nn::normalize_rows(p, static_cast<int>(vol));  // throws on an all-zero volume
    return nn::reshape(nn::matmul(p, nn::constant(std::move(coords))), {3});
}

PoseOutput estimate_pose(const FeatureMaps& fm, const RegionProposal& rp,
                         const nn::ParamStore& ps, const SkelgenConfig& cfg) {
    const Tensor& hv = fm.hor->value;
    if (hv.rank() != 4) throw std::invalid_argument("estimate_pose: bad feature rank");
    const int C = hv.dim(0), T = hv.dim(1), H = hv.dim(2), W = hv.dim(3);
    const int VH = fm.ver->value.dim(2);
    if (rp.t_index < 0 || rp.t_index >= T)
        throw std::invalid_argument("estimate_pose: timestep out of range");
    if (!(rp.w > 0.0) || !(rp.h > 0.0))
        throw std::invalid_argument("estimate_pose: degenerate box");

    const double s = SkelgenConfig::kSpatialStride;
    const double cxf = rp.cx / s, cyf = rp.cy / s, wf = rp.w / s, hf = rp.h / s;
    const int R = cfg.roi;

    // per-timestep slices of both views
    Var hor_t = nn::reshape(
        nn::slice0(nn::permute(fm.hor, {1, 0, 2, 3}), rp.t_index, 1), {C, H, W});
    Var ver_t = nn::reshape(
        nn::slice0(nn::permute(fm.ver, {1, 0, 2, 3}), rp.t_index, 1), {C, VH, W});

    Var hor_crop = nn::roi_bilinear(hor_t, cxf, cyf, wf, hf, R, R);
    Var ver_crop = nn::reshape(
        nn::crop_resize_cols(nn::reshape(ver_t, {C * VH, W}), cxf - wf / 2.0, cxf + wf / 2.0, R),
        {C, VH, R});
    // resample the vertical rows onto the crop height so both views align
    Var ver_rows = nn::reshape(
        nn::resample_rows(nn::reshape(nn::permute(ver_crop, {1, 0, 2}), {VH, C * R}),
                          [&] {
                              std::vector<double> t(static_cast<size_t>(VH));
                              for (int i = 0; i < VH; ++i) t[static_cast<size_t>(i)] = i;
                              return t;
                          }(),
                          [&] {
                              std::vector<double> t(static_cast<size_t>(R));
                              for (int i = 0; i < R; ++i)
                                  t[static_cast<size_t>(i)] = (i + 0.5) * VH / R - 0.5;
                              return t;
                          }()),
        {R, C, R});
    Var ver_aligned = nn::permute(ver_rows, {1, 0, 2});  // (C,R,R)

    Var merged = nn::concat0({hor_crop, ver_aligned});  // (2C,R,R)
    Var mixed = nn::relu(nn::conv2d(merged, ps.get("skelgen.pose.mix.w"),
                                    ps.get("skelgen.pose.mix.b"), {1, 1}, {1, 1}));
    Var volumes = nn::conv2d(mixed, ps.get("skelgen.pose.head.w"), ps.get("skelgen.pose.head.b"),
                             {1, 1}, {0, 0});  // (N_j*D, R, R)

    const int D = cfg.depth_bins;
    const int row = D * R * R;
    Var logits = nn::reshape(volumes, {kNumJoints, row});
    Var dist = nn::softmax_rows(logits, row);
    Var conf = nn::reduce_max_rows(dist, row);

    Var q = dist;
    if (cfg.tau != 1.0)
        q = nn::normalize_rows(nn::pow_scalar(dist, 1.0 / cfg.tau), row);
    // columns: x from crop col, y from crop row, z from depth bin
    Tensor coords({row, 3});
    int64_t i = 0;
    for (int d = 0; d < D; ++d)
        for (int h = 0; h < R; ++h)
            for (int w = 0; w < R; ++w, ++i) {
                coords[i * 3 + 0] = w;
                coords[i * 3 + 1] = h;
                coords[i * 3 + 2] = d;
            }
    Var cells = nn::matmul(q, nn::constant(std::move(coords)));  // (N_j,3)

    // affine from crop cells to meters; the box is a constant here
    const double cell = cfg.grids.x.cell;
    const double ax = s * (wf / R) * cell;
    const double bx = cfg.grids.x.origin + (s * (cxf - wf / 2.0 + 0.5 * wf / R - 0.5) + 0.5) * cell;
    const double ay = s * (hf / R) * cfg.grids.y.cell;
    const double by = cfg.grids.y.origin + (s * (cyf - hf / 2.0 + 0.5 * hf / R - 0.5) + 0.5) * cfg.grids.y.cell;
    const double az = cfg.grids.z.extent() / D;
    const double bz = cfg.grids.z.origin + 0.5 * az;
    Tensor scale_col({3}), off_col({3});
    scale_col[0] = ax;
    scale_col[1] = ay;
    scale_col[2] = az;
    off_col[0] = bx;
    off_col[1] = by;
    off_col[2] = bz;

    PoseOutput out;
    out.coords = nn::affine_cols(cells, scale_col, off_col);
    out.conf = conf;
    return out;
}

Var pose_window(const std::vector<PoseOutput>& steps, const std::vector<double>& step_frames,
                int frames) {
    if (steps.empty() || steps.size() != step_frames.size())
        throw std::invalid_argument("pose_window: step count mismatch");
    std::vector<Var> rows;
    rows.reserve(steps.size());
    for (const auto& s : steps) {
        Var chan = nn::concat0({nn::permute(s.coords, {1, 0}),            // (3,N_j)
                                nn::reshape(s.conf, {1, kNumJoints})});   // + (1,N_j)
        rows.push_back(nn::reshape(chan, {1, 4 * kNumJoints}));
    }
    std::vector<double> dst(static_cast<size_t>(frames));
    for (int t = 0; t < frames; ++t) dst[static_cast<size_t>(t)] = t;
    Var dense = nn::resample_rows(nn::concat0(rows), step_frames, dst);  // (frames, 4*N_j)
    return nn::permute(nn::reshape(dense, {frames, 4, kNumJoints}), {1, 0, 2});
}

}  // namespace rfad::skelgen
