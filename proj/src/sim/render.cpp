#include "rfad/sim/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

#include "rfad/core/binio.hpp"
#include "rfad/core/error.hpp"

namespace rfad::sim {

using io::read_f32;
using io::read_u16;
using io::read_u32;
using io::write_f32;
using io::write_u16;
using io::write_u32;

namespace {

constexpr char kMagic[4] = {'R', 'F', 'H', 'M'};
constexpr uint16_t kVersion = 1;
constexpr uint64_t kFrameStride = 0x9E3779B97F4A7C15ULL;

// Splat a truncated Gaussian (4 sigma radius) onto grid(row=cv, col=cu).
void splat(nn::Tensor& grid, double cu, double cv, double amp, double sigma) {
    const int rows = grid.dim(0), cols = grid.dim(1);
    const double radius = 4.0 * sigma;
    const int u0 = std::max(0, static_cast<int>(std::ceil(cu - radius)));
    const int u1 = std::min(cols - 1, static_cast<int>(std::floor(cu + radius)));
    const int v0 = std::max(0, static_cast<int>(std::ceil(cv - radius)));
    const int v1 = std::min(rows - 1, static_cast<int>(std::floor(cv + radius)));
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int v = v0; v <= v1; ++v)
        for (int u = u0; u <= u1; ++u) {
            const double d2 = (u - cu) * (u - cu) + (v - cv) * (v - cv);
            if (d2 > radius * radius) continue;
            grid.at({v, u}) += amp * std::exp(-d2 * inv);
        }
}

}  // namespace

double joint_amplitude(int joint_id) {
    switch (joint_id) {
        case kNeck:
        case kLShoulder:
        case kRShoulder:
        case kLHip:
        case kRHip: return 1.0;  // torso
        case kLElbow:
        case kRElbow:
        case kLKnee:
        case kRKnee: return 0.5;  // limbs
        case kHead:
        case kLWrist:
        case kRWrist:
        case kLAnkle:
        case kRAnkle: return 0.25;  // extremities
        default: throw std::invalid_argument("joint_amplitude: bad joint id");
    }
}

HeatmapStream render_heatmaps(const std::vector<SkeletonFrame>& frames, const Scenario& sc,
                              const RenderParams& params) {
    if (params.sigma_cells <= 0) throw std::invalid_argument("sigma_cells must be positive");
    if (params.p_spec < 0 || params.p_spec > 1)
        throw std::invalid_argument("p_spec must be in [0,1]");
    if (params.noise < 0) throw std::invalid_argument("noise level must be >= 0");

    const auto& g = params.grids;
    HeatmapStream hs;
    hs.frames.reserve(frames.size());
    for (const auto& frame : frames) {
        // Independent stream per frame index: rendering order never matters.
        std::mt19937_64 rng(params.seed ^
                            (static_cast<uint64_t>(frame.frame_index) * kFrameStride + 1));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);

        HeatmapFrame hf;
        hf.hor = nn::Tensor::zeros({g.y.cells, g.x.cells});
        hf.ver = nn::Tensor::zeros({g.z.cells, g.x.cells});
        for (const auto& person : frame.persons) {
            const int nj = static_cast<int>(person.joints.size());
            if (nj < 1 || nj > kNumJoints)
                throw std::invalid_argument("render_heatmaps: pose must have 1..14 joints");
            for (int j = 0; j < nj; ++j) {
                const Joint& jt = person.joints[static_cast<size_t>(j)];
                const double drop = unif(rng);  // always drawn, keeps streams aligned
                if (drop < params.p_spec) continue;
                double amp = joint_amplitude(j);
                if (sc.wall.present && jt.x > sc.wall.x) amp *= sc.wall.alpha;
                const double cx = g.x.meters_to_cell(jt.x);
                const double cy = g.y.meters_to_cell(jt.y);
                const double cz = g.z.meters_to_cell(jt.z);
                splat(hf.hor, cx, cy, amp, params.sigma_cells);
                splat(hf.ver, cx, cz, amp, params.sigma_cells);
            }
        }
        if (params.noise > 0) {
            for (int64_t i = 0; i < hf.hor.size(); ++i)
                hf.hor.data()[i] = std::max(0.0, hf.hor.data()[i] + params.noise * gauss(rng));
            for (int64_t i = 0; i < hf.ver.size(); ++i)
                hf.ver.data()[i] = std::max(0.0, hf.ver.data()[i] + params.noise * gauss(rng));
        }
        hs.frames.push_back(std::move(hf));
    }
    return hs;
}

void write_heatmap_file(std::ostream& out, const HeatmapStream& hs) {
    const int t = static_cast<int>(hs.frames.size());
    const int hh = t ? hs.frames[0].hor.dim(0) : 0;
    const int wh = t ? hs.frames[0].hor.dim(1) : 0;
    const int hv = t ? hs.frames[0].ver.dim(0) : 0;
    const int wv = t ? hs.frames[0].ver.dim(1) : 0;
    out.write(kMagic, 4);
    write_u16(out, kVersion);
    write_u32(out, static_cast<uint32_t>(t));
    write_u32(out, static_cast<uint32_t>(hh));
    write_u32(out, static_cast<uint32_t>(wh));
    write_u32(out, static_cast<uint32_t>(hv));
    write_u32(out, static_cast<uint32_t>(wv));
    for (const auto& fr : hs.frames) {
        if (fr.hor.dim(0) != hh || fr.hor.dim(1) != wh || fr.ver.dim(0) != hv ||
            fr.ver.dim(1) != wv)
            throw std::invalid_argument("write_heatmap_file: inconsistent frame shapes");
        for (int64_t i = 0; i < fr.hor.size(); ++i)
            write_f32(out, static_cast<float>(fr.hor.data()[i]));
        for (int64_t i = 0; i < fr.ver.size(); ++i)
            write_f32(out, static_cast<float>(fr.ver.data()[i]));
    }
    if (!out) throw std::runtime_error("write_heatmap_file: stream failure");
}

HeatmapStream read_heatmap_file(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("heatmap file: bad magic");
    const uint16_t version = read_u16(in);
    if (version != kVersion)
        throw FormatError("heatmap file: unsupported version " + std::to_string(version));
    const uint32_t t = read_u32(in);
    const uint32_t hh = read_u32(in);
    const uint32_t wh = read_u32(in);
    const uint32_t hv = read_u32(in);
    const uint32_t wv = read_u32(in);
    constexpr uint32_t kMaxDim = 4096;
    if (t > 1u << 20 || hh > kMaxDim || wh > kMaxDim || hv > kMaxDim || wv > kMaxDim)
        throw FormatError("heatmap file: implausible dimensions");
    if (t > 0 && (hh == 0 || wh == 0 || hv == 0 || wv == 0))
        throw FormatError("heatmap file: zero grid dimension");

    HeatmapStream hs;
    hs.frames.reserve(t);
    for (uint32_t k = 0; k < t; ++k) {
        HeatmapFrame hf;
        hf.hor = nn::Tensor::zeros({static_cast<int>(hh), static_cast<int>(wh)});
        hf.ver = nn::Tensor::zeros({static_cast<int>(hv), static_cast<int>(wv)});
        for (int64_t i = 0; i < hf.hor.size(); ++i) {
            const float v = read_f32(in);
            if (!std::isfinite(v) || v < 0.0f)
                throw FormatError("heatmap file: invalid cell value");
            hf.hor.data()[i] = v;
        }
        for (int64_t i = 0; i < hf.ver.size(); ++i) {
            const float v = read_f32(in);
            if (!std::isfinite(v) || v < 0.0f)
                throw FormatError("heatmap file: invalid cell value");
            hf.ver.data()[i] = v;
        }
        hs.frames.push_back(std::move(hf));
    }
    if (in.peek() != std::istream::traits_type::eof())
        throw FormatError("heatmap file: trailing bytes");
    return hs;
}

void save_heatmap_file(const std::string& path, const HeatmapStream& hs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_heatmap_file(out, hs);
}

HeatmapStream load_heatmap_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return read_heatmap_file(in);
}

}  // namespace rfad::sim
