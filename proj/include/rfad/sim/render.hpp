#pragma once

#include <iosfwd>

#include "rfad/sim/scenario.hpp"

namespace rfad::sim {

struct HeatmapFrame {
    nn::Tensor hor;  // (H_h, W_h): rows = y cells, cols = x cells
    nn::Tensor ver;  // (H_v, W_v): rows = z cells, cols = x cells
};

struct HeatmapStream {
    std::vector<HeatmapFrame> frames;
};

struct RenderParams {
    SceneGrids grids;
    double sigma_cells = 1.5;  // Gaussian splat width
    double p_spec = 0.2;       // per-joint per-frame dropout (specularity)
    double noise = 0.02;       // additive Gaussian level, clipped at 0
    uint64_t seed = 0;
};

// Per-joint splat amplitude: torso 1.0, limbs 0.5, extremities 0.25.
double joint_amplitude(int joint_id);

// Gaussian splats of all joints onto both grids, with specularity dropout,
// wall attenuation beyond sc.wall.x, and clipped additive noise. Deterministic
// per frame given params.seed (frames use independent derived streams).
HeatmapStream render_heatmaps(const std::vector<SkeletonFrame>& frames, const Scenario& sc,
                              const RenderParams& params);

// Binary heatmap stream: magic "RFHM", u16 version, u32 T/H_h/W_h/H_v/W_v,
// then per frame the horizontal grid then the vertical grid, row-major
// little-endian f32.
void write_heatmap_file(std::ostream& out, const HeatmapStream& hs);
HeatmapStream read_heatmap_file(std::istream& in);  // throws FormatError

void save_heatmap_file(const std::string& path, const HeatmapStream& hs);
HeatmapStream load_heatmap_file(const std::string& path);

}  // namespace rfad::sim
