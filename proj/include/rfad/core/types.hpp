#pragma once

#include <vector>

#include "rfad/nn/tensor.hpp"

namespace rfad {

constexpr int kNumJoints = 14;
constexpr int kFps = 30;

// Joint order is fixed across the whole pipeline.
enum JointId : int {
    kHead = 0,
    kNeck,
    kLShoulder,
    kRShoulder,
    kLElbow,
    kRElbow,
    kLWrist,
    kRWrist,
    kLHip,
    kRHip,
    kLKnee,
    kRKnee,
    kLAnkle,
    kRAnkle,
};

struct Joint {
    double x = 0.0, y = 0.0, z = 0.0;  // meters, scene coordinates
    double confidence = 0.0;           // [0,1]

    bool operator==(const Joint&) const = default;
};

struct PersonPose {
    int person_id = -1;
    std::vector<Joint> joints;  // kNumJoints entries

    bool operator==(const PersonPose&) const = default;
};

struct SkeletonFrame {
    int frame_index = 0;
    std::vector<PersonPose> persons;

    bool operator==(const SkeletonFrame&) const = default;
};

// Dense per-person window: channels (x, y, z, confidence) x T frames x joints.
struct SkeletonSequence {
    int person_id = -1;
    int start_frame = 0;
    nn::Tensor values;  // shape (4, T, N_j)

    int frames() const { return values.dim(1); }
    int joints() const { return values.dim(2); }
};

// Half-open frame interval [start_frame, end_frame).
struct ActionSegment {
    std::vector<int> participants;  // 1 or 2 ids, ascending
    int class_id = 0;
    int start_frame = 0;
    int end_frame = 0;
    double score = 1.0;  // 1.0 for ground truth

    bool operator==(const ActionSegment&) const = default;
};

struct TrackEntry {
    int frame_index = 0;
    std::vector<Joint> joints;
};

struct Track {
    int person_id = -1;
    std::vector<TrackEntry> entries;  // strictly increasing frame indices

    int first_frame() const { return entries.front().frame_index; }
    int last_frame() const { return entries.back().frame_index; }
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

// Uniform metric axis: cell i covers meters [origin + i*cell, origin + (i+1)*cell).
struct GridAxis {
    double origin = 0.0;
    double cell = 0.1;  // meters per cell (~10 cm depth resolution)
    int cells = 64;

    double extent() const { return cell * cells; }
    // Continuous cell-center coordinate: 0.0 at the center of cell 0.
    double meters_to_cell(double m) const { return (m - origin) / cell - 0.5; }
    double cell_to_meters(double u) const { return origin + (u + 0.5) * cell; }
    int cell_index(double m) const;  // clamped containing cell
};

// Shared calibration of both heatmap views: horizontal grid is (y rows, x cols),
// vertical grid is (z rows, x cols).
struct SceneGrids {
    GridAxis x{0.0, 0.1, 64};
    GridAxis y{0.0, 0.1, 64};
    GridAxis z{0.0, 0.1, 32};
};

Vec3 torso_centroid(const std::vector<Joint>& joints);  // mean of neck and both hips

}  // namespace rfad
