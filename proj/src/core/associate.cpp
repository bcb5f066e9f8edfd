#include "rfad/core/associate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rfad {

int GridAxis::cell_index(double m) const {
    int i = static_cast<int>(std::floor((m - origin) / cell));
    return std::clamp(i, 0, cells - 1);
}

Vec3 torso_centroid(const std::vector<Joint>& joints) {
    const Joint& n = joints[kNeck];
    const Joint& lh = joints[kLHip];
    const Joint& rh = joints[kRHip];
    return {(n.x + lh.x + rh.x) / 3.0, (n.y + lh.y + rh.y) / 3.0, (n.z + lh.z + rh.z) / 3.0};
}

namespace {
double dist3(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}
}  // namespace

std::vector<Track> associate_frames(const std::vector<SkeletonFrame>& frames, double gate_dist,
                                    int max_gap) {
    if (!(gate_dist > 0.0)) throw std::invalid_argument("associate_frames: gate_dist must be positive");
    std::vector<Track> tracks;
    std::vector<Vec3> last_centroid;  // parallel to tracks

    int prev_frame = -1;
    for (const auto& frame : frames) {
        if (frame.frame_index <= prev_frame)
            throw std::invalid_argument("associate_frames: frames must be ordered by frame_index");
        prev_frame = frame.frame_index;

        struct Cand {
            double dist;
            int track;
            int det;
        };
        std::vector<Cand> cands;
        for (size_t ti = 0; ti < tracks.size(); ++ti) {
            if (frame.frame_index - tracks[ti].last_frame() > max_gap) continue;  // closed
            for (size_t di = 0; di < frame.persons.size(); ++di) {
                const double d = dist3(last_centroid[ti], torso_centroid(frame.persons[di].joints));
                if (d <= gate_dist) cands.push_back({d, static_cast<int>(ti), static_cast<int>(di)});
            }
        }
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.dist != b.dist) return a.dist < b.dist;
            if (a.track != b.track) return a.track < b.track;
            return a.det < b.det;
        });

        std::vector<char> track_used(tracks.size(), 0), det_used(frame.persons.size(), 0);
        for (const auto& c : cands) {
            if (track_used[static_cast<size_t>(c.track)] || det_used[static_cast<size_t>(c.det)]) continue;
            track_used[static_cast<size_t>(c.track)] = 1;
            det_used[static_cast<size_t>(c.det)] = 1;
            tracks[static_cast<size_t>(c.track)].entries.push_back(
                {frame.frame_index, frame.persons[static_cast<size_t>(c.det)].joints});
            last_centroid[static_cast<size_t>(c.track)] =
                torso_centroid(frame.persons[static_cast<size_t>(c.det)].joints);
        }
        for (size_t di = 0; di < frame.persons.size(); ++di) {
            if (det_used[di]) continue;
            Track t;
            t.person_id = static_cast<int>(tracks.size());
            t.entries.push_back({frame.frame_index, frame.persons[di].joints});
            tracks.push_back(std::move(t));
            last_centroid.push_back(torso_centroid(frame.persons[di].joints));
        }
    }
    return tracks;
}

}  // namespace rfad
