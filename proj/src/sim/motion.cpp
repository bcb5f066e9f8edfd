#include "rfad/sim/motion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

namespace rfad::sim {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct LocalOffset {
    double fx = 0.0;  // forward, meters
    double ly = 0.0;  // lateral (left positive)
    double dz = 0.0;  // vertical
};

struct TemplateJoint {
    double z;
    double ly;
};

// Upright rest pose in the person's local frame (facing +forward).
constexpr std::array<TemplateJoint, kNumJoints> kRestPose = {{
    {1.65, 0.00},   // head
    {1.50, 0.00},   // neck
    {1.45, 0.18},   // l shoulder
    {1.45, -0.18},  // r shoulder
    {1.20, 0.22},   // l elbow
    {1.20, -0.22},  // r elbow
    {0.95, 0.24},   // l wrist
    {0.95, -0.24},  // r wrist
    {0.95, 0.10},   // l hip
    {0.95, -0.10},  // r hip
    {0.50, 0.12},   // l knee
    {0.50, -0.12},  // r knee
    {0.08, 0.13},   // l ankle
    {0.08, -0.13},  // r ankle
}};

double smoothstep(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * (3.0 - 2.0 * u);
}

// Attack/hold/release envelope over normalized progress p in (0,1).
double envelope(double p) { return std::clamp(std::min(p / 0.15, (1.0 - p) / 0.15), 0.0, 1.0); }

void walk_offsets(double walked, std::array<LocalOffset, kNumJoints>& off) {
    const double theta = 2.0 * kPi * walked / 0.66;  // one stride per 0.66 m
    const double s = std::sin(theta), so = std::sin(theta + kPi);
    off[kLAnkle].fx += 0.25 * s;
    off[kRAnkle].fx += 0.25 * so;
    off[kLAnkle].dz += 0.05 * std::max(0.0, s);
    off[kRAnkle].dz += 0.05 * std::max(0.0, so);
    off[kLKnee].fx += 0.12 * s;
    off[kRKnee].fx += 0.12 * so;
    off[kLWrist].fx += 0.15 * so;  // arms counter-swing
    off[kRWrist].fx += 0.15 * s;
    off[kLElbow].fx += 0.08 * so;
    off[kRElbow].fx += 0.08 * s;
}

void sit_offsets(double p, std::array<LocalOffset, kNumJoints>& off) {
    const double d = p < 0.5 ? smoothstep(p / 0.5) : smoothstep((1.0 - p) / 0.5);
    for (int j = kHead; j <= kRHip; ++j) off[j].dz -= 0.45 * d;
    off[kLWrist].fx += 0.10 * d;  // hands to lap
    off[kRWrist].fx += 0.10 * d;
    off[kLKnee].fx += 0.28 * d;
    off[kRKnee].fx += 0.28 * d;
    off[kLKnee].dz -= 0.05 * d;
    off[kRKnee].dz -= 0.05 * d;
}

void wave_offsets(double p, int f_rel, std::array<LocalOffset, kNumJoints>& off) {
    const double r = envelope(p);
    const double osc = std::sin(2.0 * kPi * 1.5 * f_rel / kFps);
    off[kRWrist].dz += 0.75 * r;
    off[kRWrist].ly += 0.22 * r * osc;
    off[kRElbow].dz += 0.30 * r;
    off[kRElbow].ly += 0.10 * r * osc;
}

void point_offsets(double p, std::array<LocalOffset, kNumJoints>& off) {
    const double r = envelope(p);
    off[kRWrist].fx += 0.55 * r;
    off[kRWrist].dz += 0.50 * r;
    off[kRElbow].fx += 0.28 * r;
    off[kRElbow].dz += 0.25 * r;
}

void throw_offsets(double p, std::array<LocalOffset, kNumJoints>& off) {
    double wfx, wdz;
    if (p < 0.45) {  // wind up, hand back and high
        const double u = smoothstep(p / 0.45);
        wfx = -0.30 * u;
        wdz = 0.55 * u;
    } else {  // release, hand forward
        const double u = smoothstep((p - 0.45) / 0.55);
        wfx = -0.30 + 0.90 * u;
        wdz = 0.55 - 0.05 * u;
    }
    off[kRWrist].fx += wfx;
    off[kRWrist].dz += wdz;
    off[kRElbow].fx += 0.5 * wfx;
    off[kRElbow].dz += 0.5 * wdz;
}

void shake_offsets(double p, int f_rel, std::array<LocalOffset, kNumJoints>& off) {
    const double r = envelope(p);
    const double osc = std::sin(2.0 * kPi * 2.0 * f_rel / kFps);
    off[kRWrist].fx += 0.50 * r;
    off[kRWrist].dz += 0.10 * r + 0.04 * r * osc;
    off[kRElbow].fx += 0.25 * r;
    off[kRElbow].dz += 0.05 * r + 0.02 * r * osc;
}

struct EffectiveAction {
    const ActionScript* script = nullptr;
    int other = -1;  // interaction counterpart seen from this person
};

struct PersonState {
    double x = 0.0, y = 0.0;
    double phi = 0.0;  // facing angle
    double walked = 0.0;
    const ActionScript* cur_walk = nullptr;
    double walk_sx = 0.0, walk_sy = 0.0;
};

void validate(const Scenario& sc) {
    if (sc.duration < 1) throw std::invalid_argument("scenario duration must be >= 1");
    if (sc.room_x <= 0 || sc.room_y <= 0 || sc.room_z <= 0)
        throw std::invalid_argument("room extents must be positive");
    std::set<int> ids;
    for (const auto& p : sc.persons)
        if (!ids.insert(p.person_id).second)
            throw std::invalid_argument("duplicate person id in scenario");
    for (const auto& p : sc.persons) {
        int prev_end = 0;
        auto sorted = p.actions;
        std::sort(sorted.begin(), sorted.end(), [](const ActionScript& a, const ActionScript& b) {
            return a.start_frame < b.start_frame;
        });
        for (const auto& a : sorted) {
            const ClassDef* cd = nullptr;
            for (const auto& c : builtin_classes())
                if (c.class_id == a.class_id) cd = &c;
            if (!cd) throw std::invalid_argument("unknown action class in scenario");
            if (a.start_frame < 0 || a.end_frame <= a.start_frame || a.end_frame > sc.duration)
                throw std::invalid_argument("script interval outside duration");
            if (a.start_frame < prev_end)
                throw std::invalid_argument("overlapping scripts for one person");
            prev_end = a.end_frame;
            if (cd->interaction && (a.partner == p.person_id || !ids.count(a.partner)))
                throw std::invalid_argument("invalid interaction partner");
            if (a.class_id == kWalk && !a.has_target)
                throw std::invalid_argument("walk script needs a target");
        }
    }
}

}  // namespace

MotionResult synth_motion(const Scenario& sc) {
    validate(sc);
    const int np = static_cast<int>(sc.persons.size());

    // Effective per-frame schedule including mirrored interaction partners.
    std::vector<std::vector<EffectiveAction>> eff(static_cast<size_t>(np));
    auto idx_of = [&](int pid) {
        for (int i = 0; i < np; ++i)
            if (sc.persons[static_cast<size_t>(i)].person_id == pid) return i;
        return -1;
    };
    for (int i = 0; i < np; ++i)
        eff[static_cast<size_t>(i)].resize(static_cast<size_t>(sc.duration));
    for (int i = 0; i < np; ++i)
        for (const auto& a : sc.persons[static_cast<size_t>(i)].actions)
            for (int f = a.start_frame; f < a.end_frame; ++f)
                eff[static_cast<size_t>(i)][static_cast<size_t>(f)] = {&a, a.partner};
    for (int i = 0; i < np; ++i)
        for (const auto& a : sc.persons[static_cast<size_t>(i)].actions) {
            if (a.partner < 0) continue;
            const int q = idx_of(a.partner);
            for (int f = a.start_frame; f < a.end_frame; ++f) {
                auto& slot = eff[static_cast<size_t>(q)][static_cast<size_t>(f)];
                if (!slot.script)
                    slot = {&a, sc.persons[static_cast<size_t>(i)].person_id};
            }
        }

    std::vector<PersonState> st(static_cast<size_t>(np));
    for (int i = 0; i < np; ++i) {
        st[static_cast<size_t>(i)].x = sc.persons[static_cast<size_t>(i)].spawn_x;
        st[static_cast<size_t>(i)].y = sc.persons[static_cast<size_t>(i)].spawn_y;
    }

    std::mt19937_64 rng(sc.seed);
    std::normal_distribution<double> jitter(0.0, 0.008);

    MotionResult out;
    out.frames.reserve(static_cast<size_t>(sc.duration));
    for (int f = 0; f < sc.duration; ++f) {
        SkeletonFrame frame;
        frame.frame_index = f;
        for (int i = 0; i < np; ++i) {
            auto& s = st[static_cast<size_t>(i)];
            const auto& ea = eff[static_cast<size_t>(i)][static_cast<size_t>(f)];
            std::array<LocalOffset, kNumJoints> off{};

            if (ea.script) {
                const ActionScript& a = *ea.script;
                const int len = a.end_frame - a.start_frame;
                const double p = (f - a.start_frame + 0.5) / len;
                const int f_rel = f - a.start_frame;
                const bool owned = ea.other == a.partner;  // otherwise mirrored participant
                switch (a.class_id) {
                    case kWalk: {
                        if (owned) {
                            if (s.cur_walk != &a) {
                                s.cur_walk = &a;
                                s.walk_sx = s.x;
                                s.walk_sy = s.y;
                            }
                            const double u = static_cast<double>(f_rel + 1) / len;
                            const double nx = s.walk_sx + (a.to_x - s.walk_sx) * u;
                            const double ny = s.walk_sy + (a.to_y - s.walk_sy) * u;
                            const double seg = std::hypot(nx - s.x, ny - s.y);
                            if (std::hypot(a.to_x - s.walk_sx, a.to_y - s.walk_sy) > 1e-9)
                                s.phi = std::atan2(a.to_y - s.walk_sy, a.to_x - s.walk_sx);
                            s.x = nx;
                            s.y = ny;
                            s.walked += seg;
                        }
                        walk_offsets(s.walked, off);
                        break;
                    }
                    case kSitDown: sit_offsets(p, off); break;
                    case kWave: wave_offsets(p, f_rel, off); break;
                    case kPoint: point_offsets(p, off); break;
                    case kThrow: throw_offsets(p, off); break;
                    case kHandShake: {
                        const int q = idx_of(ea.other);
                        if (q >= 0) {
                            const auto& o = st[static_cast<size_t>(q)];
                            if (std::hypot(o.x - s.x, o.y - s.y) > 1e-9)
                                s.phi = std::atan2(o.y - s.y, o.x - s.x);
                        }
                        shake_offsets(p, f_rel, off);
                        break;
                    }
                    default: break;
                }
            } else {
                const double breathe =
                    0.006 * std::sin(2.0 * kPi * f / 60.0 + sc.persons[static_cast<size_t>(i)].person_id);
                for (auto& o : off) o.dz += breathe;
            }

            PersonPose pose;
            pose.person_id = sc.persons[static_cast<size_t>(i)].person_id;
            pose.joints.resize(kNumJoints);
            const double c = std::cos(s.phi), sn = std::sin(s.phi);
            for (int j = 0; j < kNumJoints; ++j) {
                const double fx = off[static_cast<size_t>(j)].fx;
                const double ly = kRestPose[static_cast<size_t>(j)].ly + off[static_cast<size_t>(j)].ly;
                Joint& jt = pose.joints[static_cast<size_t>(j)];
                jt.x = s.x + fx * c - ly * sn + jitter(rng);
                jt.y = s.y + fx * sn + ly * c + jitter(rng);
                jt.z = kRestPose[static_cast<size_t>(j)].z + off[static_cast<size_t>(j)].dz +
                       jitter(rng);
                jt.x = std::clamp(jt.x, 0.0, sc.room_x);
                jt.y = std::clamp(jt.y, 0.0, sc.room_y);
                jt.z = std::clamp(jt.z, 0.0, sc.room_z);
                jt.confidence = 1.0;
            }
            frame.persons.push_back(std::move(pose));
        }
        out.frames.push_back(std::move(frame));
    }

    // Ground-truth segments straight from the scripts (interactions once).
    for (const auto& p : sc.persons)
        for (const auto& a : p.actions) {
            ActionSegment seg;
            seg.class_id = a.class_id;
            seg.start_frame = a.start_frame;
            seg.end_frame = a.end_frame;
            seg.score = 1.0;
            seg.participants = {p.person_id};
            if (a.partner >= 0) {
                seg.participants.push_back(a.partner);
                std::sort(seg.participants.begin(), seg.participants.end());
            }
            out.segments.push_back(std::move(seg));
        }
    std::sort(out.segments.begin(), out.segments.end(),
              [](const ActionSegment& a, const ActionSegment& b) {
                  if (a.start_frame != b.start_frame) return a.start_frame < b.start_frame;
                  if (a.class_id != b.class_id) return a.class_id < b.class_id;
                  return a.participants < b.participants;
              });
    out.segments.erase(std::unique(out.segments.begin(), out.segments.end()),
                       out.segments.end());
    return out;
}

}  // namespace rfad::sim
