#include "rfad/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "rfad/core/segments.hpp"

namespace rfad {

double average_precision(const std::vector<ActionSegment>& preds,
                         const std::vector<ActionSegment>& gts, double theta, int class_id) {
    std::vector<const ActionSegment*> gt;
    for (const auto& g : gts)
        if (g.class_id == class_id) gt.push_back(&g);
    if (gt.empty()) return 0.0;

    std::vector<const ActionSegment*> ps;
    for (const auto& p : preds)
        if (p.class_id == class_id) ps.push_back(&p);
    std::stable_sort(ps.begin(), ps.end(), [](const ActionSegment* a, const ActionSegment* b) {
        if (a->score != b->score) return a->score > b->score;
        return a->start_frame < b->start_frame;
    });
    if (ps.empty()) return 0.0;

    std::vector<char> taken(gt.size(), 0);
    const size_t n = ps.size();
    std::vector<double> prec(n), rec(n);
    int tps = 0;
    for (size_t i = 0; i < n; ++i) {
        int best = -1;
        double best_iou = 0.0;
        for (size_t g = 0; g < gt.size(); ++g) {
            if (taken[g] || !same_participants(*ps[i], *gt[g])) continue;
            const double iou = segment_iou(*ps[i], *gt[g]);
            if (iou >= theta && iou > best_iou) {
                best_iou = iou;
                best = static_cast<int>(g);
            }
        }
        if (best >= 0) {
            taken[static_cast<size_t>(best)] = 1;
            ++tps;
        }
        prec[i] = static_cast<double>(tps) / static_cast<double>(i + 1);
        rec[i] = static_cast<double>(tps) / static_cast<double>(gt.size());
    }

    // right-to-left precision envelope, integrated over recall increments
    std::vector<double> env(n);
    double run = 0.0;
    for (size_t i = n; i-- > 0;) {
        run = std::max(run, prec[i]);
        env[i] = run;
    }
    double ap = 0.0, prev_rec = 0.0;
    for (size_t i = 0; i < n; ++i) {
        ap += env[i] * (rec[i] - prev_rec);
        prev_rec = rec[i];
    }
    return ap;
}

EvalReport mean_map(const std::vector<ActionSegment>& preds, const std::vector<ActionSegment>& gts,
                    const std::vector<double>& thetas) {
    EvalReport r;
    r.thetas = thetas;
    r.gt_total = static_cast<int>(gts.size());
    r.pred_total = static_cast<int>(preds.size());

    std::set<int> classes;
    for (const auto& g : gts) classes.insert(g.class_id);

    for (double theta : thetas) {
        double sum = 0.0;
        for (int c : classes) {
            ClassAp ca;
            ca.theta = theta;
            ca.class_id = c;
            ca.ap = average_precision(preds, gts, theta, c);
            for (const auto& g : gts)
                if (g.class_id == c) ++ca.gt_count;
            for (const auto& p : preds)
                if (p.class_id == c) ++ca.pred_count;
            sum += ca.ap;
            r.per_class.push_back(ca);
        }
        r.map_at.push_back(classes.empty() ? 0.0 : sum / static_cast<double>(classes.size()));
    }
    return r;
}

namespace {
struct FramePerson {
    Vec3 centroid;
    const std::vector<Joint>* joints;
};

std::map<int, std::vector<FramePerson>> by_frame(const std::vector<Track>& tracks) {
    std::map<int, std::vector<FramePerson>> out;
    for (const auto& t : tracks)
        for (const auto& e : t.entries) out[e.frame_index].push_back({torso_centroid(e.joints), &e.joints});
    return out;
}
}  // namespace

bool mean_joint_error_cm(const std::vector<Track>& pred, const std::vector<Track>& gt,
                         double gate_dist, double* out_cm) {
    auto pf = by_frame(pred);
    auto gf = by_frame(gt);
    double total = 0.0;
    int64_t joints = 0;
    for (const auto& [frame, gps] : gf) {
        auto it = pf.find(frame);
        if (it == pf.end()) continue;
        const auto& pps = it->second;
        struct Cand {
            double dist;
            size_t g, p;
        };
        std::vector<Cand> cands;
        for (size_t g = 0; g < gps.size(); ++g)
            for (size_t p = 0; p < pps.size(); ++p) {
                const double dx = gps[g].centroid.x - pps[p].centroid.x;
                const double dy = gps[g].centroid.y - pps[p].centroid.y;
                const double dz = gps[g].centroid.z - pps[p].centroid.z;
                const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
                if (d <= gate_dist) cands.push_back({d, g, p});
            }
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.dist != b.dist) return a.dist < b.dist;
            if (a.g != b.g) return a.g < b.g;
            return a.p < b.p;
        });
        std::vector<char> gu(gps.size(), 0), pu(pps.size(), 0);
        for (const auto& c : cands) {
            if (gu[c.g] || pu[c.p]) continue;
            gu[c.g] = 1;
            pu[c.p] = 1;
            const auto& ga = *gps[c.g].joints;
            const auto& pa = *pps[c.p].joints;
            const size_t nj = std::min(ga.size(), pa.size());
            for (size_t j = 0; j < nj; ++j) {
                const double dx = ga[j].x - pa[j].x, dy = ga[j].y - pa[j].y, dz = ga[j].z - pa[j].z;
                total += std::sqrt(dx * dx + dy * dy + dz * dz);
                ++joints;
            }
        }
    }
    if (joints == 0) return false;
    *out_cm = 100.0 * total / static_cast<double>(joints);
    return true;
}

namespace {
std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}
}  // namespace

std::string report_text(const EvalReport& r) {
    std::ostringstream os;
    os << "gt_count " << r.gt_total << "\n";
    os << "pred_count " << r.pred_total << "\n";
    for (const auto& ca : r.per_class)
        os << "ap@" << fmt(ca.theta) << "/class" << ca.class_id << " " << fmt(ca.ap) << "\n";
    for (size_t i = 0; i < r.thetas.size(); ++i)
        os << "map@" << fmt(r.thetas[i]) << " " << fmt(r.map_at[i]) << "\n";
    if (r.has_joint_error) os << "mean_joint_error_cm " << fmt(r.mean_joint_error_cm) << "\n";
    return os.str();
}

std::string report_table(const EvalReport& r) {
    std::ostringstream os;
    os << "metric\ttheta\tclass\tvalue\n";
    for (const auto& ca : r.per_class)
        os << "ap\t" << fmt(ca.theta) << "\t" << ca.class_id << "\t" << fmt(ca.ap) << "\n";
    for (size_t i = 0; i < r.thetas.size(); ++i)
        os << "map\t" << fmt(r.thetas[i]) << "\tall\t" << fmt(r.map_at[i]) << "\n";
    if (r.has_joint_error)
        os << "joint_error_cm\t-\t-\t" << fmt(r.mean_joint_error_cm) << "\n";
    return os.str();
}

}  // namespace rfad
