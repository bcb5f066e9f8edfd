#include "rfad/sim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include "rfad/core/error.hpp"

namespace rfad::sim {

const std::vector<ClassDef>& builtin_classes() {
    static const std::vector<ClassDef> classes = {
        {kWalk, "walk", false},   {kSitDown, "sit-down", false}, {kWave, "wave", false},
        {kPoint, "point", false}, {kThrow, "throw", false},      {kHandShake, "hand-shake", true},
    };
    return classes;
}

const std::vector<ClassLink>& builtin_links() {
    // a hand-shake suppresses overlapping single-arm detections of its participants
    static const std::vector<ClassLink> links = {{kHandShake, kWave}, {kHandShake, kPoint}};
    return links;
}

namespace {

const ClassDef* find_class(int id) {
    for (const auto& c : builtin_classes())
        if (c.class_id == id) return &c;
    return nullptr;
}

const ClassDef* find_class(const std::string& name) {
    for (const auto& c : builtin_classes())
        if (c.name == name) return &c;
    return nullptr;
}

std::pair<double, double> parse_xy(const Config& cfg, const std::string& key) {
    std::istringstream is(cfg.get_string(key));
    double x, y;
    std::string extra;
    if (!(is >> x >> y) || (is >> extra))
        throw FormatError("config key '" + key + "': expected two numbers");
    return {x, y};
}

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

double quant6(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

Scenario scenario_from_config(const Config& cfg) {
    Scenario sc;
    std::set<std::string> used;
    auto take = [&](const std::string& k) {
        used.insert(k);
        return k;
    };

    sc.seed = static_cast<uint64_t>(cfg.get_int(take("seed"), 0));
    sc.duration = static_cast<int>(cfg.get_int(take("duration"), 270));
    if (sc.duration < 1) throw FormatError("scenario: duration must be >= 1");
    sc.room_x = cfg.get_double(take("room.x"), 6.4);
    sc.room_y = cfg.get_double(take("room.y"), 6.4);
    sc.room_z = cfg.get_double(take("room.z"), 3.2);
    if (sc.room_x <= 0 || sc.room_y <= 0 || sc.room_z <= 0)
        throw FormatError("scenario: room extents must be positive");
    if (cfg.has("wall.x")) {
        sc.wall.present = true;
        sc.wall.x = cfg.get_double(take("wall.x"));
        sc.wall.alpha = cfg.get_double(take("wall.alpha"), 0.5);
        if (sc.wall.alpha <= 0.0 || sc.wall.alpha > 1.0)
            throw FormatError("scenario: wall.alpha must be in (0,1]");
    }

    std::set<int> ids;
    for (int pi = 0;; ++pi) {
        const std::string pk = "person" + std::to_string(pi);
        if (!cfg.has(pk + ".id") && !cfg.has(pk + ".spawn")) break;
        PersonScript ps;
        ps.person_id = static_cast<int>(cfg.get_int(take(pk + ".id"), pi));
        if (!ids.insert(ps.person_id).second)
            throw FormatError("scenario: duplicate person id " + std::to_string(ps.person_id));
        auto [sx, sy] = parse_xy(cfg, take(pk + ".spawn"));
        ps.spawn_x = sx;
        ps.spawn_y = sy;
        if (sx < 0 || sx > sc.room_x || sy < 0 || sy > sc.room_y)
            throw FormatError("scenario: spawn outside room for person " +
                              std::to_string(ps.person_id));
        for (int ai = 0;; ++ai) {
            const std::string ak = pk + ".action" + std::to_string(ai);
            if (!cfg.has(ak + ".class")) break;
            ActionScript a;
            const std::string cls = cfg.get_string(take(ak + ".class"));
            const ClassDef* cd = nullptr;
            try {
                size_t pos = 0;
                const int cid = std::stoi(cls, &pos);
                if (pos == cls.size()) cd = find_class(cid);
            } catch (const std::exception&) {
            }
            if (!cd) cd = find_class(cls);
            if (!cd) throw FormatError("scenario: unknown class '" + cls + "'");
            a.class_id = cd->class_id;
            a.start_frame = static_cast<int>(cfg.get_int(take(ak + ".start")));
            a.end_frame = static_cast<int>(cfg.get_int(take(ak + ".end")));
            if (a.start_frame < 0 || a.end_frame <= a.start_frame || a.end_frame > sc.duration)
                throw FormatError("scenario: script interval outside duration in " + ak);
            if (cd->interaction) {
                a.partner = static_cast<int>(cfg.get_int(take(ak + ".partner")));
                if (a.partner == ps.person_id)
                    throw FormatError("scenario: interaction partner must differ in " + ak);
            }
            if (cfg.has(ak + ".to")) {
                auto [tx, ty] = parse_xy(cfg, take(ak + ".to"));
                a.to_x = tx;
                a.to_y = ty;
                a.has_target = true;
                if (tx < 0 || tx > sc.room_x || ty < 0 || ty > sc.room_y)
                    throw FormatError("scenario: walk target outside room in " + ak);
            }
            if (a.class_id == kWalk && !a.has_target)
                throw FormatError("scenario: walk requires a 'to' target in " + ak);
            ps.actions.push_back(a);
        }
        std::sort(ps.actions.begin(), ps.actions.end(),
                  [](const ActionScript& a, const ActionScript& b) {
                      return a.start_frame < b.start_frame;
                  });
        for (size_t i = 1; i < ps.actions.size(); ++i)
            if (ps.actions[i].start_frame < ps.actions[i - 1].end_frame)
                throw FormatError("scenario: overlapping actions for person " +
                                  std::to_string(ps.person_id));
        sc.persons.push_back(std::move(ps));
    }

    // interaction partners must exist
    for (const auto& p : sc.persons)
        for (const auto& a : p.actions)
            if (a.partner >= 0 && !ids.count(a.partner))
                throw FormatError("scenario: unknown partner id " + std::to_string(a.partner));

    // reject unknown keys
    for (const auto& k : cfg.keys())
        if (!used.count(k)) throw FormatError("scenario: unknown key '" + k + "'");
    return sc;
}

std::string scenario_to_config_text(const Scenario& sc) {
    std::ostringstream os;
    os << "seed " << sc.seed << "\n";
    os << "duration " << sc.duration << "\n";
    os << "room {\n  x " << fmt6(sc.room_x) << "\n  y " << fmt6(sc.room_y) << "\n  z "
       << fmt6(sc.room_z) << "\n}\n";
    if (sc.wall.present)
        os << "wall {\n  x " << fmt6(sc.wall.x) << "\n  alpha " << fmt6(sc.wall.alpha) << "\n}\n";
    for (size_t pi = 0; pi < sc.persons.size(); ++pi) {
        const auto& p = sc.persons[pi];
        os << "person" << pi << " {\n";
        os << "  id " << p.person_id << "\n";
        os << "  spawn " << fmt6(p.spawn_x) << " " << fmt6(p.spawn_y) << "\n";
        for (size_t ai = 0; ai < p.actions.size(); ++ai) {
            const auto& a = p.actions[ai];
            os << "  action" << ai << " {\n";
            os << "    class " << find_class(a.class_id)->name << "\n";
            os << "    start " << a.start_frame << "\n";
            os << "    end " << a.end_frame << "\n";
            if (a.partner >= 0) os << "    partner " << a.partner << "\n";
            if (a.has_target) os << "    to " << fmt6(a.to_x) << " " << fmt6(a.to_y) << "\n";
            os << "  }\n";
        }
        os << "}\n";
    }
    return os.str();
}

Scenario random_scenario(uint64_t seed, int persons, int duration) {
    std::mt19937_64 rng(seed);
    Scenario sc;
    sc.seed = seed;
    sc.duration = duration;

    const double margin = 0.8;
    std::uniform_real_distribution<double> ux(margin, sc.room_x - margin);
    std::uniform_real_distribution<double> uy(margin, sc.room_y - margin);

    std::vector<std::pair<double, double>> spawns;
    for (int p = 0; p < persons; ++p) {
        for (int attempt = 0; attempt < 200; ++attempt) {
            const double x = ux(rng), y = uy(rng);
            bool ok = true;
            for (auto& [ox, oy] : spawns)
                if (std::hypot(x - ox, y - oy) < 1.2) ok = false;
            if (ok || attempt == 199) {
                spawns.emplace_back(x, y);
                break;
            }
        }
    }

    // optional hand-shake block for persons {0,1}
    int hs_start = -1, hs_end = -1;
    std::uniform_int_distribution<int> coin(0, 1);
    if (persons >= 2 && coin(rng)) {
        std::uniform_int_distribution<int> st(duration * 35 / 100, duration * 55 / 100);
        std::uniform_int_distribution<int> len(45, 60);
        hs_start = st(rng);
        hs_end = std::min(duration, hs_start + len(rng));
    }

    std::uniform_int_distribution<int> first_gap(5, 20);
    std::uniform_int_distribution<int> gap(15, 30);
    std::uniform_int_distribution<int> pick(0, 4);  // single-person classes
    auto len_of = [&](int cls) {
        switch (cls) {
            case kWalk: return std::uniform_int_distribution<int>(60, 90)(rng);
            case kSitDown: return std::uniform_int_distribution<int>(60, 90)(rng);
            case kWave: return std::uniform_int_distribution<int>(45, 75)(rng);
            case kPoint: return std::uniform_int_distribution<int>(45, 75)(rng);
            default: return std::uniform_int_distribution<int>(30, 45)(rng);
        }
    };

    for (int p = 0; p < persons; ++p) {
        PersonScript ps;
        ps.person_id = p;
        ps.spawn_x = quant6(spawns[static_cast<size_t>(p)].first);
        ps.spawn_y = quant6(spawns[static_cast<size_t>(p)].second);
        double cx = ps.spawn_x, cy = ps.spawn_y;
        int t = first_gap(rng);
        while (true) {
            const int cls = pick(rng);
            const int len = len_of(cls);
            int s = t, e = t + len;
            if (p <= 1 && hs_start >= 0 && s < hs_end && hs_start < e) {
                t = hs_end + gap(rng);  // skip over the reserved hand-shake block
                continue;
            }
            if (e > duration) break;
            ActionScript a;
            a.class_id = cls;
            a.start_frame = s;
            a.end_frame = e;
            if (cls == kWalk) {
                for (int attempt = 0; attempt < 100; ++attempt) {
                    const double tx = ux(rng), ty = uy(rng);
                    const double d = std::hypot(tx - cx, ty - cy);
                    if ((d >= 1.0 && d <= 3.0) || attempt == 99) {
                        a.to_x = quant6(tx);
                        a.to_y = quant6(ty);
                        a.has_target = true;
                        cx = a.to_x;
                        cy = a.to_y;
                        break;
                    }
                }
            }
            ps.actions.push_back(a);
            t = e + gap(rng);
        }
        if (p == 0 && hs_start >= 0) {
            ActionScript a;
            a.class_id = kHandShake;
            a.start_frame = hs_start;
            a.end_frame = hs_end;
            a.partner = 1;
            ps.actions.push_back(a);
            std::sort(ps.actions.begin(), ps.actions.end(),
                      [](const ActionScript& x, const ActionScript& y) {
                          return x.start_frame < y.start_frame;
                      });
        }
        sc.persons.push_back(std::move(ps));
    }
    return sc;
}

}  // namespace rfad::sim
