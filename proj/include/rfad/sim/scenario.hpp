#pragma once

#include <cstdint>
#include <vector>

#include "rfad/core/config.hpp"
#include "rfad/core/formats.hpp"
#include "rfad/core/types.hpp"

namespace rfad::sim {

// Built-in motion vocabulary ids.
enum MotionClass : int {
    kWalk = 0,
    kSitDown = 1,
    kWave = 2,
    kPoint = 3,
    kThrow = 4,
    kHandShake = 5,  // interaction
};

const std::vector<ClassDef>& builtin_classes();
const std::vector<ClassLink>& builtin_links();  // interaction -> suppressed single classes

struct ActionScript {
    int class_id = 0;
    int start_frame = 0;
    int end_frame = 0;  // half-open
    int partner = -1;   // required for interaction classes
    double to_x = 0.0, to_y = 0.0;  // walk destination
    bool has_target = false;
};

struct PersonScript {
    int person_id = 0;
    double spawn_x = 0.0, spawn_y = 0.0;
    std::vector<ActionScript> actions;  // non-overlapping, sorted by start
};

struct Wall {
    bool present = false;
    double x = 0.0;      // plane x = this
    double alpha = 0.5;  // amplitude factor beyond the plane, in (0,1]
};

struct Scenario {
    uint64_t seed = 0;
    double room_x = 6.4, room_y = 6.4, room_z = 3.2;  // meters
    Wall wall;
    int duration = 270;  // frames at kFps
    std::vector<PersonScript> persons;
};

// Scenario file <-> Config text (sections person0..personN-1, action0..actionK-1).
Scenario scenario_from_config(const Config& cfg);  // throws FormatError on invalid structure
std::string scenario_to_config_text(const Scenario& sc);

// Seeded sampler used for synthetic train/test splits: spawns persons apart,
// fills each timeline with gap-separated actions, optionally one hand-shake
// for persons {0,1}.
Scenario random_scenario(uint64_t seed, int persons, int duration);

}  // namespace rfad::sim
