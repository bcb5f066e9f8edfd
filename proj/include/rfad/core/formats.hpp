#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rfad/core/types.hpp"

namespace rfad {

// --- skeleton file -----------------------------------------------------------
// Header `#skeleton v1 njoints=<N> fps=<F>`, then one record per line:
// `frame_index person_id j0x j0y j0z j0c j1x ...` with 6 decimal places.
// Empty file parses to an empty frame list.
void write_skeleton_file(std::ostream& out, const std::vector<SkeletonFrame>& frames,
                         int njoints = kNumJoints, int fps = kFps);
std::vector<SkeletonFrame> read_skeleton_file(std::istream& in);  // throws FormatError

// --- label file --------------------------------------------------------------
// Header `#labels v1`, then `class_id start_frame end_frame person_a [person_b]`.
// Predictions append a trailing score token (contains '.', distinguishing it
// from an integer person id). Ground truth is written without scores.
void write_label_file(std::ostream& out, const std::vector<ActionSegment>& segments,
                      bool with_scores);
std::vector<ActionSegment> read_label_file(std::istream& in);  // throws FormatError

// --- class vocabulary --------------------------------------------------------
struct ClassDef {
    int class_id = 0;
    std::string name;
    bool interaction = false;

    bool operator==(const ClassDef&) const = default;
};
// Lines `class_id name kind`, kind in {action, interaction}.
void write_class_file(std::ostream& out, const std::vector<ClassDef>& classes);
std::vector<ClassDef> read_class_file(std::istream& in);

// --- interaction/action link table --------------------------------------------
// Lines `interaction_class_id action_class_id`.
struct ClassLink {
    int interaction_class = 0;
    int action_class = 0;

    bool operator==(const ClassLink&) const = default;
};
void write_link_file(std::ostream& out, const std::vector<ClassLink>& links);
std::vector<ClassLink> read_link_file(std::istream& in);

// File-path conveniences (throw FormatError / runtime_error on IO failure).
void save_text(const std::string& path, const std::string& contents);
std::string load_text(const std::string& path);

}  // namespace rfad
