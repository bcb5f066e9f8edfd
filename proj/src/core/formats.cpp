#include "rfad/core/formats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "rfad/core/error.hpp"

namespace rfad {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

long parse_int(const std::string& tok, int line, const char* field) {
    size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(tok, &pos);
    } catch (const std::exception&) {
        throw FormatError(line, std::string(field) + ": not an integer: '" + tok + "'");
    }
    if (pos != tok.size()) throw FormatError(line, std::string(field) + ": not an integer: '" + tok + "'");
    return v;
}

double parse_double(const std::string& tok, int line, const char* field) {
    size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw FormatError(line, std::string(field) + ": not a number: '" + tok + "'");
    }
    if (pos != tok.size()) throw FormatError(line, std::string(field) + ": not a number: '" + tok + "'");
    if (!std::isfinite(v)) throw FormatError(line, std::string(field) + ": not finite");
    return v;
}

void append_f6(std::string& s, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    s += buf;
}

}  // namespace

// ------------------------------------------------------------------ skeleton

void write_skeleton_file(std::ostream& out, const std::vector<SkeletonFrame>& frames, int njoints,
                         int fps) {
    out << "#skeleton v1 njoints=" << njoints << " fps=" << fps << "\n";
    for (const auto& f : frames) {
        for (const auto& p : f.persons) {
            std::string line = std::to_string(f.frame_index) + " " + std::to_string(p.person_id);
            for (const auto& j : p.joints) {
                line += ' ';
                append_f6(line, j.x);
                line += ' ';
                append_f6(line, j.y);
                line += ' ';
                append_f6(line, j.z);
                line += ' ';
                append_f6(line, j.confidence);
            }
            out << line << "\n";
        }
    }
}

std::vector<SkeletonFrame> read_skeleton_file(std::istream& in) {
    std::vector<SkeletonFrame> frames;
    std::string line;
    int lineno = 0;
    int njoints = -1;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        if (!saw_header) {
            if (toks[0] != "#skeleton" || toks.size() < 2 || toks[1] != "v1")
                throw FormatError(lineno, "expected header '#skeleton v1 njoints=<N> fps=<F>'");
            for (size_t i = 2; i < toks.size(); ++i) {
                if (toks[i].rfind("njoints=", 0) == 0)
                    njoints = static_cast<int>(parse_int(toks[i].substr(8), lineno, "njoints"));
                else if (toks[i].rfind("fps=", 0) == 0)
                    parse_int(toks[i].substr(4), lineno, "fps");
                else
                    throw FormatError(lineno, "unknown header field '" + toks[i] + "'");
            }
            if (njoints <= 0) throw FormatError(lineno, "header missing njoints");
            saw_header = true;
            continue;
        }
        if (toks[0][0] == '#') throw FormatError(lineno, "unexpected comment/header line");
        const size_t expect = 2 + 4 * static_cast<size_t>(njoints);
        if (toks.size() != expect)
            throw FormatError(lineno, "expected " + std::to_string(expect) + " fields, got " +
                                          std::to_string(toks.size()));
        const long fi = parse_int(toks[0], lineno, "frame_index");
        if (fi < 0) throw FormatError(lineno, "frame_index: must be >= 0");
        PersonPose p;
        p.person_id = static_cast<int>(parse_int(toks[1], lineno, "person_id"));
        p.joints.resize(static_cast<size_t>(njoints));
        for (int j = 0; j < njoints; ++j) {
            Joint& jt = p.joints[static_cast<size_t>(j)];
            jt.x = parse_double(toks[static_cast<size_t>(2 + 4 * j)], lineno, "joint x");
            jt.y = parse_double(toks[static_cast<size_t>(3 + 4 * j)], lineno, "joint y");
            jt.z = parse_double(toks[static_cast<size_t>(4 + 4 * j)], lineno, "joint z");
            jt.confidence = parse_double(toks[static_cast<size_t>(5 + 4 * j)], lineno, "confidence");
            if (jt.confidence < 0.0 || jt.confidence > 1.0)
                throw FormatError(lineno, "confidence: must be in [0,1]");
        }
        if (!frames.empty() && frames.back().frame_index == fi) {
            for (const auto& q : frames.back().persons)
                if (q.person_id == p.person_id)
                    throw FormatError(lineno, "person_id: duplicate within frame");
            frames.back().persons.push_back(std::move(p));
        } else {
            if (!frames.empty() && fi < frames.back().frame_index)
                throw FormatError(lineno, "frame_index: must be nondecreasing");
            SkeletonFrame f;
            f.frame_index = static_cast<int>(fi);
            f.persons.push_back(std::move(p));
            frames.push_back(std::move(f));
        }
    }
    return frames;
}

// --------------------------------------------------------------------- labels

void write_label_file(std::ostream& out, const std::vector<ActionSegment>& segments,
                      bool with_scores) {
    out << "#labels v1\n";
    for (const auto& s : segments) {
        std::string line = std::to_string(s.class_id) + " " + std::to_string(s.start_frame) + " " +
                           std::to_string(s.end_frame);
        for (int p : s.participants) line += " " + std::to_string(p);
        if (with_scores) {
            line += ' ';
            append_f6(line, s.score);
        }
        out << line << "\n";
    }
}

std::vector<ActionSegment> read_label_file(std::istream& in) {
    std::vector<ActionSegment> segs;
    std::string line;
    int lineno = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        if (!saw_header) {
            if (toks[0] != "#labels" || toks.size() < 2 || toks[1] != "v1")
                throw FormatError(lineno, "expected header '#labels v1'");
            saw_header = true;
            continue;
        }
        if (toks.size() < 4 || toks.size() > 6)
            throw FormatError(lineno, "expected 4-6 fields, got " + std::to_string(toks.size()));
        ActionSegment s;
        s.class_id = static_cast<int>(parse_int(toks[0], lineno, "class_id"));
        s.start_frame = static_cast<int>(parse_int(toks[1], lineno, "start_frame"));
        s.end_frame = static_cast<int>(parse_int(toks[2], lineno, "end_frame"));
        if (s.start_frame >= s.end_frame)
            throw FormatError(lineno, "end_frame: must exceed start_frame");
        s.participants.push_back(static_cast<int>(parse_int(toks[3], lineno, "person_a")));
        // remaining tokens: optional person_b (integer), optional score (has '.')
        size_t i = 4;
        if (i < toks.size() && toks[i].find('.') == std::string::npos) {
            s.participants.push_back(static_cast<int>(parse_int(toks[i], lineno, "person_b")));
            ++i;
        }
        if (i < toks.size()) {
            if (toks[i].find('.') == std::string::npos)
                throw FormatError(lineno, "score: expected decimal score token");
            s.score = parse_double(toks[i], lineno, "score");
            if (s.score < 0.0 || s.score > 1.0) throw FormatError(lineno, "score: must be in [0,1]");
            ++i;
        }
        if (i != toks.size()) throw FormatError(lineno, "unexpected trailing fields");
        if (s.participants.size() == 2) {
            if (s.participants[0] == s.participants[1])
                throw FormatError(lineno, "person_b: participants must be distinct");
            std::sort(s.participants.begin(), s.participants.end());
        }
        segs.push_back(std::move(s));
    }
    return segs;
}

// -------------------------------------------------------------------- classes

void write_class_file(std::ostream& out, const std::vector<ClassDef>& classes) {
    for (const auto& c : classes)
        out << c.class_id << ' ' << c.name << ' ' << (c.interaction ? "interaction" : "action")
            << "\n";
}

std::vector<ClassDef> read_class_file(std::istream& in) {
    std::vector<ClassDef> out;
    std::unordered_set<int> ids;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = split_ws(line);
        if (toks.empty() || toks[0][0] == '#') continue;
        if (toks.size() != 3) throw FormatError(lineno, "expected 'class_id name kind'");
        ClassDef c;
        c.class_id = static_cast<int>(parse_int(toks[0], lineno, "class_id"));
        c.name = toks[1];
        if (toks[2] == "action")
            c.interaction = false;
        else if (toks[2] == "interaction")
            c.interaction = true;
        else
            throw FormatError(lineno, "kind: must be 'action' or 'interaction'");
        if (!ids.insert(c.class_id).second) throw FormatError(lineno, "class_id: duplicate");
        out.push_back(std::move(c));
    }
    return out;
}

// ----------------------------------------------------------------- link table

void write_link_file(std::ostream& out, const std::vector<ClassLink>& links) {
    for (const auto& l : links) out << l.interaction_class << ' ' << l.action_class << "\n";
}

std::vector<ClassLink> read_link_file(std::istream& in) {
    std::vector<ClassLink> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = split_ws(line);
        if (toks.empty() || toks[0][0] == '#') continue;
        if (toks.size() != 2)
            throw FormatError(lineno, "expected 'interaction_class_id action_class_id'");
        ClassLink l;
        l.interaction_class = static_cast<int>(parse_int(toks[0], lineno, "interaction_class_id"));
        l.action_class = static_cast<int>(parse_int(toks[1], lineno, "action_class_id"));
        out.push_back(l);
    }
    return out;
}

// ----------------------------------------------------------------------- misc

void save_text(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << contents;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string load_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace rfad
