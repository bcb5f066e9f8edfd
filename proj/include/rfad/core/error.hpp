#pragma once

#include <stdexcept>
#include <string>

namespace rfad {

// Malformed input data (text or binary). Carries an optional 1-based line
// number for text formats; callers map this to exit code 2.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& msg) : std::runtime_error(msg), line_(0) {}
    FormatError(int line, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}

    int line() const { return line_; }

private:
    int line_;
};

}  // namespace rfad
