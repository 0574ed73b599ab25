#pragma once

#include <stdexcept>
#include <string>

namespace beamlab {

// Input failed a structural or semantic check (bad flag value, malformed
// record, violated invariant). The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem-level failure (missing file, unreadable path). Exit code 2.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ValidationError that carries a file location. line is 1-based.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& source, int line, const std::string& what)
        : ValidationError(source + ":" + std::to_string(line) + ": " + what),
          source_(source),
          line_(line) {}

    const std::string& source() const { return source_; }
    int line() const { return line_; }

private:
    std::string source_;
    int line_;
};

}  // namespace beamlab
