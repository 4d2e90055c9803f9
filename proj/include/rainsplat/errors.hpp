#pragma once

#include <stdexcept>
#include <string>

namespace rainsplat {

// I/O and file-format problems (CLI exit code 2).
struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Inputs that parse but violate a contract: duplicate ids, spec
// mismatches, empty station sets (CLI exit code 2).
struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures: singular systems, non-PD covariances,
// diverged optimizations (CLI exit code 3).
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace rainsplat
