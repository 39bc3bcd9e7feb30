#pragma once

#include <stdexcept>
#include <string>

namespace coread {

// Bad configuration or CLI arguments. Mapped to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data. Mapped to exit code 3.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure, e.g. an iteration that did not converge. Exit code 4.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace coread
