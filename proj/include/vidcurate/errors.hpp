#pragma once

#include <stdexcept>
#include <string>

namespace vidcurate {

// Bad configuration: unknown keys, out-of-range thresholds, missing paths.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data: unreadable files, malformed records, violated preconditions.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    ok = 0,
    config_error = 1,
    data_error = 2,
    internal_error = 3,
};

} // namespace vidcurate
