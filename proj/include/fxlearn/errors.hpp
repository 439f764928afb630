#pragma once

#include <stdexcept>
#include <string>

namespace fxl {

// Error taxonomy shared by the library and the CLI. The category is what the
// CLI prints as the machine-parseable error line and maps to the exit code.
enum class ErrorCategory {
    config,   // bad configuration, invalid geometry, unknown keys
    data,     // invalid input data (non-finite samples, out-of-range knobs)
    io,       // file system, malformed or truncated files
    shape,    // tensor shape mismatch inside the compute graph
    numeric,  // NaN/Inf detected during computation
};

inline const char* category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::config: return "config";
        case ErrorCategory::data: return "data";
        case ErrorCategory::io: return "io";
        case ErrorCategory::shape: return "shape";
        case ErrorCategory::numeric: return "numeric";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), cat_(cat) {}
    ErrorCategory category() const { return cat_; }

private:
    ErrorCategory cat_;
};

[[noreturn]] inline void raise_config(const std::string& msg) { throw Error(ErrorCategory::config, msg); }
[[noreturn]] inline void raise_data(const std::string& msg) { throw Error(ErrorCategory::data, msg); }
[[noreturn]] inline void raise_io(const std::string& msg) { throw Error(ErrorCategory::io, msg); }
[[noreturn]] inline void raise_shape(const std::string& msg) { throw Error(ErrorCategory::shape, msg); }
[[noreturn]] inline void raise_numeric(const std::string& msg) { throw Error(ErrorCategory::numeric, msg); }

}  // namespace fxl
