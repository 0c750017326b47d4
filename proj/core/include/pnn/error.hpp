#ifndef PNN_ERROR_HPP
#define PNN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace pnn {

// Caller misuse: bad shapes, bad config values, invalid plans.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Problems with external data: unreadable files, bad IDX headers,
// checksum mismatches.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace pnn

#endif
