#pragma once

#include <stdexcept>
#include <string>

namespace gma {

/// Error taxonomy mirrored by the CLI exit codes: usage -> 2, data -> 3,
/// numeric -> 4. Messages name the subsystem that raised them.
class Error : public std::runtime_error {
public:
    enum class Kind { usage, data, numeric };

    Error(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) {
    throw Error(Error::Kind::usage, msg);
}
[[noreturn]] inline void throw_data(const std::string& msg) {
    throw Error(Error::Kind::data, msg);
}
[[noreturn]] inline void throw_numeric(const std::string& msg) {
    throw Error(Error::Kind::numeric, msg);
}

}  // namespace gma
