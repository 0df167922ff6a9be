#pragma once

#include <stdexcept>
#include <string>

namespace stomatch {

enum class ErrorCode {
    parse = 1,      // malformed input file or JSON
    validate = 2,   // instance/solution invariant violated
    domain = 3,     // argument outside a function's domain
    numeric = 4,    // solver or quadrature failure
    io = 5,         // file system failure
    internal = 6,   // "cannot happen" conditions surfaced loudly
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

} // namespace stomatch
