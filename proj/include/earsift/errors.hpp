#ifndef EARSIFT_ERRORS_HPP
#define EARSIFT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace earsift {

// Exit-code families used by the CLI. Accept/reject (0/1) are not errors.
enum class ErrorFamily {
    usage = 2,    // bad invocation or bad parameter values
    io = 3,       // filesystem and encoding failures
    data = 4,     // parse failures, malformed or insufficient input data
    internal = 5, // broken internal invariant
};

// All library errors carry a stable machine-readable code ("file-not-found",
// "too-few-samples", ...) next to the human-readable message.
class Error : public std::runtime_error {
public:
    Error(ErrorFamily family, std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message),
          family_(family),
          code_(std::move(code)) {}

    ErrorFamily family() const noexcept { return family_; }
    const std::string& code() const noexcept { return code_; }
    int exit_code() const noexcept { return static_cast<int>(family_); }

private:
    ErrorFamily family_;
    std::string code_;
};

[[noreturn]] inline void raise_usage(const std::string& code, const std::string& msg) {
    throw Error(ErrorFamily::usage, code, msg);
}
[[noreturn]] inline void raise_io(const std::string& code, const std::string& msg) {
    throw Error(ErrorFamily::io, code, msg);
}
[[noreturn]] inline void raise_data(const std::string& code, const std::string& msg) {
    throw Error(ErrorFamily::data, code, msg);
}
[[noreturn]] inline void raise_internal(const std::string& code, const std::string& msg) {
    throw Error(ErrorFamily::internal, code, msg);
}

} // namespace earsift

#endif
