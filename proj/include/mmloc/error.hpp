#pragma once

#include <stdexcept>
#include <string>

namespace mmloc {

// Error carrying a stable machine-readable code alongside the human message.
// The CLI serializes these as {"error":{"code":...,"message":...}} on stderr.
class error : public std::runtime_error {
public:
    error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

}  // namespace mmloc
