#pragma once

#include <stdexcept>
#include <string>

namespace citadel {

// Library failures carry a short machine-readable code ("unbalanced",
// "double-spend", ...) alongside the human message, so callers can branch
// or map to exit codes without parsing prose.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

}  // namespace citadel
