#pragma once

#include <stdexcept>
#include <string>

namespace ggrx {

// Single exception type for the whole library. Messages are complete
// sentences with enough context to act on (file:line for parse errors).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace ggrx
