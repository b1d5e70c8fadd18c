#pragma once

#include <stdexcept>
#include <string>

namespace dacl {

// Violated precondition, shape mismatch, or domain error. CLI maps this to exit code 1.
class ContractError : public std::logic_error {
public:
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// File access, parse, or format failure. CLI maps this to exit code 2.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractError(msg);
}

} // namespace dacl
