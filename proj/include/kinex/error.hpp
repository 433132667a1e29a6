#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kinex {

// A caller supplied a value outside an operation's domain.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A component produced a value that breaks a documented contract (e.g. an
// exchange outcome outside the support of the rule). Never recovered from.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A conserved quantity or positivity bound drifted past tolerance at run time.
class InvariantBreach : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Gini and liquidity are undefined when the total wealth is zero.
class DegenerateInput : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ParseError : public InvalidArgument {
public:
    ParseError(const std::string& what, std::size_t position)
        : InvalidArgument(what + " (at position " + std::to_string(position) + ")"),
          position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

}  // namespace kinex
