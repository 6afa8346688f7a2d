#pragma once

#include <stdexcept>
#include <string>

namespace diqkd {

// Caller broke a documented precondition (shape, range, Hermiticity).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A computed quantity failed an internal consistency check.
class NumericIntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input lies outside the region where a closed form is defined.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ContractViolation(message);
}

}  // namespace diqkd
