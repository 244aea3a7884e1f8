#pragma once

#include <stdexcept>
#include <string>

namespace entrain {

// Malformed or inconsistent input: manifests, embedding files, configs.
// The CLI maps this to exit status 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A statistic is undefined for the given data (constant series, zero-variance
// differences, too few samples).
class DegenerateError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

} // namespace entrain
