#pragma once

#include <stdexcept>

namespace mlat {

/// Bad input: malformed crystal, illegal dimensions, inconsistent parameters.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The reference lattice fails the phonon stability test.
class StabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative solve did not reach its tolerance, or hit an indefinite system.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An inverse was requested at k = 0, where the acoustic sector is singular.
class SingularPointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mlat
