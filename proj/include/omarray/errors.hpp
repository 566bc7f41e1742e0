#pragma once

#include <stdexcept>
#include <string>

namespace omarray
{

// Raised when a parameter set or input violates a documented precondition.
class ValidationError : public std::invalid_argument
{
public:
    explicit ValidationError(const std::string &what) : std::invalid_argument(what) {}
};

// Raised when a computation hits a singular or ill-conditioned point.
class NumericalError : public std::runtime_error
{
public:
    explicit NumericalError(const std::string &what) : std::runtime_error(what) {}
};

} // namespace omarray
