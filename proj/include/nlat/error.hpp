#pragma once

#include <stdexcept>
#include <string>

namespace nlat {

class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when no lattice point sits at distance >= eps from the boundary.
class EmptyLattice : public std::runtime_error {
public:
    explicit EmptyLattice(const std::string& what) : std::runtime_error(what) {}
};

class DivergedError : public std::runtime_error {
public:
    explicit DivergedError(const std::string& what) : std::runtime_error(what) {}
};

class StudyFailure : public std::runtime_error {
public:
    explicit StudyFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nlat
