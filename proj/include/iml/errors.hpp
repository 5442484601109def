#pragma once

#include <stdexcept>
#include <string>

namespace iml {

// Input that violates a precondition (bad domain parameters, lattice mismatch,
// unsupported dimension, malformed config).
struct input_error : std::invalid_argument {
    explicit input_error(const std::string& what) : std::invalid_argument(what) {}
};

// A series or iterative scheme could not reach its requested tolerance within
// its budget.  Callers must not silently receive an unconverged value.
struct accuracy_error : std::runtime_error {
    explicit accuracy_error(const std::string& what) : std::runtime_error(what) {}
};

// Cost gate: the requested computation exceeds what the implementation is
// sized for (e.g. moment order or lattice too large).
struct resource_error : std::runtime_error {
    explicit resource_error(const std::string& what) : std::runtime_error(what) {}
};

// Lattice too coarse for the requested operation (e.g. eps < h).
struct resolution_error : std::runtime_error {
    explicit resolution_error(const std::string& what) : std::runtime_error(what) {}
};

// Linear or eigen solver failed to converge.
struct solver_error : std::runtime_error {
    explicit solver_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace iml
