#pragma once

#include <stdexcept>
#include <string>

namespace ralab {

// Rejected configuration: out-of-range knob, inconsistent dimensions requested,
// unknown option name.  Thrown before any computation starts.
class config_error : public std::invalid_argument {
public:
    explicit config_error(const std::string& what) : std::invalid_argument(what) {}
};

// Mismatched operand shapes at a call site (pool vs. frame vs. particle sizes).
class shape_error : public std::invalid_argument {
public:
    explicit shape_error(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed external input: dataset file, parameter file, config file.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown that survives the documented recovery policy
// (e.g. a covariance factorization that fails even after one jitter retry).
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem-level failure while persisting or loading artifacts.
class persistence_error : public std::runtime_error {
public:
    explicit persistence_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ralab
