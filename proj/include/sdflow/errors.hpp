#pragma once

#include <stdexcept>
#include <string>

namespace sdflow {

class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Curve fails a structural invariant (too few nodes, non-finite data, ...).
class invalid_curve_error : public error {
public:
    using error::error;
};

// An edge of the polygon is shorter than the degeneracy threshold.
class degenerate_edge_error : public invalid_curve_error {
public:
    degenerate_edge_error(const std::string& msg, long edge)
        : invalid_curve_error(msg), edge_index(edge) {}
    long edge_index;
};

// The moving edge vector passes through (or too close to) zero during a step.
class edge_collapse_error : public error {
public:
    explicit edge_collapse_error(const std::string& msg, long element = -1)
        : error(msg), element_index(element) {}
    long element_index;
};

class singular_system_error : public error {
public:
    explicit singular_system_error(const std::string& msg, long row = -1,
                                   double condition_estimate = 0.0)
        : error(msg), row_index(row), condition_estimate(condition_estimate) {}
    long row_index;
    double condition_estimate;
};

class invalid_parameter_error : public error {
public:
    using error::error;
};

class io_error : public error {
public:
    using error::error;
};

}  // namespace sdflow
