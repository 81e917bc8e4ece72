#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pme/errors.hpp"

namespace pme {

struct Tolerance {
    double rel = 1e-10;
    double abs = 0.0;
    int max_iter = 200;

    void validate() const;
};

struct Interval {
    double lo;
    double hi;

    void validate() const;
    double width() const { return hi - lo; }
};

using RealFn = std::function<double(double)>;

double q_function(double x);
double log_q_function(double x);
double q_inverse(double p);
double binary_entropy(double x);

// Adaptive Gauss-Kronrod on each piece between consecutive knots; knots outside
// the interval are ignored. max_iter bounds the total number of panel splits.
double integrate(const RealFn& f, Interval iv, Tolerance tol, std::span<const double> knots = {});

struct ScalarMin {
    double argmin;
    double min;
    bool at_endpoint;
};

ScalarMin minimize_scalar(const RealFn& f, Interval iv, Tolerance tol, int grid_points = 256);

double find_root(const RealFn& f, Interval iv, Tolerance tol);

}  // namespace pme
