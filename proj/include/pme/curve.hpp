#pragma once

#include <map>
#include <string>
#include <vector>

namespace pme {

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    bool flag = false;  // hull vertex for MSE curves, infeasible point for exponent curves
};

struct BoundCurve {
    std::string method;
    std::vector<CurvePoint> points;
    // Envelope ordinate at each abscissa of `points`; empty when not requested.
    std::vector<double> envelope;
    std::map<std::string, double> meta;

    void validate() const;
};

// Indices of the lower convex hull vertices of points sorted by strictly increasing x.
std::vector<std::size_t> lower_convex_hull(const std::vector<CurvePoint>& pts);

// Piecewise-linear interpolation of the hull vertices at every abscissa of pts.
std::vector<double> hull_envelope(const std::vector<CurvePoint>& pts, const std::vector<std::size_t>& hull);

}  // namespace pme
