#include "pme/curve.hpp"

#include "pme/errors.hpp"

namespace pme {

void BoundCurve::validate() const {
    for (std::size_t k = 1; k < points.size(); ++k)
        if (!(points[k].x > points[k - 1].x)) throw DomainError("BoundCurve: abscissas must be strictly increasing");
    if (!envelope.empty() && envelope.size() != points.size())
        throw DomainError("BoundCurve: envelope size must match points");
}

std::vector<std::size_t> lower_convex_hull(const std::vector<CurvePoint>& pts) {
    std::vector<std::size_t> hull;
    auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
        return (pts[a].x - pts[o].x) * (pts[b].y - pts[o].y) - (pts[a].y - pts[o].y) * (pts[b].x - pts[o].x);
    };
    for (std::size_t k = 0; k < pts.size(); ++k) {
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), k) <= 0.0) hull.pop_back();
        hull.push_back(k);
    }
    return hull;
}

std::vector<double> hull_envelope(const std::vector<CurvePoint>& pts, const std::vector<std::size_t>& hull) {
    std::vector<double> env(pts.size());
    std::size_t seg = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        while (seg + 1 < hull.size() && hull[seg + 1] < k) ++seg;
        if (seg + 1 >= hull.size() || hull[seg] == k) {
            env[k] = pts[hull[seg]].y;
            continue;
        }
        const auto& a = pts[hull[seg]];
        const auto& b = pts[hull[seg + 1]];
        double t = (pts[k].x - a.x) / (b.x - a.x);
        env[k] = a.y + t * (b.y - a.y);
    }
    return env;
}

}  // namespace pme
