#include "pme/math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/roots.hpp>

namespace pme {

void Tolerance::validate() const {
    if (!(rel > 0.0)) throw DomainError("Tolerance: rel must be positive");
    if (!(abs >= 0.0)) throw DomainError("Tolerance: abs must be nonnegative");
    if (max_iter < 1) throw DomainError("Tolerance: max_iter must be at least 1");
}

void Interval::validate() const {
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw DomainError("Interval: bounds must be finite");
    if (!(lo < hi)) throw DomainError("Interval: lo must be below hi");
}

double q_function(double x) {
    if (!std::isfinite(x)) throw DomainError("q_function: non-finite argument");
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double log_q_function(double x) {
    if (!std::isfinite(x)) throw DomainError("log_q_function: non-finite argument");
    if (x < 25.0) return std::log(q_function(x));
    double r = 1.0 / (x * x);
    double series = 1.0 + r * (-1.0 + r * (3.0 + r * (-15.0 + r * (105.0 + r * (-945.0)))));
    return -0.5 * x * x - std::log(x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double q_inverse(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("q_inverse: probability must lie in (0,1)");
    if (p > 0.5) return -q_inverse(1.0 - p);
    double x = std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
    // One Halley step against q_function tightens the last few ulps.
    double e = q_function(x) - p;
    double u = -e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x + u / (1.0 + 0.5 * x * u);
}

double binary_entropy(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("binary_entropy: argument must lie in [0,1]");
    double h = 0.0;
    if (x > 0.0) h -= x * std::log(x);
    if (x < 1.0) h -= (1.0 - x) * std::log1p(-x);
    return h;
}

namespace {

struct Panel {
    double a, b, value, err;
    bool operator<(const Panel& o) const { return err < o.err; }
};

Panel kronrod_panel(const RealFn& f, double a, double b) {
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, 0, 0.0, &err);
    // With max_depth 0 the reported error is for the panel mapped onto [-1, 1].
    return {a, b, v, err * 0.5 * (b - a)};
}

}  // namespace

double integrate(const RealFn& f, Interval iv, Tolerance tol, std::span<const double> knots) {
    iv.validate();
    tol.validate();
    std::vector<double> cuts{iv.lo};
    for (double k : knots)
        if (k > iv.lo && k < iv.hi) cuts.push_back(k);
    cuts.push_back(iv.hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    // One global heap over all pieces: the tolerance applies to the whole integral.
    std::vector<Panel> panels;
    panels.reserve(cuts.size() + static_cast<std::size_t>(tol.max_iter));
    double total = 0.0;
    double err = 0.0;
    double mag = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        panels.push_back(kronrod_panel(f, cuts[k], cuts[k + 1]));
        total += panels.back().value;
        err += panels.back().err;
        mag += std::abs(panels.back().value);
    }
    std::priority_queue<Panel> heap(std::less<Panel>{}, std::move(panels));
    const double roundoff = 64.0 * std::numeric_limits<double>::epsilon();
    int splits = 0;
    while (err > std::max({tol.abs, tol.rel * std::abs(total), roundoff * mag})) {
        if (splits >= tol.max_iter)
            throw NonConvergence("math_kernels", "integrate: tolerance not met within max_iter subdivisions", total,
                                 err);
        Panel worst = heap.top();
        heap.pop();
        double mid = 0.5 * (worst.a + worst.b);
        Panel l = kronrod_panel(f, worst.a, mid);
        Panel r = kronrod_panel(f, mid, worst.b);
        total += l.value + r.value - worst.value;
        err += l.err + r.err - worst.err;
        mag += std::abs(l.value) + std::abs(r.value) - std::abs(worst.value);
        heap.push(l);
        heap.push(r);
        ++splits;
    }
    return total;
}

ScalarMin minimize_scalar(const RealFn& f, Interval iv, Tolerance tol, int grid_points) {
    iv.validate();
    tol.validate();
    int n = std::max(grid_points, 256);
    double h = iv.width() / (n - 1);
    int best = 0;
    double fbest = f(iv.lo);
    for (int k = 1; k < n; ++k) {
        double x = (k == n - 1) ? iv.hi : iv.lo + k * h;
        double fx = f(x);
        if (fx < fbest) {
            fbest = fx;
            best = k;
        }
    }
    auto grid_x = [&](int k) { return k >= n - 1 ? iv.hi : iv.lo + k * h; };
    double a = grid_x(std::max(best - 1, 0));
    double b = grid_x(std::min(best + 1, n - 1));
    double xbest = grid_x(best);

    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < std::max(tol.max_iter, 200); ++it) {
        double mid = 0.5 * (a + b);
        if (b - a <= std::max(tol.abs, tol.rel * std::abs(mid)) || b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(mid))
            break;
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    if (fc < fbest) {
        fbest = fc;
        xbest = c;
    }
    if (fd < fbest) {
        fbest = fd;
        xbest = d;
    }
    double edge_tol = std::max(tol.abs, tol.rel * std::max(std::abs(iv.lo), std::abs(iv.hi))) + 1e-12 * iv.width();
    bool endpoint = (xbest - iv.lo <= edge_tol) || (iv.hi - xbest <= edge_tol);
    return {xbest, fbest, endpoint};
}

double find_root(const RealFn& f, Interval iv, Tolerance tol) {
    iv.validate();
    tol.validate();
    double flo = f(iv.lo);
    double fhi = f(iv.hi);
    if (flo == 0.0) return iv.lo;
    if (fhi == 0.0) return iv.hi;
    if (std::signbit(flo) == std::signbit(fhi))
        throw BracketError("find_root: no sign change on [" + std::to_string(iv.lo) + ", " +
                           std::to_string(iv.hi) + "]");
    auto done = [&](double a, double b) {
        double mid = 0.5 * (a + b);
        return b - a <= tol.rel * std::abs(mid) || b - a <= 4.0 * std::numeric_limits<double>::min();
    };
    auto g = [&](double x) {
        double v = f(x);
        return std::abs(v) <= tol.abs ? 0.0 : v;
    };
    std::uintmax_t iters = std::max<std::uintmax_t>(tol.max_iter, 1100);
    auto [a, b] = boost::math::tools::bisect(g, iv.lo, iv.hi, done, iters);
    return 0.5 * (a + b);
}

}  // namespace pme
