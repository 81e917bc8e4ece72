#include "pme/single_user.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <cstdio>
#include <vector>

#include "pme/errors.hpp"

namespace pme {

namespace {

std::string format_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

void TruncationPolicy::validate() const {
    if (!(tail_tol > 0.0)) throw DomainError("TruncationPolicy: tail_tol must be positive");
    if (max_terms < 2) throw DomainError("TruncationPolicy: max_terms must be >= 2");
}

void ReliabilitySelector::validate() const {
    if (rho_points < 64 || w_points < 64 || d_points < 64)
        throw DomainError("ReliabilitySelector: grid sizes must be >= 64");
}

namespace {

constexpr double kZeta2 = std::numbers::pi * std::numbers::pi / 6.0;
constexpr double kZeta3 = 1.2020569031595942854;

double weight_real(double x, WeightKind kind) {
    double w = (3.0 * x - 2.0) / (6.0 * x * x * (x - 1.0) * (x - 1.0));
    return kind == WeightKind::Legacy ? w / x : w;
}

}  // namespace

double mse_weight(std::int64_t i, WeightKind kind) {
    if (i < 2) return 0.0;
    return weight_real(static_cast<double>(i), kind);
}

double mse_tail_weight(std::int64_t n, WeightKind kind) {
    if (n < 1) throw DomainError("mse_tail_weight: n must be >= 1");
    if (n < 20) {
        double total = kind == WeightKind::Improved ? (3.0 - kZeta2) / 6.0 : (3.0 - 2.0 * kZeta3) / 6.0;
        for (std::int64_t i = 2; i <= n; ++i) total -= mse_weight(i, kind);
        return total;
    }
    double r = 1.0 / static_cast<double>(n);
    double r2 = r * r;
    if (kind == WeightKind::Improved)
        return r2 * (1.0 / 4 - r / 36 + r2 * r * (1.0 / 180 - r2 / 252 + r2 * r2 / 180 - r2 * r2 * r2 * 5.0 / 396));
    return r2 * r * (1.0 / 6 - r / 12 + r2 * r * (1.0 / 36 - r2 / 36 + r2 * r2 / 20 - r2 * r2 * r2 * 5.0 / 36));
}

double mse_integrand(double delta, double p_zr, WeightKind kind) {
    if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("mse_integrand: delta must lie in (0,1]");
    double c = std::ceil(1.0 / delta);
    double base = delta * (1.0 + delta - c * delta) * p_zr;
    return kind == WeightKind::Improved ? c * base : base;
}

namespace {

// Tail sum over i > n approximated by the midpoint Euler-Maclaurin form
// int_{n+1/2}^inf g + g'(n+1/2)/24 with g(x) = w(x) P(x).
double smooth_tail(const ZrEvaluator& p, std::int64_t n, WeightKind kind) {
    double x0 = static_cast<double>(n) + 0.5;
    auto g = [&](double x) { return weight_real(x, kind) * p.smooth(x); };
    auto integrand = [&](double t) {
        double x = x0 * std::exp(t);
        return g(x) * x;
    };
    double integral;
    try {
        integral = integrate(integrand, {0.0, 40.0}, {1e-11, 0.0, 400});
    } catch (const NonConvergence& nc) {
        integral = nc.best_estimate();
    }
    double h = 0.25;
    double slope = (g(x0 + h) - g(x0 - h)) / (2.0 * h);
    return integral + slope / 24.0;
}

SeriesValue zr_series(const ChannelSpec& ch, const ZrSelector& zr, const TruncationPolicy& trunc, WeightKind kind) {
    trunc.validate();
    ZrEvaluator p(ch, zr);
    if (p.limit() <= 0.0) return {0.0, 0.0, 1};

    double partial = 0.0;
    std::int64_t i = 2;
    std::int64_t checkpoint = std::min<std::int64_t>(64, trunc.max_terms);
    double prev_total = std::numeric_limits<double>::quiet_NaN();
    for (;;) {
        for (; i <= checkpoint; ++i) partial += mse_weight(i, kind) * p(i);
        double w_tail = mse_tail_weight(checkpoint, kind);
        double lo = p(checkpoint + 1) * w_tail;
        double hi = p.limit() * w_tail;
        double tail = std::clamp(smooth_tail(p, checkpoint, kind), lo, hi);
        double total = partial + tail;
        double half_width = 0.5 * (hi - lo);
        double unc = std::isnan(prev_total) ? half_width : std::min(std::abs(prev_total - total), half_width);
        if (unc <= trunc.tail_tol * total) return {0.5 * total, 0.5 * unc, checkpoint};
        if (checkpoint >= trunc.max_terms)
            throw NonConvergence("single_user",
                                 "series tail above tail_tol=" + format_g(trunc.tail_tol) + " after " +
                                     std::to_string(checkpoint) + " terms",
                                 0.5 * total, 0.5 * unc);
        prev_total = total;
        checkpoint = std::min(2 * checkpoint, trunc.max_terms);
    }
}

}  // namespace

SeriesValue mse_lower_bound(const ChannelSpec& ch, const ZrSelector& zr, const TruncationPolicy& trunc) {
    return zr_series(ch, zr, trunc, WeightKind::Improved);
}

SeriesValue legacy_mse_lower_bound(const ChannelSpec& ch, const ZrSelector& zr, const TruncationPolicy& trunc) {
    return zr_series(ch, zr, trunc, WeightKind::Legacy);
}

Bracket mse_lower_bound_quadrature(const ChannelSpec& ch, const ZrSelector& zr, std::int64_t pieces, WeightKind kind) {
    if (pieces < 2) throw DomainError("mse_lower_bound_quadrature: pieces must be >= 2");
    ZrEvaluator p(ch, zr);
    std::int64_t cached_m = -1;
    double cached_p = 0.0;
    auto f = [&](double delta) {
        auto m = static_cast<std::int64_t>(std::ceil(1.0 / delta));
        if (m != cached_m) {
            cached_m = m;
            cached_p = p(m);
        }
        return mse_integrand(delta, cached_p, kind);
    };
    std::vector<double> knots;
    knots.reserve(static_cast<std::size_t>(pieces));
    for (std::int64_t i = 2; i < pieces; ++i) knots.push_back(1.0 / static_cast<double>(i));
    double body = integrate(f, {1.0 / static_cast<double>(pieces), 1.0}, {1e-12, 0.0, 50}, knots);
    double w_tail = mse_tail_weight(pieces, kind);
    return {0.5 * (body + p(pieces + 1) * w_tail), 0.5 * (body + p.limit() * w_tail)};
}

double goblick_rd_bound(const ChannelSpec& ch) {
    ch.validate();
    return std::exp(-ch.e_over_n) / (2.0 * std::numbers::pi * std::numbers::e);
}

double capacity(double a) {
    if (!(a >= 0.0)) throw DomainError("capacity: SNR must be >= 0");
    return 0.5 * std::log1p(a);
}

double sphere_packing_exponent(double r, double a) {
    if (!(a >= 0.0)) throw DomainError("sphere_packing_exponent: SNR must be >= 0");
    if (!(r >= 0.0)) throw DomainError("sphere_packing_exponent: rate must be >= 0");
    if (!(r < capacity(a))) throw DomainError("sphere_packing_exponent: rate must be below capacity");
    double t = a * (-std::expm1(-2.0 * r));
    return a / 2.0 - t / 4.0 - std::sqrt(t * (t + 4.0)) / 4.0 + r + std::numbers::ln2 -
           std::log(std::sqrt(t) + std::sqrt(t + 4.0));
}

double r_min_sphere_packing(double a) {
    if (!(a > 0.0)) throw DomainError("r_min_sphere_packing: SNR must be positive");
    return 0.5 * std::log((a + std::sqrt(a * a - 2.0 * a + 9.0) + 3.0) / 6.0);
}

double abl_rho_kl(double r) {
    if (!(r > 0.0)) throw DomainError("abl_rho_kl: rate must be positive");
    auto f = [r](double rho) { return r - (1.0 + rho) * binary_entropy(rho / (1.0 + rho)); };
    double hi = 1.0;
    while (f(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e12) throw DomainError("abl_rho_kl: no root below 1e12");
    }
    try {
        return find_root(f, {0.0, hi}, {1e-14, 0.0, 2000});
    } catch (const BracketError& e) {
        throw DomainError(std::string("abl_rho_kl: ") + e.what());
    }
}

double abl_program(double r, double a, const ReliabilitySelector& sel) {
    sel.validate();
    if (!(r > 0.0 && r < capacity(a))) throw DomainError("abl_exponent: rate must lie in (0, C(a))");
    const double rho_kl = abl_rho_kl(r);
    auto w_max_of = [](double rho) {
        return std::numbers::sqrt2 * (std::sqrt(1.0 + rho) - std::sqrt(rho)) / std::sqrt(1.0 + 2.0 * rho);
    };
    const double d_max = w_max_of(rho_kl);
    const double c35 = 3.0 - std::sqrt(5.0);

    auto f_abl = [r](double x, double rho) {
        double k = 1.0 + 2.0 * rho;
        double disc = k * k * x * x - 4.0 * rho * (1.0 + rho);
        if (disc < 0.0) return std::numeric_limits<double>::infinity();
        double s = std::sqrt(disc);
        double head = r - (1.0 + rho) * binary_entropy(rho / (1.0 + rho));
        return head + std::log((x + s) / 2.0) - k * std::log((k * x + s) / (2.0 * (1.0 + rho)));
    };

    // For fixed rho the d-maximisation is explicit: on the branch where L takes its
    // first argument the optimum sits at w = w_max with d^2 = min((3-sqrt5) w_max^2, d_max^2);
    // on the branch L = F_ABL the best d is min(d_max, w).
    auto inner = [&](double rho) {
        double w_max = w_max_of(rho);
        double v1 = a / 8.0 * std::min(c35 * w_max * w_max, d_max * d_max);
        auto v2 = [&](double w) {
            double d = std::min(d_max, w);
            double f = f_abl(1.0 - w * w / 2.0, rho);
            return std::min(a * d * d / 8.0, a * w * w / 8.0 - f);
        };
        auto best = minimize_scalar([&](double w) { return -v2(w); }, {0.0, w_max}, {1e-10, 1e-13, 200}, sel.w_points);
        return std::max(v1, -best.min);
    };
    if (rho_kl <= 0.0) return inner(0.0);
    return minimize_scalar(inner, {0.0, rho_kl}, {1e-10, 1e-13, 200}, sel.rho_points).min;
}

double abl_exponent(double r, double a, const ReliabilitySelector& sel) {
    return std::min(sphere_packing_exponent(r, a), abl_program(r, a, sel));
}

double reliability_bound(double r, double a, const ReliabilitySelector& sel) {
    return sel.kind == ReliabilityKind::ABL ? abl_exponent(r, a, sel) : sphere_packing_exponent(r, a);
}

ExponentMin mse_exponent_bound(double a, const RealFn& e_u) {
    if (!(a > 0.0)) throw DomainError("mse_exponent_bound: SNR must be positive");
    double c = capacity(a);
    auto m = minimize_scalar([&](double r) { return 2.0 * r + e_u(r); }, {0.0, c * (1.0 - 1e-12)}, {1e-12, 1e-14, 200});
    return {m.min, m.argmin, m.argmin};
}

ExponentMin mse_exponent_bound(double a, const ReliabilitySelector& sel) {
    sel.validate();
    if (!(a > 0.0)) throw DomainError("mse_exponent_bound: SNR must be positive");
    double c = capacity(a);
    if (sel.kind == ReliabilityKind::SpherePacking) {
        auto numeric = mse_exponent_bound(a, [a](double r) { return sphere_packing_exponent(r, a); });
        double r_star = r_min_sphere_packing(a);
        return {2.0 * r_star + sphere_packing_exponent(r_star, a), r_star, numeric.argmin};
    }
    // Lower edge kept strictly positive: the program needs rho_kl > 0.
    double lo = c * 1e-9;
    auto e = [&](double r) { return 2.0 * r + abl_exponent(r, a, sel); };
    auto m = minimize_scalar(e, {lo, c * (1.0 - 1e-9)}, {1e-9, 1e-12, 200});
    // The sphere-packing minimiser is a valid candidate point of the same minimisation.
    double r_sp = r_min_sphere_packing(a);
    double at_sp = e(r_sp);
    if (at_sp < m.min) return {at_sp, r_sp, r_sp};
    return {m.min, m.argmin, m.argmin};
}

}  // namespace pme
