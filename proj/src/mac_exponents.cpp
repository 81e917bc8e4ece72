#include "pme/mac_exponents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pme/errors.hpp"
#include "pme/math.hpp"
#include "pme/parallel.hpp"

namespace pme {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Divergence clipped to zero at and above capacity, where the auxiliary channel no longer
// excludes the rate.
double clipped_divergence(double r, double s) {
    if (r >= capacity(s)) return 0.0;
    return divergence(r, s);
}

}  // namespace

void ExponentPoint::validate() const {
    if (!(eps1 >= 0.0) || !(eps2 >= 0.0)) throw DomainError("ExponentPoint: exponents must be >= 0");
}

void AlphaPolicy::validate() const {
    if (!std::isfinite(alpha_max)) throw DomainError("AlphaPolicy: alpha_max must be finite");
    if (grid_points < 128) throw DomainError("AlphaPolicy: grid_points must be >= 128");
}

std::string backend_name(ExponentBackend b) {
    switch (b) {
        case ExponentBackend::Divergence: return "divergence";
        case ExponentBackend::SpherePacking: return "sphere_packing";
        case ExponentBackend::ABL: return "abl";
    }
    return "unknown";
}

double divergence(double r, double s_over_n) {
    if (!(r > 0.0)) throw DomainError("divergence: rate must be positive");
    if (!(s_over_n > 0.0)) throw DomainError("divergence: SNR must be positive");
    double x = s_over_n / std::expm1(2.0 * r);
    return 0.5 * (x - std::log(x) - 1.0);
}

ExponentModel::ExponentModel(double a, ExponentBackend backend, const ReliabilitySelector& abl)
    : a_(a), backend_(backend) {
    if (!(a > 0.0)) throw DomainError("ExponentModel: SNR must be positive");
    c2_ = capacity(2.0 * a);
    if (backend == ExponentBackend::Divergence) {
        const double s = a;
        r1_ = 0.5 * std::log((s + 5.0 + std::sqrt(s * s + 10.0 * s + 1.0)) / 6.0);
        f1_ = 2.0 * r1_ + divergence(r1_, s);
        double x = (2.0 * s + 3.0 + std::sqrt(4.0 * s * s + 12.0 * s + 1.0)) / 4.0;
        r12_ = 0.5 * std::log(x);
        g12_ = r12_ + divergence(r12_, 2.0 * s);
        return;
    }
    auto m = minimize_scalar([&](double r) { return g_sp(r); }, {c2_ * 1e-12, c2_ * (1.0 - 1e-12)}, {1e-12, 1e-15, 200});
    r12_ = m.argmin;
    g12_ = m.min;
    if (backend == ExponentBackend::SpherePacking) {
        auto f1 = mse_exponent_bound(a, ReliabilitySelector{ReliabilityKind::SpherePacking});
        f1_ = f1.value;
        r1_ = f1.argmin;
        return;
    }
    ReliabilitySelector sel = abl;
    sel.kind = ReliabilityKind::ABL;
    auto f1 = mse_exponent_bound(a, sel);
    f1_ = f1.value;
    r1_ = f1.argmin;
    const double lo = c2_ * 1e-9, hi = c2_ * (1.0 - 1e-9);
    nodes_r_.resize(kAblTable);
    nodes_g_.resize(kAblTable);
    for (int k = 0; k < kAblTable; ++k)
        nodes_r_[k] = k == kAblTable - 1 ? hi : lo + (hi - lo) * k / (kAblTable - 1);
    parallel_for(kAblTable, [&](std::size_t k) {
        nodes_g_[k] = nodes_r_[k] + abl_program(nodes_r_[k], 2.0 * a, sel);
    });
    suffix_min_ = nodes_g_;
    for (int k = kAblTable - 2; k >= 0; --k) suffix_min_[k] = std::min(suffix_min_[k], suffix_min_[k + 1]);
}

double ExponentModel::g_sp(double r) const { return r + sphere_packing_exponent(r, 2.0 * a_); }

double ExponentModel::f12_sp(double alpha) const {
    if (alpha <= r12_) return g12_ - alpha;
    if (backend_ == ExponentBackend::Divergence) return divergence(alpha, 2.0 * a_);
    return sphere_packing_exponent(alpha, 2.0 * a_);
}

// min over r >= alpha of the piecewise-linear interpolant of r + program(r, 2a), minus alpha.
double ExponentModel::program_part(double alpha) const {
    if (alpha > nodes_r_.back()) return kInf;
    if (alpha <= nodes_r_.front()) return suffix_min_.front() - alpha;
    auto it = std::upper_bound(nodes_r_.begin(), nodes_r_.end(), alpha);
    auto k = static_cast<std::size_t>(it - nodes_r_.begin());  // nodes_r_[k-1] <= alpha < nodes_r_[k]
    double t = (alpha - nodes_r_[k - 1]) / (nodes_r_[k] - nodes_r_[k - 1]);
    double at = nodes_g_[k - 1] + t * (nodes_g_[k] - nodes_g_[k - 1]);
    return std::min(at, suffix_min_[k]) - alpha;
}

double ExponentModel::f12(double alpha) const {
    if (!(alpha >= 0.0)) throw DomainError("f12: alpha must be >= 0");
    if (alpha >= c2_) return kInf;
    double v = f12_sp(alpha);
    if (backend_ == ExponentBackend::ABL) v = std::min(v, program_part(alpha));
    return v;
}

double ExponentModel::f(double alpha) const { return std::min({f1_, f1_ - 2.0 * alpha, f12(alpha)}); }

FComponents ExponentModel::components(double alpha) const {
    FComponents out;
    out.f1 = f1_;
    out.f2 = f1_ - 2.0 * alpha;
    out.r1 = r1_;
    out.f12 = f12(alpha);
    out.f12_feasible = std::isfinite(out.f12);
    out.r12 = 0.5 * std::max(alpha, r12_);
    if (backend_ == ExponentBackend::ABL && out.f12_feasible && program_part(alpha) < f12_sp(alpha)) {
        auto first = static_cast<std::size_t>(std::upper_bound(nodes_r_.begin(), nodes_r_.end(), alpha) - nodes_r_.begin());
        first = std::min(first, nodes_r_.size() - 1);
        auto best = std::min_element(nodes_g_.begin() + static_cast<std::ptrdiff_t>(first), nodes_g_.end());
        out.r12 = 0.5 * std::max(alpha, nodes_r_[static_cast<std::size_t>(best - nodes_g_.begin())]);
    }
    return out;
}

FComponents f_components_divergence(double s_over_n, double alpha) {
    return ExponentModel(s_over_n, ExponentBackend::Divergence).components(alpha);
}

FComponents f_components_sp(double a, double alpha) {
    return ExponentModel(a, ExponentBackend::SpherePacking).components(alpha);
}

FComponents f_components_abl(double a, double alpha) {
    return ExponentModel(a, ExponentBackend::ABL).components(alpha);
}

Eps1Solver::Eps1Solver(const ExponentModel& model, const AlphaPolicy& pol) : model_(model) {
    pol.validate();
    const double amax = pol.alpha_max > 0.0 ? pol.alpha_max : model.f1();
    const int n = pol.grid_points;
    alpha_.resize(n);
    f_.resize(n);
    h_.resize(n);
    for (int k = 0; k < n; ++k) {
        alpha_[k] = k == n - 1 ? amax : amax * k / (n - 1);
        f_[k] = model.f(alpha_[k]);
        h_[k] = f_[k] + 2.0 * alpha_[k];
    }
}

Eps1Bound Eps1Solver::operator()(double eps2) const {
    if (!(eps2 >= 0.0)) throw DomainError("eps1_bound: eps2 must be >= 0");
    const Tolerance tol{1e-14, 0.0, 200};
    Eps1Bound out;
    out.single_user = model_.f1();

    // F + 2 alpha is nondecreasing: the joint set is [0, alpha_joint].
    auto hk = std::upper_bound(h_.begin(), h_.end(), eps2);
    if (hk == h_.begin()) {
        out.joint = kInf;
    } else if (hk == h_.end()) {
        out.alpha_joint = alpha_.back();
        out.at_alpha_max = true;
        out.joint = f_.back();
    } else {
        auto k = static_cast<std::size_t>(hk - h_.begin());
        out.alpha_joint = find_root([&](double a) { return model_.f(a) + 2.0 * a - eps2; }, {alpha_[k - 1], alpha_[k]}, tol);
        out.joint = model_.f(out.alpha_joint);
    }

    // F is nonincreasing: the cross set is [alpha_cross, alpha_max].
    auto fk = std::find_if(f_.begin(), f_.end(), [&](double v) { return v <= eps2; });
    if (fk == f_.end()) {
        out.cross = kInf;
    } else if (fk == f_.begin()) {
        out.alpha_cross = 0.0;
        out.cross = f_.front();
    } else {
        auto k = static_cast<std::size_t>(fk - f_.begin());
        out.alpha_cross = find_root([&](double a) { return model_.f(a) - eps2; }, {alpha_[k - 1], alpha_[k]}, tol);
        out.cross = model_.f(out.alpha_cross) + 2.0 * out.alpha_cross;
    }

    double v = std::min({out.single_user, out.joint, out.cross});
    out.infeasible = v < 0.0;
    out.value = std::max(v, 0.0);
    return out;
}

Eps1Bound eps1_bound(double eps2, const ExponentModel& model, const AlphaPolicy& pol) {
    return Eps1Solver(model, pol)(eps2);
}

Eps1Bound eps1_bound(double eps2, double a, ExponentBackend backend, const AlphaPolicy& pol) {
    ExponentModel model(a, backend);
    return eps1_bound(eps2, model, pol);
}

double DenseAlphaScan::spacing() const { return alpha.size() < 2 ? 0.0 : alpha[1] - alpha[0]; }

DenseAlphaScan dense_alpha_scan(const ExponentModel& model, double alpha_max, int points) {
    if (!(alpha_max > 0.0) || points < 2) throw DomainError("dense_alpha_scan: need alpha_max > 0 and >= 2 points");
    DenseAlphaScan out;
    out.f1 = model.f1();
    out.alpha.resize(points);
    out.f.resize(points);
    for (int k = 0; k < points; ++k) {
        out.alpha[k] = alpha_max * k / (points - 1);
        out.f[k] = model.f(out.alpha[k]);
    }
    return out;
}

DenseAlphaScan dense_alpha_scan_divergence(double s, double alpha_max, int points) {
    if (!(s > 0.0)) throw DomainError("dense_alpha_scan_divergence: SNR must be positive");
    if (!(alpha_max > 0.0) || points < 2) throw DomainError("dense_alpha_scan_divergence: need alpha_max > 0 and >= 2 points");
    const Tolerance tol{1e-12, 1e-15, 200};
    const double c1 = capacity(s), c2 = capacity(2.0 * s);
    DenseAlphaScan out;
    out.f1 = minimize_scalar([&](double r) { return 2.0 * r + clipped_divergence(r, s); }, {1e-12, c1}, tol).min;
    out.alpha.resize(points);
    out.f.resize(points);
    parallel_for(static_cast<std::size_t>(points), [&](std::size_t k) {
        double a = alpha_max * static_cast<double>(k) / (points - 1);
        double lo = a > 0.0 ? 0.0 : 1e-12;
        double f2 = minimize_scalar([&](double r) { return 2.0 * r + clipped_divergence(r + a, s); }, {lo, c1}, tol).min;
        double f12 = minimize_scalar([&](double r) { return 2.0 * r + clipped_divergence(2.0 * r + a, 2.0 * s); },
                                     {lo, c2}, tol).min;
        out.alpha[k] = a;
        out.f[k] = std::min({out.f1, f2, f12});
    });
    return out;
}

double eps1_bound_dense(double eps2, const DenseAlphaScan& scan) {
    double joint = kInf, cross = kInf;
    for (std::size_t k = 0; k < scan.alpha.size(); ++k) {
        double f = scan.f[k], a = scan.alpha[k];
        if (f + 2.0 * a <= eps2) joint = std::min(joint, f);
        if (f <= eps2) cross = std::min(cross, f + 2.0 * a);
    }
    return std::max(0.0, std::min({scan.f1, joint, cross}));
}

BoundCurve trace_exponent_region(double a, ExponentBackend backend, const std::vector<double>& eps_grid,
                                 const AlphaPolicy& pol) {
    if (eps_grid.empty()) throw DomainError("trace_exponent_region: eps grid is empty");
    for (std::size_t k = 1; k < eps_grid.size(); ++k)
        if (!(eps_grid[k] > eps_grid[k - 1])) throw DomainError("trace_exponent_region: eps grid must be strictly increasing");
    ExponentModel model(a, backend);
    Eps1Solver solver(model, pol);

    BoundCurve curve;
    curve.method = backend_name(backend);
    curve.points.resize(eps_grid.size());
    curve.envelope.resize(eps_grid.size());
    parallel_for(eps_grid.size(), [&](std::size_t k) {
        Eps1Bound b = solver(eps_grid[k]);
        curve.points[k] = {eps_grid[k], b.value, b.infeasible};
        // Mirrored constraint eps2 <= b(eps1): the largest eps1 it admits, b being nonincreasing.
        double y = eps_grid[k];
        double mirror;
        if (solver(0.0).value < y) {
            mirror = 0.0;
        } else if (solver(model.f1()).value >= y) {
            mirror = model.f1();
        } else {
            double lo = 0.0, hi = model.f1();
            for (int it = 0; it < 100 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
                double mid = 0.5 * (lo + hi);
                (solver(mid).value >= y ? lo : hi) = mid;
            }
            mirror = lo;
        }
        curve.envelope[k] = std::min(b.value, mirror);
    });
    curve.meta = {{"snr", a},
                  {"f1", model.f1()},
                  {"alpha_max", solver.alpha_max()},
                  {"alpha_points", static_cast<double>(pol.grid_points)}};
    return curve;
}

}  // namespace pme
