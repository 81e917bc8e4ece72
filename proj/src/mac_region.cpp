#include "pme/mac_region.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "pme/errors.hpp"
#include "pme/math.hpp"
#include "pme/parallel.hpp"

namespace pme {

namespace {

std::string format_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

void ThetaGrid::validate() const {
    if (values.empty()) throw DomainError("ThetaGrid: empty");
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!(values[k] > 0.0 && values[k] <= 1.0)) throw DomainError("ThetaGrid: values must lie in (0,1]");
        if (k > 0 && !(values[k] > values[k - 1])) throw DomainError("ThetaGrid: values must be strictly increasing");
    }
}

ThetaGrid ThetaGrid::log_spaced(int points, double lo) {
    if (points < 2) throw DomainError("ThetaGrid: need at least 2 points");
    if (!(lo > 0.0 && lo < 1.0)) throw DomainError("ThetaGrid: lo must lie in (0,1)");
    ThetaGrid g;
    double step = -std::log(lo) / (points - 1);
    for (int k = 0; k < points; ++k) g.values.push_back(k == points - 1 ? 1.0 : lo * std::exp(step * k));
    return g;
}

ThetaGrid ThetaGrid::log_with_rationals(int points, double lo, int max_denominator, int max_reciprocal) {
    if (max_denominator < 1 || max_reciprocal < 1) throw DomainError("ThetaGrid: rational limits must be >= 1");
    ThetaGrid g = log_spaced(points, lo);
    for (int q = 1; q <= max_denominator; ++q)
        for (int p = 1; p <= q; ++p)
            if (std::gcd(p, q) == 1) g.values.push_back(static_cast<double>(p) / q);
    for (int k = 1; k <= max_reciprocal; ++k) g.values.push_back(1.0 / k);
    std::erase_if(g.values, [lo](double t) { return t < lo; });
    std::sort(g.values.begin(), g.values.end());
    // Merge points closer than a few ulps so the grid stays strictly increasing.
    auto close = [](double a, double b) { return b - a <= 4.0 * std::numeric_limits<double>::epsilon() * b; };
    g.values.erase(std::unique(g.values.begin(), g.values.end(), close), g.values.end());
    return g;
}

void MsePoint::validate() const {
    if (!(mse1 >= 0.0 && mse1 <= 1.0 && mse2 >= 0.0 && mse2 <= 1.0)) throw DomainError("MsePoint: components must lie in [0,1]");
}

namespace {

void check_delta(double d, const char* name) {
    if (!(d > 0.0 && d <= 1.0)) throw DomainError(std::string("lb_two_user: ") + name + " must lie in (0,1]");
}

double lb_weight(double d, std::int64_t m) {
    double c = static_cast<double>(m);
    return c * (1.0 + d - c * d);
}

std::int64_t ceil_inv(double d) { return static_cast<std::int64_t>(std::ceil(1.0 / d)); }

// Closed-form pieces of C_1(theta) indexed by user 2's index i = ceil(1/(theta Delta)).
// Pieces are grouped into cells of constant user-1 index c = ceil(1/Delta) = ceil(i theta).
class CThetaEngine {
public:
    static constexpr std::int64_t kDirectRun = 16;
    // Above this index the expanded closed form cancels badly and the exact quadrature takes over.
    static constexpr double kClosedFormMax = 1024.0;

    CThetaEngine(double theta, const MacSpec& mac, const MacZrSelector& zr)
        : theta_(theta), p_(mac, zr), i0_(static_cast<std::int64_t>(std::ceil(1.0 / theta))) {}

    std::int64_t first_index() const { return i0_; }
    double limit() const { return p_.limit(); }
    std::int64_t c_of(std::int64_t i) const {
        return static_cast<std::int64_t>(std::ceil(static_cast<double>(i) * theta_));
    }

    // Last user-2 index whose piece lies in cell c.
    std::int64_t cut_of(std::int64_t c) const {
        auto i = static_cast<std::int64_t>(std::floor(static_cast<double>(c) / theta_));
        while (c_of(i + 1) <= c) ++i;
        while (c_of(i) > c) --i;
        return i;
    }

    // Delta in (1/(theta i0), 1], where ceil(1/Delta) = 2.
    double boundary() const {
        double n = static_cast<double>(i0_);
        double t = theta_;
        double w = (n - 1.0 / (t * t * n)) + 2.0 * (t - t * n - 1.0) / 3.0 * (n - 1.0 / (t * t * t * n * n)) +
                   (n - 1.0 / (t * t * t * t * n * n * n)) * t * (n - 1.0) / 2.0;
        return w * p_(2, i0_);
    }

    double piece(std::int64_t i) const {
        const double t = theta_;
        const double di = static_cast<double>(i);
        const std::int64_t ci = c_of(i);
        const std::int64_t cp = c_of(i - 1);
        if (ci == cp) return equal_weight(static_cast<double>(ci), di) * p_(ci, i);
        double split = std::clamp(1.0 / static_cast<double>(cp), 1.0 / (t * di), 1.0 / (t * (di - 1.0)));
        double upper = integral(static_cast<double>(cp), di, split, 1.0 / (t * (di - 1.0))) * p_(cp, i);
        double lower = integral(static_cast<double>(ci), di, 1.0 / (t * di), split) * p_(ci, i);
        return upper + lower;
    }

    // Sum of the pieces in (from, cell c], all of which lie in cell c.
    double cell_sum(std::int64_t c, std::int64_t from) const {
        std::int64_t a = from + 1;
        const std::int64_t b = cut_of(c);
        double s = 0.0;
        if (a <= b && c_of(a - 1) != c_of(a)) s += piece(a++);
        if (b - a + 1 < kDirectRun) {
            for (std::int64_t i = a; i <= b; ++i) s += piece(i);
            return s;
        }
        return s + run_sum(static_cast<double>(c), a, b);
    }

    // Moments int over Delta in (da, db) of Delta^(k+1) * P(1/Delta, 1/(theta Delta)), k = 0..2,
    // on the smooth extension of P.
    std::array<double, 3> smooth_mass(double da, double db) const {
        double span = std::log(db / da);
        // Below the Taylor cutoff the extension is piecewise in each index: cut at integers.
        std::vector<double> knots;
        for (int k = 2; k <= ShannonQSum::kCut + 1; ++k) {
            for (double d : {1.0 / k, 1.0 / (theta_ * k)}) {
                if (d > da && d < db) knots.push_back(std::log(db / d));
            }
        }
        std::array<double, 3> out{};
        for (int k = 0; k < 3; ++k) {
            auto f = [&](double s) {
                double d = db * std::exp(-s);
                return std::pow(d, 2 + k) * p_.smooth(1.0 / d, 1.0 / (theta_ * d));
            };
            try {
                out[k] = integrate(f, {0.0, span}, {1e-9, 0.0, 200}, knots);
            } catch (const NonConvergence& nc) {
                out[k] = nc.best_estimate();
            }
        }
        return out;
    }

    double delta_at(std::int64_t i) const { return 1.0 / (theta_ * static_cast<double>(i)); }

private:
    // Closed-form weight of a whole piece i with constant user-1 index c.
    double equal_weight(double c, double di) const {
        const double t = theta_;
        if (di > kClosedFormMax) return integral(c, di, 1.0 / (t * di), 1.0 / (t * (di - 1.0)));
        const double j = di - 1.0;
        return c * (2.0 * di - 1.0) / (2.0 * di * t * t * j * j) +
               (3.0 * di * di - 3.0 * di + 1.0) * c * (t * (1.0 - di) + 1.0 - c) / (3.0 * t * t * t * di * di * j * j * j) +
               (c - 1.0) * c * (2.0 * di - 1.0) * (2.0 * di * di - 2.0 * di + 1.0) / (4.0 * t * t * t * j * j * j * di * di * di);
    }

    // sum_{i=a}^{b} equal_weight(c, i) P(c, i) by Euler-Maclaurin on the smooth extension in i.
    // The summand varies on the scale of i itself, so a fixed Gauss rule is exact to rounding.
    double run_sum(double c, std::int64_t a, std::int64_t b) const {
        auto f = [&](double x) { return equal_weight(c, x) * p_.smooth(c, x); };
        auto df = [&](double x) { return (f(x + 1.0) - f(x - 1.0)) / 2.0; };
        const double da = static_cast<double>(a), db = static_cast<double>(b);
        double body = boost::math::quadrature::gauss<double, 10>::integrate(f, da, db);
        return body + 0.5 * (f(da) + f(db)) + (df(db) - df(da)) / 12.0;
    }

    // int_lo^hi Delta * c(1+Delta-c Delta) * i(1+theta Delta-i theta Delta) dDelta. The integrand is a
    // quartic, so three Gauss-Legendre nodes are exact; expanding the antiderivative loses about
    // log10(i) digits on the short intervals of large indices.
    double integral(double c, double i, double lo, double hi) const {
        if (!(hi > lo)) return 0.0;
        static constexpr double x[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
        static constexpr double w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
        const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        double s = 0.0;
        for (int k = 0; k < 3; ++k) {
            double d = mid + half * x[k];
            s += w[k] * d * c * (1.0 - (c - 1.0) * d) * i * (1.0 - (i - 1.0) * theta_ * d);
        }
        return s * half;
    }

    double theta_;
    MacZrEvaluator p_;
    std::int64_t i0_;
};

struct CThetaSeries {
    SeriesValue value;
    double tail = 0.0;
    std::int64_t cutoff = 0;
};

// Solves sum_k a[r][k] x[k] = b[r] by Cramer's rule; empty when singular.
std::optional<std::array<double, 3>> solve3(const std::array<std::array<double, 3>, 3>& a, const std::array<double, 3>& b) {
    auto det = [](const std::array<std::array<double, 3>, 3>& m) {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    double d = det(a);
    if (d == 0.0 || !std::isfinite(d)) return std::nullopt;
    std::array<double, 3> x{};
    for (int k = 0; k < 3; ++k) {
        auto m = a;
        for (int r = 0; r < 3; ++r) m[r][k] = b[r];
        x[k] = det(m) / d;
    }
    return x;
}

// Sums cells of pieces up to doubling checkpoints in the user-1 index. Below Delta_I the
// weight factors average to kappa(Delta) = k0 + k1 Delta + k2 Delta^2, fitted on the last three blocks of
// exact pieces against the smooth extension of P; the model tail is clamped to
// [0, P_inf Delta_I^2 / 2] (both weight factors are at most 1).
CThetaSeries run_series(const CThetaEngine& eng, const TruncationPolicy& trunc) {
    trunc.validate();
    CThetaSeries out;
    if (eng.limit() <= 0.0) {
        out.cutoff = eng.first_index();
        return out;
    }
    const std::int64_t i0 = eng.first_index();
    const std::int64_t c0 = eng.c_of(i0);
    std::vector<double> cum{eng.boundary()};  // cum[c - c0]: sum through cell c
    std::int64_t done = i0;
    std::int64_t next = c0;
    auto extend = [&](std::int64_t c_to) {
        for (std::int64_t c = next; c <= c_to; ++c, ++next) {
            double s = eng.cell_sum(c, done);
            done = std::max(done, eng.cut_of(c));
            if (c == c0)
                cum[0] += s;
            else
                cum.push_back(cum.back() + s);
        }
    };
    auto sum_to = [&](std::int64_t c) { return cum[static_cast<std::size_t>(c - c0)]; };

    std::int64_t cells = 64;
    double prev_total = std::numeric_limits<double>::quiet_NaN();
    for (;;) {
        const std::int64_t c_cut = std::max(cells, c0 + 8);
        extend(c_cut);
        const double body = sum_to(c_cut);
        const std::int64_t cut = eng.cut_of(c_cut);
        const double d_cut = eng.delta_at(cut);
        // Blocks of cells (c/8, c/4], (c/4, c/2], (c/2, c].
        std::array<double, 3> s_blk{};
        std::array<std::array<double, 3>, 3> j_blk{};
        for (int b = 0; b < 3; ++b) {
            std::int64_t c_hi = c_cut >> b, c_lo = c_cut >> (b + 1);
            s_blk[b] = sum_to(c_hi) - sum_to(c_lo);
            j_blk[b] = eng.smooth_mass(eng.delta_at(eng.cut_of(c_hi)), eng.delta_at(eng.cut_of(c_lo)));
        }
        auto j_tail = eng.smooth_mass(d_cut * 1e-17, d_cut);
        double model = 0.0;
        if (auto k = solve3(j_blk, s_blk))
            model = (*k)[0] * j_tail[0] + (*k)[1] * j_tail[1] + (*k)[2] * j_tail[2];
        else if (j_blk[0][0] > 0.0)
            model = s_blk[0] / j_blk[0][0] * j_tail[0];
        const double hi = eng.limit() * d_cut * d_cut / 2.0;
        const double tail = std::clamp(model, 0.0, hi);
        const double total = body + tail;
        const double unc = std::isnan(prev_total) ? hi / 2.0 : std::min(std::abs(total - prev_total), hi / 2.0);
        if (unc <= trunc.tail_tol * total) {
            out.value = {total, unc, cut};
            out.tail = tail;
            out.cutoff = cut;
            return out;
        }
        if (c_cut >= trunc.max_terms)
            throw NonConvergence("mac_region", "C_theta tail above tail_tol=" + format_g(trunc.tail_tol) + " after " + std::to_string(c_cut) + " cells",
                                 total, unc);
        prev_total = total;
        cells = std::min(2 * c_cut, trunc.max_terms);
    }
}

void check_theta(double theta) {
    if (!(theta > 0.0 && theta <= 1.0)) throw DomainError("c_theta: theta must lie in (0,1]");
    if (theta < kThetaMin) throw DomainError("c_theta: theta below 1e-3 is out of range");
}

// int_{Delta_I}^1 Delta * L(Delta) dDelta with knots at every jump of either ceiling.
double quadrature_body(double theta, std::int64_t cutoff, const std::function<double(double)>& lb) {
    double d_lo = 1.0 / (theta * static_cast<double>(cutoff));
    std::vector<double> knots;
    auto i0 = static_cast<std::int64_t>(std::ceil(1.0 / theta));
    for (std::int64_t i = i0; i < cutoff; ++i) knots.push_back(1.0 / (theta * static_cast<double>(i)));
    auto kmax = static_cast<std::int64_t>(std::ceil(1.0 / d_lo));
    for (std::int64_t k = 2; k <= kmax; ++k) knots.push_back(1.0 / static_cast<double>(k));
    auto f = [&](double d) { return d * lb(d); };
    return integrate(f, {d_lo, 1.0}, {1e-12, 0.0, 2000}, knots);
}

// Caches P for the last (m1, m2) pair: consecutive quadrature nodes share a piece.
class CachedLb {
public:
    CachedLb(const MacSpec& mac, const MacZrSelector& zr) : p_(mac, zr) {}

    double operator()(double d1, double d2) {
        std::int64_t m1 = ceil_inv(d1), m2 = ceil_inv(d2);
        if (m1 != m1_ || m2 != m2_) {
            m1_ = m1;
            m2_ = m2;
            val_ = p_(m1, m2);
        }
        return lb_weight(d1, m1) * lb_weight(d2, m2) * val_;
    }

private:
    MacZrEvaluator p_;
    std::int64_t m1_ = -1, m2_ = -1;
    double val_ = 0.0;
};

}  // namespace

double lb_two_user(double d1, double d2, const MacSpec& mac, const MacZrSelector& zr) {
    check_delta(d1, "d1");
    check_delta(d2, "d2");
    MacZrEvaluator p(mac, zr);
    std::int64_t m1 = ceil_inv(d1), m2 = ceil_inv(d2);
    return lb_weight(d1, m1) * lb_weight(d2, m2) * p(m1, m2);
}

SeriesValue c_theta(double theta, const MacSpec& mac, const MacZrSelector& zr, CThetaMethod method,
                    const TruncationPolicy& trunc) {
    check_theta(theta);
    CThetaEngine eng(theta, mac, zr);
    auto series = run_series(eng, trunc);
    if (method == CThetaMethod::SeriesClosedForm || eng.limit() <= 0.0) return series.value;
    CachedLb lb(mac, zr);
    double body = quadrature_body(theta, series.cutoff, [&](double d) { return lb(d, theta * d); });
    return {body + series.tail, series.value.uncertainty, series.cutoff};
}

SeriesValue c_theta_2(double theta, const MacSpec& mac, const MacZrSelector& zr, CThetaMethod method,
                      const TruncationPolicy& trunc) {
    return c_theta(theta, mac.swapped(), zr, method, trunc);
}

SeriesValue c_theta_2_direct(double theta, const MacSpec& mac, const MacZrSelector& zr, const TruncationPolicy& trunc) {
    check_theta(theta);
    CThetaEngine eng(theta, mac.swapped(), zr);
    auto series = run_series(eng, trunc);
    if (eng.limit() <= 0.0) return series.value;
    CachedLb lb(mac, zr);
    double body = quadrature_body(theta, series.cutoff, [&](double d) { return lb(theta * d, d); });
    return {body + series.tail, series.value.uncertainty, series.cutoff};
}

ZrSelector single_user_zr(const MacZrSelector& zr) {
    if (std::holds_alternative<zr::ShannonMac>(zr)) return zr::Shannon{};
    if (const auto* p = std::get_if<zr::PolyanskiyMac>(&zr)) return zr::Polyanskiy{p->mu};
    return std::get<zr::ConstantTest>(zr);
}

ThetaProfile::ThetaProfile(const MacSpec& mac, const MacZrSelector& zr, const ThetaGrid& grid,
                           const TruncationPolicy& trunc)
    : mac_(mac), zr_(zr), grid_(grid), trunc_(trunc) {
    grid.validate();
    if (grid.values.front() < kThetaMin) throw DomainError("ThetaProfile: theta below 1e-3 is out of range");
    const std::size_t n = grid.values.size();
    const bool symmetric = mac.e1_over_n == mac.e2_over_n;
    c1_.assign(n, 0.0);
    c2_.assign(n, 0.0);
    parallel_for(symmetric ? n : 2 * n, [&](std::size_t k) {
        if (k < n)
            c1_[k] = c1_at(grid_.values[k]);
        else
            c2_[k - n] = c2_at(grid_.values[k - n]);
    });
    if (symmetric) c2_ = c1_;
}

double ThetaProfile::c1_at(double theta) const {
    return c_theta(theta, mac_, zr_, CThetaMethod::SeriesClosedForm, trunc_).value;
}

double ThetaProfile::c2_at(double theta) const {
    return c_theta_2(theta, mac_, zr_, CThetaMethod::SeriesClosedForm, trunc_).value;
}

namespace {

constexpr int kRefineSteps = 8;

struct GridMax {
    std::size_t index = 0;
    double value = -std::numeric_limits<double>::infinity();
};

GridMax grid_max(const std::vector<double>& thetas, const std::vector<double>& values,
                 const std::function<double(double, double)>& family) {
    GridMax out;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        double v = family(thetas[k], values[k]);
        if (v > out.value) out = {k, v};
    }
    return out;
}

// Golden-section refinement of a family on the two grid cells around the incumbent.
double refine_max(const std::vector<double>& thetas, const GridMax& best,
                  const std::function<double(double, double)>& family, const std::function<double(double)>& c_at) {
    if (thetas.size() < 3) return best.value;
    double lo = thetas[best.index == 0 ? 0 : best.index - 1];
    double hi = thetas[std::min(best.index + 1, thetas.size() - 1)];
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = family(x1, c_at(x1)), f2 = family(x2, c_at(x2));
    for (int it = 0; it < kRefineSteps; ++it) {
        if (f1 > f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = family(x1, c_at(x1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = family(x2, c_at(x2));
        }
    }
    return std::max({best.value, f1, f2});
}

}  // namespace

double mse1_bound_given_mse2(double mse2, const ThetaProfile& profile, double single_user_bound, bool refine) {
    if (!(mse2 >= 0.0)) throw DomainError("mse1_bound_given_mse2: mse2 must be >= 0");
    const auto& th = profile.grid().values;
    auto fam1 = [mse2](double t, double c1) { return c1 / 2.0 - mse2 / (t * t); };
    auto fam2 = [mse2](double t, double c2) { return t * t * (c2 / 2.0 - mse2); };
    GridMax b1 = grid_max(th, profile.c1(), fam1);
    GridMax b2 = grid_max(th, profile.c2(), fam2);
    double best = std::max({single_user_bound, b1.value, b2.value});
    // Only the incumbent family is refined; refinement never lowers a bound.
    if (refine && best > single_user_bound) {
        if (b1.value >= b2.value)
            best = std::max(best, refine_max(th, b1, fam1, [&](double t) { return profile.c1_at(t); }));
        else
            best = std::max(best, refine_max(th, b2, fam2, [&](double t) { return profile.c2_at(t); }));
    }
    return std::clamp(best, 0.0, 1.0);
}

double mse1_bound_given_mse2(double mse2, const MacSpec& mac, const MacZrSelector& zr, const ThetaGrid& grid,
                             double single_user_bound) {
    ThetaProfile profile(mac, zr, grid);
    return mse1_bound_given_mse2(mse2, profile, single_user_bound);
}

BoundCurve trace_region(const MacSpec& mac, const MacZrSelector& zr, const std::vector<double>& mse2_grid,
                        const ThetaGrid& grid, bool hull, const TruncationPolicy& trunc) {
    if (mse2_grid.empty()) throw DomainError("trace_region: mse2 grid is empty");
    for (std::size_t k = 1; k < mse2_grid.size(); ++k)
        if (!(mse2_grid[k] > mse2_grid[k - 1])) throw DomainError("trace_region: mse2 grid must be strictly increasing");
    ThetaProfile profile(mac, zr, grid, trunc);
    double wall = mse_lower_bound({mac.e1_over_n, {}}, single_user_zr(zr), trunc).value;

    BoundCurve curve;
    curve.method = zr_name(zr);
    curve.points.resize(mse2_grid.size());
    parallel_for(mse2_grid.size(), [&](std::size_t k) {
        curve.points[k] = {mse2_grid[k], mse1_bound_given_mse2(mse2_grid[k], profile, wall), false};
    });
    if (hull) {
        auto h = lower_convex_hull(curve.points);
        for (auto idx : h) curve.points[idx].flag = true;
        curve.envelope = hull_envelope(curve.points, h);
    }
    curve.meta = {{"e1_over_n", mac.e1_over_n},
                  {"e2_over_n", mac.e2_over_n},
                  {"theta_points", static_cast<double>(grid.values.size())},
                  {"theta_min", grid.values.front()},
                  {"single_user_wall", wall}};
    return curve;
}

}  // namespace pme
