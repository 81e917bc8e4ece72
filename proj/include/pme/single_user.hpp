#pragma once

#include <cstdint>
#include <functional>

#include "pme/math.hpp"
#include "pme/zero_rate.hpp"

namespace pme {

struct TruncationPolicy {
    double tail_tol = 1e-9;
    std::int64_t max_terms = 1'000'000;

    void validate() const;
};

// A series value together with the estimated error of its truncated tail.
struct SeriesValue {
    double value = 0.0;
    double uncertainty = 0.0;
    std::int64_t terms = 0;
};

struct Bracket {
    double lo = 0.0;
    double hi = 0.0;
    double mid() const { return 0.5 * (lo + hi); }
};

enum class WeightKind { Improved, Legacy };

// Per-index weight: integral over Delta in (1/i, 1/(i-1)] of the weighting polynomial.
double mse_weight(std::int64_t i, WeightKind kind);
// Sum of mse_weight over indices > n.
double mse_tail_weight(std::int64_t n, WeightKind kind);
// Integrand of the Delta-integral form at a point, for a given P_ZR value at ceil(1/Delta).
double mse_integrand(double delta, double p_zr, WeightKind kind);

SeriesValue mse_lower_bound(const ChannelSpec& ch, const ZrSelector& zr, const TruncationPolicy& trunc = {});
SeriesValue legacy_mse_lower_bound(const ChannelSpec& ch, const ZrSelector& zr, const TruncationPolicy& trunc = {});

// Direct piecewise quadrature of (1/2) int_0^1 Delta * L(Delta) dDelta over pieces i <= pieces,
// with the remainder bracketed through monotonicity of P_ZR.
Bracket mse_lower_bound_quadrature(const ChannelSpec& ch, const ZrSelector& zr, std::int64_t pieces,
                                   WeightKind kind = WeightKind::Improved);

double goblick_rd_bound(const ChannelSpec& ch);

double capacity(double a);
double sphere_packing_exponent(double r, double a);
double r_min_sphere_packing(double a);

enum class ReliabilityKind { SpherePacking, ABL };

struct ReliabilitySelector {
    ReliabilityKind kind = ReliabilityKind::SpherePacking;
    int rho_points = 256;
    int w_points = 256;
    int d_points = 256;

    void validate() const;
};

// Inner bound of the three-parameter (rho, w, d) program before taking the minimum with
// the sphere-packing exponent.
double abl_program(double r, double a, const ReliabilitySelector& sel);
double abl_rho_kl(double r);
double abl_exponent(double r, double a, const ReliabilitySelector& sel = {ReliabilityKind::ABL});

double reliability_bound(double r, double a, const ReliabilitySelector& sel);

struct ExponentMin {
    double value = 0.0;
    double argmin = 0.0;
    double numeric_argmin = 0.0;
};

ExponentMin mse_exponent_bound(double a, const ReliabilitySelector& sel);
ExponentMin mse_exponent_bound(double a, const RealFn& e_u);

}  // namespace pme
