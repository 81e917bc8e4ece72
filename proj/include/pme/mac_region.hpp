#pragma once

#include <cstdint>
#include <vector>

#include "pme/curve.hpp"
#include "pme/single_user.hpp"
#include "pme/zero_rate.hpp"

namespace pme {

struct ThetaGrid {
    std::vector<double> values;

    void validate() const;
    // Log-spaced points in [lo, 1].
    static ThetaGrid log_spaced(int points = 512, double lo = 1e-3);
    // Log-spaced points merged with the fractions p/q (q <= max_denominator) and 1/k
    // (k <= max_reciprocal) in [lo, 1]: C_1 and C_2 peak at rational theta.
    static ThetaGrid log_with_rationals(int points = 512, double lo = 1e-3, int max_denominator = 24,
                                        int max_reciprocal = 128);
};

struct MsePoint {
    double mse1 = 0.0;
    double mse2 = 0.0;

    void validate() const;
};

constexpr double kThetaMin = 1e-3;
// Truncation used for theta profiles: curve tracing needs far less than the series default.
inline constexpr TruncationPolicy kProfileTruncation{1e-5, 1 << 20};

double lb_two_user(double d1, double d2, const MacSpec& mac, const MacZrSelector& zr);

enum class CThetaMethod { SeriesClosedForm, Quadrature };

// C_1(theta) = int_0^1 Delta L_B(Delta, theta Delta) dDelta.
SeriesValue c_theta(double theta, const MacSpec& mac, const MacZrSelector& zr, CThetaMethod method,
                    const TruncationPolicy& trunc = {});
// C_2(theta) = int_0^1 Delta L_B(theta Delta, Delta) dDelta, i.e. c_theta with the users swapped.
SeriesValue c_theta_2(double theta, const MacSpec& mac, const MacZrSelector& zr, CThetaMethod method,
                      const TruncationPolicy& trunc = {});
// C_2 by direct quadrature of its own definition through lb_two_user, without swapping.
SeriesValue c_theta_2_direct(double theta, const MacSpec& mac, const MacZrSelector& zr, const TruncationPolicy& trunc = {});

// Single-user selector matching a MAC selector (Shannon for ShannonMac and so on).
ZrSelector single_user_zr(const MacZrSelector& zr);

// C_1 and C_2 tabulated on a theta grid, with on-demand evaluation for refinement.
class ThetaProfile {
public:
    ThetaProfile(const MacSpec& mac, const MacZrSelector& zr, const ThetaGrid& grid,
                 const TruncationPolicy& trunc = kProfileTruncation);

    const ThetaGrid& grid() const { return grid_; }
    const std::vector<double>& c1() const { return c1_; }
    const std::vector<double>& c2() const { return c2_; }
    double c1_at(double theta) const;
    double c2_at(double theta) const;

private:
    MacSpec mac_;
    MacZrSelector zr_;
    ThetaGrid grid_;
    TruncationPolicy trunc_;
    std::vector<double> c1_, c2_;
};

// Theorem-2 bound on MSE_1 given MSE_2: max of the single-user wall and the two theta families.
double mse1_bound_given_mse2(double mse2, const ThetaProfile& profile, double single_user_bound, bool refine = true);
double mse1_bound_given_mse2(double mse2, const MacSpec& mac, const MacZrSelector& zr, const ThetaGrid& grid,
                             double single_user_bound);

BoundCurve trace_region(const MacSpec& mac, const MacZrSelector& zr, const std::vector<double>& mse2_grid,
                        const ThetaGrid& grid, bool hull, const TruncationPolicy& trunc = kProfileTruncation);

}  // namespace pme
