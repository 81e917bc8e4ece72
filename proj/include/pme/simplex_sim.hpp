#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "pme/single_user.hpp"
#include "pme/zero_rate.hpp"

namespace pme {

struct McConfig {
    std::uint64_t trials = 1'000'000;
    std::uint64_t seed = 1;
    unsigned streams = 16;

    void validate() const;
};

struct SchemeSpec {
    int m_levels = 256;
    double e_over_n = 0.0;

    void validate() const;
};

namespace sim {
struct Integral {};
struct MonteCarlo {
    McConfig mc;
};
}  // namespace sim

using SimplexMethod = std::variant<sim::Integral, sim::MonteCarlo>;

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// Error probability of M equal-energy orthogonal signals at energy e*M/(M-1);
// accepts real m >= 2 for use as a continuous extension.
double simplex_error_prob_integral(double e_over_n, double m);
McEstimate simplex_error_prob_mc(const ChannelSpec& ch, int m, const McConfig& mc);
double simplex_error_prob(const ChannelSpec& ch, int m, const SimplexMethod& method);

// Vertices of the regular simplex with per-signal energy `energy`, written in the
// M coordinates of the centered identity (they span an (M-1)-dimensional subspace).
std::vector<std::vector<double>> simplex_constellation(int m, double energy);

// ML decision for received vector y (same coordinates) by maximum inner product.
int simplex_detect(const std::vector<std::vector<double>>& constellation, const std::vector<double>& y);

struct ExceedanceCurve {
    std::vector<double> delta;
    std::vector<double> prob;

    // 2 * int_0^1 Delta * prob(Delta) dDelta by the trapezoidal rule on the grid.
    double second_moment() const;
    ExceedanceCurve resampled(int points) const;
};

struct SimulationResult {
    double mse = 0.0;
    double std_error = 0.0;
    std::uint64_t trials = 0;
    ExceedanceCurve exceedance;
};

SimulationResult simulate_quantize_simplex(const SchemeSpec& sch, const McConfig& mc);

SeriesValue conjectured_mse_bound(const ChannelSpec& ch, const TruncationPolicy& trunc = {});

}  // namespace pme
