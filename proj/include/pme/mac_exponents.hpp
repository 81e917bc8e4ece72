#pragma once

#include <string>
#include <vector>

#include "pme/curve.hpp"
#include "pme/single_user.hpp"

namespace pme {

struct ExponentPoint {
    double eps1 = 0.0;
    double eps2 = 0.0;

    void validate() const;
};

struct AlphaPolicy {
    double alpha_max = 0.0;  // <= 0 selects F_1 of the back-end
    int grid_points = 1024;

    void validate() const;
};

enum class ExponentBackend { Divergence, SpherePacking, ABL };

std::string backend_name(ExponentBackend b);

// 1/2 [x - ln x - 1] with x = s / (e^{2r} - 1).
double divergence(double r, double s_over_n);

struct FComponents {
    double f1 = 0.0;
    double f2 = 0.0;
    double f12 = 0.0;
    double r1 = 0.0;   // argmin of F_1
    double r12 = 0.0;  // argmin R' of F_12 (R' = R + alpha/2)
    bool f12_feasible = true;
};

// Minimization of F_1, F_2(alpha), F_12(alpha) for equal powers on both users.
// F_12(alpha) = min_{r >= alpha} [r + E(r, 2a)] - alpha with r = 2R'; an empty range
// (alpha at or above C(2a)) gives +inf and clears f12_feasible.
class ExponentModel {
public:
    static constexpr int kAblTable = 1024;

    ExponentModel(double a, ExponentBackend backend, const ReliabilitySelector& abl = {ReliabilityKind::ABL});

    double snr() const { return a_; }
    ExponentBackend backend() const { return backend_; }
    double f1() const { return f1_; }
    double r1() const { return r1_; }
    // Unconstrained minimiser of r + E(r, 2a).
    double r12_free() const { return r12_; }

    FComponents components(double alpha) const;
    double f12(double alpha) const;
    // F(alpha) = min{F_1, F_2(alpha), F_12(alpha)}.
    double f(double alpha) const;

private:
    double g_sp(double r) const;
    double f12_sp(double alpha) const;
    double program_part(double alpha) const;

    double a_;
    ExponentBackend backend_;
    double c2_ = 0.0;  // C(2a)
    double f1_ = 0.0, r1_ = 0.0;
    double r12_ = 0.0, g12_ = 0.0;
    // ABL: nodes of r + program(r, 2a) and their suffix minima.
    std::vector<double> nodes_r_, nodes_g_, suffix_min_;
};

FComponents f_components_divergence(double s_over_n, double alpha);
FComponents f_components_sp(double a, double alpha);
FComponents f_components_abl(double a, double alpha);

struct Eps1Bound {
    double value = 0.0;
    double single_user = 0.0;  // F_1
    double joint = 0.0;        // inf over {F(alpha) + 2 alpha <= eps2} of F(alpha)
    double cross = 0.0;        // inf over {F(alpha) <= eps2} of F(alpha) + 2 alpha
    double alpha_joint = 0.0;
    double alpha_cross = 0.0;
    bool infeasible = false;  // the unfloored bound was negative
    bool at_alpha_max = false;
};

// Upper bound on eps1 given eps2 for equal powers, from the roots of the monotone
// constraint functions F(alpha) + 2 alpha and F(alpha). Both are tabulated once on the
// policy's alpha grid, which brackets the roots before refinement.
class Eps1Solver {
public:
    Eps1Solver(const ExponentModel& model, const AlphaPolicy& pol = {});

    Eps1Bound operator()(double eps2) const;
    double alpha_max() const { return alpha_.back(); }
    const ExponentModel& model() const { return model_; }

private:
    const ExponentModel& model_;
    std::vector<double> alpha_, f_, h_;
};

Eps1Bound eps1_bound(double eps2, const ExponentModel& model, const AlphaPolicy& pol = {});
Eps1Bound eps1_bound(double eps2, double a, ExponentBackend backend, const AlphaPolicy& pol = {});

// F(alpha) sampled on a uniform alpha grid, for direct evaluation of the infima.
struct DenseAlphaScan {
    double f1 = 0.0;
    std::vector<double> alpha;
    std::vector<double> f;

    double spacing() const;
};

DenseAlphaScan dense_alpha_scan(const ExponentModel& model, double alpha_max, int points = 10000);
// Divergence back-end with every component minimised numerically over R, clipping the
// divergence to zero at and above capacity.
DenseAlphaScan dense_alpha_scan_divergence(double s_over_n, double alpha_max, int points = 10000);
double eps1_bound_dense(double eps2, const DenseAlphaScan& scan);

// Curve (eps2, eps1 bound); the envelope holds the intersection with the mirrored curve.
// Flags mark infeasible points.
BoundCurve trace_exponent_region(double a, ExponentBackend backend, const std::vector<double>& eps_grid,
                                 const AlphaPolicy& pol = {});

}  // namespace pme
