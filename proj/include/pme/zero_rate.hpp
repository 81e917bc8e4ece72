#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pme {

struct ChannelSpec {
    double e_over_n = 0.0;
    std::optional<std::int64_t> n_dim;

    void validate() const;
};

struct MacSpec {
    double e1_over_n = 0.0;
    double e2_over_n = 0.0;

    void validate() const;
    MacSpec swapped() const { return {e2_over_n, e1_over_n}; }
};

namespace zr {
struct Shannon {};
struct Polyanskiy {
    double mu = 1e-3;
};
struct FiniteN {
    double mu_n = 0.1;
};
struct SimplexExact {};
struct ConstantTest {
    double p = 1.0;
};
struct ShannonMac {};
struct PolyanskiyMac {
    double mu = 1e-3;
};
}  // namespace zr

using ZrSelector = std::variant<zr::Shannon, zr::Polyanskiy, zr::FiniteN, zr::SimplexExact, zr::ConstantTest>;
using MacZrSelector = std::variant<zr::ShannonMac, zr::PolyanskiyMac, zr::ConstantTest>;

std::string zr_name(const ZrSelector& sel);
std::string zr_name(const MacZrSelector& sel);
void validate(const ZrSelector& sel);
void validate(const MacZrSelector& sel);

double shannon_zr(const ChannelSpec& ch, std::int64_t m);
double polyanskiy_zr(const ChannelSpec& ch, std::int64_t m, double mu);
double polyanskiy_zr_finite_n(const ChannelSpec& ch, std::int64_t m, double mu_n);
double mac_shannon_zr(const MacSpec& mac, std::int64_t m1, std::int64_t m2);
double mac_polyanskiy_zr(const MacSpec& mac, std::int64_t m1, std::int64_t m2, double mu);

// Sum_{j=lo}^{hi} j^{-n} for integer lo >= 1 and real hi (Hurwitz-zeta extension
// between integers). Returns 0 when hi < lo.
double power_sum(int n, std::int64_t lo, double hi);

// S(m) = sum_{k=2}^{m} Q(sqrt(k/(k-1) * y0)), evaluated exactly for small m
// and by a Taylor expansion in 1/(k-1) beyond a fixed cutoff. Real m is accepted
// above the cutoff.
class ShannonQSum {
public:
    static constexpr int kCut = 32;
    static constexpr int kOrder = 14;

    explicit ShannonQSum(double y0);
    double operator()(double m) const;

private:
    double y0_;
    std::array<double, kCut + 1> prefix_{};
    std::array<double, kOrder + 1> coef_{};
};

// T(m1, m2) = sum_{a=2}^{m1} sum_{b=2}^{m2} Q(sqrt(a/(a-1) u0 + b/(b-1) v0)).
class ShannonQDoubleSum {
public:
    static constexpr int kCut = 32;
    static constexpr int kOrder = 14;

    ShannonQDoubleSum(double u0, double v0);
    double operator()(double m1, double m2) const;

private:
    double u0_, v0_;
    std::vector<double> lolo_;   // (kCut+1)^2 cumulative table
    std::vector<double> lohi_;   // cumulative over a <= kCut, per order
    std::vector<double> hilo_;   // cumulative over b <= kCut, per order
    std::vector<double> hihi_;   // (kOrder+1)^2 coefficients
    double lolo(int a, int b) const { return lolo_[a * (kCut + 1) + b]; }
};

// Single-user P_ZR(E, m) for a fixed channel and selector, with a continuous
// extension in m used by tail estimates.
class ZrEvaluator {
public:
    ZrEvaluator(const ChannelSpec& ch, const ZrSelector& sel);

    double operator()(std::int64_t m) const;
    double smooth(double m) const;
    double limit() const;
    bool has_smooth_extension() const { return true; }

private:
    ChannelSpec ch_;
    ZrSelector sel_;
    std::optional<ShannonQSum> shannon_;
    double limit_ = 1.0;
};

class MacZrEvaluator {
public:
    MacZrEvaluator(const MacSpec& mac, const MacZrSelector& sel);

    double operator()(std::int64_t m1, std::int64_t m2) const;
    double smooth(double m1, double m2) const;
    double limit() const { return limit_; }

private:
    MacSpec mac_;
    MacZrSelector sel_;
    std::optional<ShannonQSum> s1_, s2_;
    std::optional<ShannonQDoubleSum> s12_;
    double limit_ = 1.0;
};

}  // namespace pme
