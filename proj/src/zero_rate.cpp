#include "pme/zero_rate.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>

#include "pme/errors.hpp"
#include "pme/math.hpp"
#include "pme/simplex_sim.hpp"

namespace pme {

void ChannelSpec::validate() const {
    if (!(e_over_n >= 0.0) || !std::isfinite(e_over_n)) throw DomainError("ChannelSpec: e_over_n must be finite and >= 0");
    if (n_dim && *n_dim < 1) throw DomainError("ChannelSpec: n_dim must be >= 1");
}

void MacSpec::validate() const {
    if (!(e1_over_n >= 0.0) || !std::isfinite(e1_over_n) || !(e2_over_n >= 0.0) || !std::isfinite(e2_over_n))
        throw DomainError("MacSpec: energies must be finite and >= 0");
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double clamp01(double p) {
#ifndef NDEBUG
    if (p < 0.0 || p > 1.0) {
        static bool reported = false;
        if (!reported) {
            std::clog << "zero_rate: clamping probability " << p << " into [0,1]\n";
            reported = true;
        }
    }
#endif
    return std::clamp(p, 0.0, 1.0);
}

// g[s] = y^s h^(s)(y) / s! for h(y) = Q(sqrt(y)), s = 0..order.
std::vector<double> scaled_taylor(double y, int order) {
    std::vector<double> g(order + 1, 0.0);
    if (y <= 0.0) {
        g[0] = 0.5;
        return g;
    }
    g[0] = q_function(std::sqrt(y));
    // h^(s)(y)/s! = -(2 sqrt(2 pi))^{-1} e^{-y/2} sum_j d[s][j] y^{-1/2-j}
    const double pref = -std::exp(-0.5 * y) / (2.0 * std::sqrt(2.0 * std::numbers::pi * y));
    std::vector<double> d{1.0};
    for (int s = 1; s <= order; ++s) {
        double acc = 0.0;
        double ypow = std::pow(y, s);
        for (std::size_t j = 0; j < d.size(); ++j) {
            acc += d[j] * ypow;
            ypow /= y;
        }
        g[s] = pref * acc;
        std::vector<double> next(d.size() + 1, 0.0);
        for (std::size_t j = 0; j < d.size(); ++j) {
            next[j] += -0.5 * d[j];
            next[j + 1] += -(0.5 + static_cast<double>(j)) * d[j];
        }
        for (double& v : next) v /= static_cast<double>(s + 1);
        d = std::move(next);
    }
    return g;
}

double digamma_large(double x) {
    double shift = 0.0;
    while (x < 16.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    double r = 1.0 / (x * x);
    return shift + std::log(x) - 0.5 / x -
           r * (1.0 / 12 - r * (1.0 / 120 - r * (1.0 / 252 - r * (1.0 / 240 - r * (1.0 / 132)))));
}

// Hurwitz zeta(n, x) for integer n >= 2 and x >= 1.
double hurwitz(int n, double x) {
    double head = 0.0;
    while (x < 16.0) {
        head += std::pow(x, -n);
        x += 1.0;
    }
    static constexpr double b2k[] = {1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730, 7.0 / 6};
    double xs = std::pow(x, -n);
    double tail = x * xs / (n - 1) + 0.5 * xs;
    double rising = static_cast<double>(n);  // (n)_{2k-1}
    double fact = 2.0;                        // (2k)!
    double xp = xs / x;
    for (int k = 1; k <= 7; ++k) {
        tail += b2k[k - 1] / fact * rising * xp;
        rising *= static_cast<double>(n + 2 * k - 1) * (n + 2 * k);
        fact *= static_cast<double>(2 * k + 1) * (2 * k + 2);
        xp /= x * x;
    }
    return head + tail;
}

bool is_integer(double v) { return v == std::floor(v); }

// Hurwitz zeta(n, x) for n = 2..order at once, x >= 1.
void hurwitz_all(int order, double x, double* out) {
    for (int n = 2; n <= order; ++n) out[n] = 0.0;
    while (x < 16.0) {
        double r = 1.0 / x, p = r;
        for (int n = 2; n <= order; ++n) out[n] += (p *= r);
        x += 1.0;
    }
    static constexpr double b2k[] = {1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730, 7.0 / 6};
    const double r = 1.0 / x;
    double xs = r;
    for (int n = 2; n <= order; ++n) {
        xs *= r;
        double tail = x * xs / (n - 1) + 0.5 * xs;
        double rising = static_cast<double>(n);
        double fact = 2.0;
        double xp = xs * r;
        for (int k = 1; k <= 7; ++k) {
            tail += b2k[k - 1] / fact * rising * xp;
            rising *= static_cast<double>(n + 2 * k - 1) * (n + 2 * k);
            fact *= static_cast<double>(2 * k + 1) * (2 * k + 2);
            xp *= r * r;
        }
        out[n] += tail;
    }
}

// out[n] = power_sum(n, lo, hi) for n = 0..order.
void power_sum_all(int order, std::int64_t lo, double hi, double* out) {
    if (hi < static_cast<double>(lo)) {
        for (int n = 0; n <= order; ++n) out[n] = 0.0;
        return;
    }
    if (is_integer(hi) && hi - static_cast<double>(lo) <= 64.0) {
        for (int n = 0; n <= order; ++n) out[n] = 0.0;
        for (auto j = static_cast<std::int64_t>(hi); j >= lo; --j) {
            double r = 1.0 / static_cast<double>(j), p = 1.0;
            for (int n = 0; n <= order; ++n, p *= r) out[n] += p;
        }
        return;
    }
    out[0] = hi - static_cast<double>(lo) + 1.0;
    if (order >= 1) out[1] = digamma_large(hi + 1.0) - digamma_large(static_cast<double>(lo));
    std::array<double, 64> a{}, b{};
    hurwitz_all(order, static_cast<double>(lo), a.data());
    hurwitz_all(order, hi + 1.0, b.data());
    for (int n = 2; n <= order; ++n) out[n] = a[n] - b[n];
}

}  // namespace

double power_sum(int n, std::int64_t lo, double hi) {
    if (hi < static_cast<double>(lo)) return 0.0;
    if (n == 0) return hi - static_cast<double>(lo) + 1.0;
    if (is_integer(hi) && hi - static_cast<double>(lo) <= 64.0) {
        double s = 0.0;
        for (auto j = static_cast<std::int64_t>(hi); j >= lo; --j) s += std::pow(static_cast<double>(j), -n);
        return s;
    }
    if (n == 1) return digamma_large(hi + 1.0) - digamma_large(static_cast<double>(lo));
    return hurwitz(n, static_cast<double>(lo)) - hurwitz(n, hi + 1.0);
}

ShannonQSum::ShannonQSum(double y0) : y0_(y0) {
    prefix_[0] = prefix_[1] = 0.0;
    for (int k = 2; k <= kCut; ++k)
        prefix_[k] = prefix_[k - 1] + q_function(std::sqrt(static_cast<double>(k) / (k - 1) * y0));
    auto g = scaled_taylor(y0, kOrder);
    for (int n = 0; n <= kOrder; ++n) coef_[n] = (y0 > 0.0 || n == 0) ? g[n] : 0.0;
}

double ShannonQSum::operator()(double m) const {
    if (m < 2.0) return 0.0;
    if (m <= kCut) {
        double f = std::floor(m);
        auto k = static_cast<int>(f);
        if (f == m || k == kCut) return prefix_[k];
        return prefix_[k] + (m - f) * (prefix_[k + 1] - prefix_[k]);
    }
    double s = prefix_[kCut];
    std::array<double, kOrder + 1> ps{};
    power_sum_all(kOrder, kCut, m - 1.0, ps.data());
    for (int n = 0; n <= kOrder; ++n) s += coef_[n] * ps[n];
    return s;
}

ShannonQDoubleSum::ShannonQDoubleSum(double u0, double v0) : u0_(u0), v0_(v0) {
    const int K = kCut;
    const int N = kOrder;
    auto u = [&](int a) { return static_cast<double>(a) / (a - 1) * u0; };
    auto v = [&](int b) { return static_cast<double>(b) / (b - 1) * v0; };

    lolo_.assign((K + 1) * (K + 1), 0.0);
    for (int a = 2; a <= K; ++a)
        for (int b = 2; b <= K; ++b)
            lolo_[a * (K + 1) + b] = q_function(std::sqrt(u(a) + v(b))) + lolo_[(a - 1) * (K + 1) + b] +
                                     lolo_[a * (K + 1) + b - 1] - lolo_[(a - 1) * (K + 1) + b - 1];

    auto ratio_pow = [](double num, double den, int n) {
        if (n == 0) return 1.0;
        if (num == 0.0 || den <= 0.0) return 0.0;
        return std::pow(num / den, n);
    };

    lohi_.assign((K + 1) * (N + 1), 0.0);
    for (int a = 2; a <= K; ++a) {
        double y = u(a) + v0;
        auto g = scaled_taylor(y, N);
        for (int n = 0; n <= N; ++n)
            lohi_[a * (N + 1) + n] = lohi_[(a - 1) * (N + 1) + n] + g[n] * ratio_pow(v0, y, n);
    }
    hilo_.assign((K + 1) * (N + 1), 0.0);
    for (int b = 2; b <= K; ++b) {
        double y = u0 + v(b);
        auto g = scaled_taylor(y, N);
        for (int n = 0; n <= N; ++n)
            hilo_[b * (N + 1) + n] = hilo_[(b - 1) * (N + 1) + n] + g[n] * ratio_pow(u0, y, n);
    }
    hihi_.assign((N + 1) * (N + 1), 0.0);
    double y = u0 + v0;
    auto g = scaled_taylor(y, 2 * N);
    for (int n = 0; n <= N; ++n)
        for (int k = 0; k <= N; ++k) {
            double binom = std::tgamma(n + k + 1.0) / (std::tgamma(n + 1.0) * std::tgamma(k + 1.0));
            hihi_[n * (N + 1) + k] = g[n + k] * binom * ratio_pow(u0, y, n) * ratio_pow(v0, y, k);
        }
}

double ShannonQDoubleSum::operator()(double m1, double m2) const {
    if (m1 < 2.0 || m2 < 2.0) return 0.0;
    const int K = kCut;
    const int N = kOrder;
    int a = static_cast<int>(std::min<double>(std::floor(m1), K));
    int b = static_cast<int>(std::min<double>(std::floor(m2), K));
    double s = lolo(a, b);
    std::array<double, kOrder + 1> ps1{}, ps2{};
    bool hi1 = m1 > K, hi2 = m2 > K;
    if (hi1) power_sum_all(N, K, m1 - 1.0, ps1.data());
    if (hi2) power_sum_all(N, K, m2 - 1.0, ps2.data());
    if (hi2)
        for (int n = 0; n <= N; ++n) s += lohi_[a * (N + 1) + n] * ps2[n];
    if (hi1)
        for (int n = 0; n <= N; ++n) s += hilo_[b * (N + 1) + n] * ps1[n];
    if (hi1 && hi2)
        for (int n = 0; n <= N; ++n)
            for (int k = 0; k <= N; ++k) s += hihi_[n * (N + 1) + k] * ps1[n] * ps2[k];
    return s;
}

double shannon_zr(const ChannelSpec& ch, std::int64_t m) {
    ch.validate();
    if (m < 1) throw DomainError("shannon_zr: m must be >= 1");
    double s = 0.0;
    for (std::int64_t k = 2; k <= m; ++k)
        s += q_function(std::sqrt(static_cast<double>(k) / static_cast<double>(k - 1) * ch.e_over_n / 2.0));
    return clamp01(s / static_cast<double>(m));
}

double polyanskiy_zr(const ChannelSpec& ch, std::int64_t m, double mu) {
    ch.validate();
    if (m < 1) throw DomainError("polyanskiy_zr: m must be >= 1");
    if (!(mu > 0.0)) throw DomainError("polyanskiy_zr: mu must be positive");
    if (m == 1) return 0.0;
    return clamp01(q_function(std::sqrt(ch.e_over_n) * (1.0 + mu) - q_inverse(1.0 / static_cast<double>(m))));
}

namespace {

double polyanskiy_real(double e, double m, double mu) {
    if (m <= 1.0) return 0.0;
    return q_function(std::sqrt(e) * (1.0 + mu) - q_inverse(1.0 / m));
}

double finite_n_real(double e, std::int64_t n, double m, double mu_n) {
    double delta = (1.0 + mu_n) * std::exp(-static_cast<double>(n) * mu_n / 2.0);
    double p = 1.0 / (m * (1.0 - delta));
    if (!(delta < 1.0) || !(p < 1.0))
        throw InfeasibleError("polyanskiy_zr_finite_n: requires 1/(m(1-delta_N)) < 1 with delta_N = (1+mu_n)exp(-N mu_n/2) = " +
                              std::to_string(delta));
    double g = 1.0 + e / static_cast<double>(n);
    double arg = std::sqrt(e) * (g * (1.0 + mu_n / 2.0) + mu_n / 2.0) - std::pow(g, 1.5) * q_inverse(p);
    return std::max(0.0, q_function(arg) - delta);
}

}  // namespace

double polyanskiy_zr_finite_n(const ChannelSpec& ch, std::int64_t m, double mu_n) {
    ch.validate();
    if (!ch.n_dim) throw DomainError("polyanskiy_zr_finite_n: n_dim is required");
    if (m < 2) throw DomainError("polyanskiy_zr_finite_n: m must be >= 2");
    if (!(mu_n > 0.0)) throw DomainError("polyanskiy_zr_finite_n: mu_n must be positive");
    return clamp01(finite_n_real(ch.e_over_n, *ch.n_dim, static_cast<double>(m), mu_n));
}

double mac_shannon_zr(const MacSpec& mac, std::int64_t m1, std::int64_t m2) {
    mac.validate();
    if (m1 < 1 || m2 < 1) throw DomainError("mac_shannon_zr: m1, m2 must be >= 1");
    double y1 = mac.e1_over_n / 2.0, y2 = mac.e2_over_n / 2.0;
    auto w = [](std::int64_t k) { return static_cast<double>(k) / static_cast<double>(k - 1); };
    double s1 = 0.0, s2 = 0.0, s12 = 0.0;
    for (std::int64_t a = 2; a <= m1; ++a) s1 += q_function(std::sqrt(w(a) * y1));
    for (std::int64_t b = 2; b <= m2; ++b) s2 += q_function(std::sqrt(w(b) * y2));
    for (std::int64_t a = 2; a <= m1; ++a)
        for (std::int64_t b = 2; b <= m2; ++b) s12 += q_function(std::sqrt(w(a) * y1 + w(b) * y2));
    double dm1 = static_cast<double>(m1), dm2 = static_cast<double>(m2);
    return clamp01(s1 / dm1 + s2 / dm2 + s12 / (dm1 * dm2));
}

double mac_polyanskiy_zr(const MacSpec& mac, std::int64_t m1, std::int64_t m2, double mu) {
    mac.validate();
    if (m1 < 1 || m2 < 1) throw DomainError("mac_polyanskiy_zr: m1, m2 must be >= 1");
    double p1 = polyanskiy_zr({mac.e1_over_n, {}}, m1, mu);
    double p2 = polyanskiy_zr({mac.e2_over_n, {}}, m2, mu);
    double p12 = polyanskiy_zr({mac.e1_over_n + mac.e2_over_n, {}}, m1 * m2, mu);
    return std::max({p1, p2, p12});
}

std::string zr_name(const ZrSelector& sel) {
    return std::visit(overloaded{[](const zr::Shannon&) { return std::string("shannon"); },
                                 [](const zr::Polyanskiy&) { return std::string("polyanskiy"); },
                                 [](const zr::FiniteN&) { return std::string("polyanskiy_finite_n"); },
                                 [](const zr::SimplexExact&) { return std::string("simplex_exact"); },
                                 [](const zr::ConstantTest&) { return std::string("constant_test"); }},
                      sel);
}

std::string zr_name(const MacZrSelector& sel) {
    return std::visit(overloaded{[](const zr::ShannonMac&) { return std::string("shannon_mac"); },
                                 [](const zr::PolyanskiyMac&) { return std::string("polyanskiy_mac"); },
                                 [](const zr::ConstantTest&) { return std::string("constant_test"); }},
                      sel);
}

void validate(const ZrSelector& sel) {
    std::visit(overloaded{[](const zr::Polyanskiy& s) {
                              if (!(s.mu > 0.0)) throw DomainError("Polyanskiy selector: mu must be positive");
                          },
                          [](const zr::FiniteN& s) {
                              if (!(s.mu_n > 0.0)) throw DomainError("FiniteN selector: mu_n must be positive");
                          },
                          [](const zr::ConstantTest& s) {
                              if (!(s.p >= 0.0 && s.p <= 1.0)) throw DomainError("ConstantTest selector: p must lie in [0,1]");
                          },
                          [](const auto&) {}},
               sel);
}

void validate(const MacZrSelector& sel) {
    std::visit(overloaded{[](const zr::PolyanskiyMac& s) {
                              if (!(s.mu > 0.0)) throw DomainError("PolyanskiyMac selector: mu must be positive");
                          },
                          [](const zr::ConstantTest& s) {
                              if (!(s.p >= 0.0 && s.p <= 1.0)) throw DomainError("ConstantTest selector: p must lie in [0,1]");
                          },
                          [](const auto&) {}},
               sel);
}

ZrEvaluator::ZrEvaluator(const ChannelSpec& ch, const ZrSelector& sel) : ch_(ch), sel_(sel) {
    ch.validate();
    pme::validate(sel);
    std::visit(overloaded{[&](const zr::Shannon&) {
                              shannon_.emplace(ch.e_over_n / 2.0);
                              limit_ = q_function(std::sqrt(ch.e_over_n / 2.0));
                          },
                          [&](const zr::FiniteN& s) {
                              if (!ch.n_dim) throw DomainError("FiniteN selector requires n_dim");
                              limit_ = 1.0 - (1.0 + s.mu_n) * std::exp(-static_cast<double>(*ch.n_dim) * s.mu_n / 2.0);
                              finite_n_real(ch.e_over_n, *ch.n_dim, 2.0, s.mu_n);
                          },
                          [&](const zr::ConstantTest& s) { limit_ = s.p; }, [&](const auto&) { limit_ = 1.0; }},
               sel);
}

double ZrEvaluator::smooth(double m) const {
    double e = ch_.e_over_n;
    return std::visit(overloaded{[&](const zr::Shannon&) { return m < 2.0 ? 0.0 : clamp01((*shannon_)(m) / m); },
                                 [&](const zr::Polyanskiy& s) { return clamp01(polyanskiy_real(e, m, s.mu)); },
                                 [&](const zr::FiniteN& s) {
                                     return m < 2.0 ? 0.0 : clamp01(finite_n_real(e, *ch_.n_dim, m, s.mu_n));
                                 },
                                 [&](const zr::SimplexExact&) { return m < 2.0 ? 0.0 : simplex_error_prob_integral(e, m); },
                                 [&](const zr::ConstantTest& s) { return s.p; }},
                      sel_);
}

double ZrEvaluator::operator()(std::int64_t m) const { return smooth(static_cast<double>(m)); }

double ZrEvaluator::limit() const { return limit_; }

MacZrEvaluator::MacZrEvaluator(const MacSpec& mac, const MacZrSelector& sel) : mac_(mac), sel_(sel) {
    mac.validate();
    pme::validate(sel);
    std::visit(overloaded{[&](const zr::ShannonMac&) {
                              double y1 = mac.e1_over_n / 2.0, y2 = mac.e2_over_n / 2.0;
                              s1_.emplace(y1);
                              s2_.emplace(y2);
                              s12_.emplace(y1, y2);
                              limit_ = std::min(1.0, q_function(std::sqrt(y1)) + q_function(std::sqrt(y2)) +
                                                         q_function(std::sqrt(y1 + y2)));
                          },
                          [&](const zr::PolyanskiyMac&) { limit_ = 1.0; },
                          [&](const zr::ConstantTest& s) { limit_ = s.p; }},
               sel);
}

double MacZrEvaluator::smooth(double m1, double m2) const {
    return std::visit(
        overloaded{[&](const zr::ShannonMac&) {
                       double p = 0.0;
                       if (m1 >= 2.0) p += (*s1_)(m1) / m1;
                       if (m2 >= 2.0) p += (*s2_)(m2) / m2;
                       if (m1 >= 2.0 && m2 >= 2.0) p += (*s12_)(m1, m2) / (m1 * m2);
                       return clamp01(p);
                   },
                   [&](const zr::PolyanskiyMac& s) {
                       return std::max({polyanskiy_real(mac_.e1_over_n, m1, s.mu), polyanskiy_real(mac_.e2_over_n, m2, s.mu),
                                        polyanskiy_real(mac_.e1_over_n + mac_.e2_over_n, m1 * m2, s.mu)});
                   },
                   [&](const zr::ConstantTest& s) { return s.p; }},
        sel_);
}

double MacZrEvaluator::operator()(std::int64_t m1, std::int64_t m2) const {
    return smooth(static_cast<double>(m1), static_cast<double>(m2));
}

}  // namespace pme
