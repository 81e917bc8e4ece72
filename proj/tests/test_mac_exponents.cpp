#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "pme/mac_exponents.hpp"

using namespace pme;

TEST_CASE("divergence vanishes at capacity and is positive below it") {
    for (double s : {0.5, 1.0, 10.0}) {
        CHECK(divergence(capacity(s), s) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(divergence(0.5 * capacity(s), s) > 0.0);
    }
}

TEST_CASE("closed-form divergence roots match direct minimisation") {
    for (double s : {0.5, 1.0, 3.0, 10.0}) {
        ExponentModel m(s, ExponentBackend::Divergence);
        double r1 = oracle::golden_argmin([s](double r) { return 2.0 * r + divergence(r, s); }, 1e-12, capacity(s));
        double r12 = oracle::golden_argmin([s](double r) { return r + divergence(r, 2.0 * s); }, 1e-12, capacity(2.0 * s));
        CHECK(std::abs(m.r1() - r1) < 1e-4);
        CHECK(std::abs(m.r12_free() - r12) < 1e-4);
        CHECK(m.r1() == doctest::Approx(0.5 * std::log((s + 5.0 + std::sqrt(s * s + 10.0 * s + 1.0)) / 6.0)).epsilon(1e-12));
        CHECK(m.f1() == doctest::Approx(2.0 * r1 + divergence(r1, s)).epsilon(1e-9));
    }
}

TEST_CASE("sphere-packing F_1 argmin matches direct minimisation") {
    for (double s : {0.5, 1.0, 3.0, 10.0}) {
        ExponentModel m(s, ExponentBackend::SpherePacking);
        double r1 = oracle::golden_argmin([s](double r) { return 2.0 * r + sphere_packing_exponent(r, s); }, 0.0,
                                          capacity(s) * (1.0 - 1e-12));
        CHECK(std::abs(m.r1() - r1) < 1e-4);
        double r12 = oracle::golden_argmin([s](double r) { return r + sphere_packing_exponent(r, 2.0 * s); }, 0.0,
                                           capacity(2.0 * s) * (1.0 - 1e-12));
        CHECK(std::abs(m.r12_free() - r12) < 1e-4);
    }
}

TEST_CASE("F components: F_2 + 2 alpha = F_1, F is monotone, F_12 empty above C(2a)") {
    for (auto backend : {ExponentBackend::Divergence, ExponentBackend::SpherePacking}) {
        ExponentModel m(1.0, backend);
        double prev_f = std::numeric_limits<double>::infinity(), prev_h = -1.0;
        for (int k = 0; k <= 200; ++k) {
            double alpha = m.f1() * k / 200.0;
            auto c = m.components(alpha);
            CHECK(c.f2 + 2.0 * alpha == doctest::Approx(c.f1).epsilon(1e-14));
            double f = m.f(alpha);
            CHECK(f <= prev_f + 1e-13);
            CHECK(f + 2.0 * alpha >= prev_h - 1e-13);
            prev_f = f;
            prev_h = f + 2.0 * alpha;
        }
        auto beyond = m.components(capacity(2.0) * 1.01);
        CHECK_FALSE(beyond.f12_feasible);
        CHECK(std::isinf(beyond.f12));
    }
}

TEST_CASE("back-ends are ordered divergence >= sphere packing >= ABL") {
    std::vector<double> eps;
    for (int k = 0; k <= 40; ++k) eps.push_back(0.6 * k / 40.0);
    auto div = trace_exponent_region(1.0, ExponentBackend::Divergence, eps);
    auto sp = trace_exponent_region(1.0, ExponentBackend::SpherePacking, eps);
    auto abl = trace_exponent_region(1.0, ExponentBackend::ABL, eps);
    for (std::size_t k = 0; k < eps.size(); ++k) {
        CHECK(div.points[k].y >= sp.points[k].y - 1e-6);
        CHECK(sp.points[k].y >= abl.points[k].y - 1e-6);
        CHECK(div.envelope[k] >= sp.envelope[k] - 1e-6);
        CHECK(sp.envelope[k] >= abl.envelope[k] - 1e-6);
    }
    CHECK(div.points.front().y == doctest::Approx(div.meta.at("f1")));
}

TEST_CASE("root-bracketing pipeline agrees with a dense alpha evaluation") {
    for (double a : {1.0, 10.0}) {
        ExponentModel m(a, ExponentBackend::Divergence);
        Eps1Solver solver(m);
        auto scan = dense_alpha_scan(m, solver.alpha_max());
        auto generic = dense_alpha_scan_divergence(a, solver.alpha_max());
        const double tol = 4.0 * scan.spacing();
        for (int k = 0; k < 50; ++k) {
            double eps2 = m.f1() * k / 50.0;
            double v = solver(eps2).value;
            CHECK(std::abs(v - eps1_bound_dense(eps2, scan)) <= tol);
            CHECK(std::abs(v - eps1_bound_dense(eps2, generic)) <= 4.0 * generic.spacing());
        }
    }
}

TEST_CASE("region envelope is symmetric under exchanging the users") {
    std::vector<double> eps;
    ExponentModel m(1.0, ExponentBackend::Divergence);
    for (int k = 0; k <= 400; ++k) eps.push_back(m.f1() * k / 400.0);
    auto curve = trace_exponent_region(1.0, ExponentBackend::Divergence, eps);
    auto env_at = [&](double x) {
        std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(x / eps[1]), eps.size() - 2);
        double t = (x - eps[k]) / (eps[k + 1] - eps[k]);
        return (1.0 - t) * curve.envelope[k] + t * curve.envelope[k + 1];
    };
    for (std::size_t k = 0; k < eps.size(); ++k) {
        CHECK(curve.envelope[k] <= curve.points[k].y + 1e-12);
        double y = curve.envelope[k];
        // The flat top mirrors onto the vertical edge at eps2 = F_1, which the grid cannot resolve.
        if (y <= 0.0 || y >= m.f1() - 2.0 * eps[1]) continue;
        CHECK(std::abs(env_at(y) - eps[k]) <= 1e-8);
    }
}

TEST_CASE("points beyond F_1 are infeasible and floored at zero") {
    ExponentModel m(1.0, ExponentBackend::SpherePacking);
    auto b = eps1_bound(m.f1() * 1.05, m);
    CHECK(b.infeasible);
    CHECK(b.value == 0.0);
    auto ok = eps1_bound(0.0, m);
    CHECK_FALSE(ok.infeasible);
    CHECK(ok.value == doctest::Approx(m.f1()));
}

TEST_CASE("exponents degenerate to zero as the SNR vanishes") {
    for (auto backend : {ExponentBackend::Divergence, ExponentBackend::SpherePacking}) {
        ExponentModel m(1e-7, backend);
        CHECK(m.f1() < 1e-6);
        CHECK(eps1_bound(0.0, m).value < 1e-6);
    }
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS((AlphaPolicy{0.0, 16}.validate()), DomainError);
    CHECK_THROWS_AS((ExponentPoint{-1.0, 0.0}.validate()), DomainError);
    CHECK_THROWS_AS(ExponentModel(-1.0, ExponentBackend::Divergence), DomainError);
    CHECK(backend_name(ExponentBackend::ABL) == "abl");
}
