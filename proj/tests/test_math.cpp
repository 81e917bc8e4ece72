#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "pme/math.hpp"
#include "pme/parallel.hpp"

using namespace pme;

TEST_CASE("q_function matches erfc and its inverse round-trips") {
    for (double x : {-3.0, -0.5, 0.0, 0.7, 2.0, 5.0, 10.0, 20.0})
        CHECK(q_function(x) == doctest::Approx(oracle::q(x)).epsilon(1e-14));
    for (double p : {1e-300, 1e-100, 1e-12, 1e-3, 0.2, 0.5, 0.9, 1.0 - 1e-9}) {
        double x = q_inverse(p);
        CHECK(q_function(x) == doctest::Approx(p).epsilon(1e-12));
    }
    CHECK(q_inverse(0.5) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK_THROWS_AS(q_inverse(0.0), DomainError);
    CHECK_THROWS_AS(q_inverse(1.0), DomainError);
    CHECK_THROWS_AS(q_function(NAN), DomainError);
}

TEST_CASE("log_q_function is continuous across the asymptotic switch") {
    for (double x : {1.0, 10.0, 24.0, 30.0, 37.0})
        CHECK(log_q_function(x) == doctest::Approx(std::log(oracle::q(x))).epsilon(1e-12));
    // Beyond the double range of Q itself.
    const double x = 60.0;
    double ref = -0.5 * x * x - std::log(x * std::sqrt(2.0 * std::numbers::pi)) + std::log1p(-1.0 / (x * x) + 3.0 / std::pow(x, 4));
    CHECK(log_q_function(x) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(log_q_function(24.999) == doctest::Approx(log_q_function(25.0) + 25.0 * 0.001).epsilon(1e-4));
}

TEST_CASE("binary_entropy") {
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);
    CHECK(binary_entropy(0.5) == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
    CHECK_THROWS_AS(binary_entropy(1.5), DomainError);
}

TEST_CASE("integrate honours knots of piecewise integrands") {
    CHECK(integrate([](double x) { return std::sin(x); }, {0.0, std::numbers::pi}, {1e-12}) ==
          doctest::Approx(2.0).epsilon(1e-12));
    std::vector<double> knots{1.0, 2.0};
    CHECK(integrate([](double x) { return std::floor(x); }, {0.0, 3.0}, {1e-12}, knots) ==
          doctest::Approx(3.0).epsilon(1e-13));
    std::vector<double> inv{1.0 / 2, 1.0 / 3, 1.0 / 4};
    auto ceil_inv = [](double d) { return std::ceil(1.0 / d); };
    // ceil(1/x) on [1/4, 1] = 2*(1/2) + 3*(1/6) + 4*(1/12)
    CHECK(integrate(ceil_inv, {0.25, 1.0}, {1e-12}, inv) == doctest::Approx(1.0 + 0.5 + 1.0 / 3.0).epsilon(1e-13));
    CHECK_THROWS_AS(integrate(ceil_inv, {1.0, 0.5}, {1e-12}), DomainError);
}

TEST_CASE("minimize_scalar and find_root") {
    auto m = minimize_scalar([](double x) { return (x - 0.3) * (x - 0.3) + 1.0; }, {0.0, 2.0}, {1e-12, 1e-14});
    CHECK(m.argmin == doctest::Approx(0.3).epsilon(1e-7));
    CHECK(m.min == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_FALSE(m.at_endpoint);
    auto e = minimize_scalar([](double x) { return x; }, {1.0, 2.0}, {1e-12, 1e-14});
    CHECK(e.at_endpoint);
    CHECK(e.argmin == doctest::Approx(1.0));
    double r = find_root([](double x) { return std::cos(x) - x; }, {0.0, 1.0}, {1e-15});
    CHECK(r == doctest::Approx(0.739085133215160641).epsilon(1e-14));
    CHECK_THROWS_AS(find_root([](double x) { return x * x + 1.0; }, {-1.0, 1.0}, {1e-12}), BracketError);
    CHECK_THROWS_AS(minimize_scalar([](double x) { return x; }, {0.0, 1.0}, {-1.0}), DomainError);
}

TEST_CASE("parallel_for visits every index once and propagates exceptions") {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                        if (i == 7) throw DomainError("boom");
                    }),
                    DomainError);
    CHECK(thread_count() >= 1);
}
