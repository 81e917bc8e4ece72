#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pme/mac_region.hpp"

using namespace pme;

namespace {

double lb_oracle(double d1, double d2, double p) {
    const double c1 = std::ceil(1.0 / d1), c2 = std::ceil(1.0 / d2);
    return c1 * c2 * (1.0 + d1 - c1 * d1) * (1.0 + d2 - c2 * d2) * p;
}

}  // namespace

TEST_CASE("two-user kernel matches its definition") {
    const MacSpec mac{1.0, 2.0};
    for (auto [d1, d2] : {std::pair{0.3, 0.2}, {0.9, 0.05}, {0.5, 0.5}, {0.11, 0.7}}) {
        const int c1 = static_cast<int>(std::ceil(1.0 / d1)), c2 = static_cast<int>(std::ceil(1.0 / d2));
        CHECK(lb_two_user(d1, d2, mac, zr::ShannonMac{}) ==
              doctest::Approx(lb_oracle(d1, d2, oracle::mac_shannon_zr(1.0, 2.0, c1, c2))).epsilon(1e-11));
        double pp = std::max({oracle::polyanskiy_zr(1.0, c1, 1e-3), oracle::polyanskiy_zr(2.0, c2, 1e-3),
                              oracle::polyanskiy_zr(3.0, static_cast<double>(c1) * c2, 1e-3)});
        CHECK(lb_two_user(d1, d2, mac, zr::PolyanskiyMac{1e-3}) == doctest::Approx(lb_oracle(d1, d2, pp)).epsilon(1e-10));
    }
}

TEST_CASE("C_1 for a constant P_ZR matches piecewise quadrature") {
    for (auto [theta, p] : {std::pair{1.0, 1.0}, {0.5, 0.7}, {0.37, 1.0}}) {
        auto b = oracle::c1_constant(theta, p, 2e-4);
        for (auto method : {CThetaMethod::SeriesClosedForm, CThetaMethod::Quadrature}) {
            double v = c_theta(theta, {3.0, 3.0}, zr::ConstantTest{p}, method).value;
            CHECK(v >= b.lo * (1.0 - 1e-10));
            CHECK(v <= b.hi * (1.0 + 1e-10));
        }
    }
    // Frozen after the bracket check above.
    CHECK(c_theta(1.0, {3.0, 3.0}, zr::ConstantTest{1.0}, CThetaMethod::SeriesClosedForm).value ==
          doctest::Approx(0.142510988858801).epsilon(1e-12));
}

TEST_CASE("series and quadrature forms of C_1 agree") {
    for (MacZrSelector zr : {MacZrSelector{zr::ShannonMac{}}, MacZrSelector{zr::PolyanskiyMac{1e-3}}})
        for (double theta : {0.3, 1.0}) {
            const MacSpec mac{5.0, 5.0};
            double s = c_theta(theta, mac, zr, CThetaMethod::SeriesClosedForm).value;
            double q = c_theta(theta, mac, zr, CThetaMethod::Quadrature).value;
            CHECK(s == doctest::Approx(q).epsilon(1e-6));
        }
}

TEST_CASE("C_2 is C_1 of the swapped channel and equals C_1 under symmetry") {
    const MacSpec asym{5.0, 10.0};
    for (double theta : {0.2, 0.4, 0.9}) {
        double c2 = c_theta_2(theta, asym, zr::PolyanskiyMac{1e-3}, CThetaMethod::SeriesClosedForm).value;
        double swapped = c_theta(theta, asym.swapped(), zr::PolyanskiyMac{1e-3}, CThetaMethod::SeriesClosedForm).value;
        double direct = c_theta_2_direct(theta, asym, zr::PolyanskiyMac{1e-3}).value;
        CHECK(c2 == swapped);
        CHECK(direct == doctest::Approx(c2).epsilon(1e-9));
        const MacSpec sym{4.0, 4.0};
        CHECK(c_theta_2(theta, sym, zr::ShannonMac{}, CThetaMethod::SeriesClosedForm).value ==
              doctest::Approx(c_theta(theta, sym, zr::ShannonMac{}, CThetaMethod::SeriesClosedForm).value).epsilon(1e-9));
    }
}

TEST_CASE("theta grids") {
    auto g = ThetaGrid::log_spaced(5, 1e-2);
    CHECK(g.values.front() == doctest::Approx(1e-2));
    CHECK(g.values.back() == 1.0);
    auto r = ThetaGrid::log_with_rationals(16, 1e-2, 6, 20);
    r.validate();
    for (double t : {0.5, 1.0 / 3, 2.0 / 3, 0.2, 0.8, 5.0 / 6, 1.0 / 20}) {
        bool found = false;
        for (double v : r.values) found = found || std::abs(v - t) < 1e-15;
        CHECK(found);
    }
    CHECK(r.values.front() >= 1e-2);
    CHECK_THROWS_AS((ThetaGrid{{0.5, 0.4}}.validate()), DomainError);
    CHECK_THROWS_AS((ThetaGrid{{0.0, 0.4}}.validate()), DomainError);
    CHECK_THROWS_AS(ThetaGrid::log_spaced(1, 0.1), DomainError);
}

TEST_CASE("MSE_1 bound is non-increasing in MSE_2 and never below the wall") {
    const MacSpec mac{10.0, 10.0};
    const auto grid = ThetaGrid::log_with_rationals(64, 1e-3, 8, 32);
    ThetaProfile profile(mac, zr::ShannonMac{}, grid);
    const double wall = mse_lower_bound({10.0, {}}, zr::Shannon{}).value;
    double prev = 1.0;
    for (int k = 0; k <= 40; ++k) {
        double m2 = std::pow(10.0, -8.0 + 7.0 * k / 40.0);
        double refined = mse1_bound_given_mse2(m2, profile, wall, true);
        double coarse = mse1_bound_given_mse2(m2, profile, wall, false);
        CHECK(refined >= coarse);
        CHECK(coarse >= wall);
        CHECK(refined <= prev * (1.0 + 1e-6));
        prev = refined;
    }
    CHECK(mse1_bound_given_mse2(0.5, profile, wall) == wall);
    CHECK_THROWS_AS(mse1_bound_given_mse2(-1.0, profile, wall), DomainError);
}

TEST_CASE("rational-augmented grid agrees with a much denser theta search") {
    const MacSpec mac{10.0, 10.0};
    const double wall = mse_lower_bound({10.0, {}}, zr::Shannon{}).value;
    ThetaProfile coarse(mac, zr::ShannonMac{}, ThetaGrid::log_with_rationals(128, 0.05, 24, 20));
    ThetaProfile dense(mac, zr::ShannonMac{}, ThetaGrid::log_with_rationals(1024, 0.05, 60, 20));
    for (double m2 : {1e-6, 3e-6, 1e-5, 3e-5}) {
        double a = mse1_bound_given_mse2(m2, coarse, wall, true);
        double b = mse1_bound_given_mse2(m2, dense, wall, true);
        CHECK(a == doctest::Approx(b).epsilon(2e-3));
    }
}

TEST_CASE("traced region: hull envelope lies below the points and mirrors under swap") {
    const MacSpec mac{5.0, 5.0};
    std::vector<double> m2;
    for (int k = 0; k < 12; ++k) m2.push_back(std::pow(10.0, -7.0 + 5.0 * k / 11.0));
    auto grid = ThetaGrid::log_with_rationals(48, 1e-3, 6, 16);
    auto curve = trace_region(mac, zr::PolyanskiyMac{1e-3}, m2, grid, true);
    curve.validate();
    REQUIRE(curve.envelope.size() == m2.size());
    CHECK(curve.points.front().flag);
    CHECK(curve.points.back().flag);
    for (std::size_t k = 0; k < m2.size(); ++k) {
        CHECK(curve.envelope[k] <= curve.points[k].y * (1.0 + 1e-12));
        CHECK(curve.points[k].y >= curve.meta.at("single_user_wall"));
    }
}

TEST_CASE("profiles exchange their families under a user swap") {
    const MacSpec mac{2.0, 6.0};
    auto grid = ThetaGrid::log_spaced(12, 0.05);
    ThetaProfile a(mac, zr::ShannonMac{}, grid);
    ThetaProfile b(mac.swapped(), zr::ShannonMac{}, grid);
    for (std::size_t k = 0; k < grid.values.size(); ++k) {
        CHECK(a.c1()[k] == doctest::Approx(b.c2()[k]).epsilon(1e-12));
        CHECK(a.c2()[k] == doctest::Approx(b.c1()[k]).epsilon(1e-12));
    }
}
