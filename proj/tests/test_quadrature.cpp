#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fel/quadrature.hpp"
#include "fel/util.hpp"

using namespace fel;

TEST_CASE("gk15 weights are consistent") {
    // integral of 1 over [-1,1] is 2, of x^14 is 2/15 (Kronrod-exact degree)
    auto one = integrate([](double) { return 1.0; }, -1.0, 1.0);
    CHECK(one.value == Catch::Approx(2.0).epsilon(1e-15));
    auto x14 = integrate([](double x) { return std::pow(x, 14); }, -1.0, 1.0);
    CHECK(x14.value == Catch::Approx(2.0 / 15.0).epsilon(1e-13));
}

TEST_CASE("adaptive quadrature on known integrals") {
    auto g = integrate([](double x) { return std::exp(-x * x); }, 0.0, 8.0, 1e-14, 1e-13);
    CHECK(g.value == Catch::Approx(std::sqrt(pi) / 2.0).epsilon(1e-13));
    CHECK(g.converged);

    // integrable singularity at 0
    auto s = integrate([](double x) { return std::log(x); }, 0.0, 1.0, 1e-12, 1e-10);
    CHECK(s.value == Catch::Approx(-1.0).margin(1e-9));

    auto osc = integrate([](double x) { return std::sin(10.0 * x); }, 0.0, pi, 1e-13, 1e-12);
    CHECK(osc.value == Catch::Approx((1.0 - std::cos(10.0 * pi)) / 10.0).margin(1e-12));
}

TEST_CASE("semi-infinite integrals") {
    auto e = integrate_to_inf([](double x) { return std::exp(-x); }, 0.0, 1e-13, 1e-12);
    CHECK(e.value == Catch::Approx(1.0).epsilon(1e-12));

    // int_1^inf dx/x^3 = 1/2
    auto p = integrate_to_inf([](double x) { return 1.0 / (x * x * x); }, 1.0, 1e-13, 1e-12);
    CHECK(p.value == Catch::Approx(0.5).epsilon(1e-12));

    // heavy log tail: int_2^inf log(x)/x^3 = (2 log 2 + 1)/16
    auto lt = integrate_to_inf([](double x) { return std::log(x) / (x * x * x); }, 2.0,
                               1e-14, 1e-12);
    CHECK(lt.value == Catch::Approx((2.0 * std::log(2.0) + 1.0) / 16.0).epsilon(1e-11));
}

TEST_CASE("rational helper recovers simple fractions") {
    auto r = Rational::from_double(1.75);
    CHECK(r.num == 7);
    CHECK(r.den == 4);
    auto q = Rational::from_double(1.5);
    CHECK(q.num == 3);
    CHECK(q.den == 2);
    // 6 (2/3 - 1/p) for p = 7/4 is 4/7
    Rational two_thirds{2, 3};
    Rational six{6, 1};
    auto expo = six * (two_thirds - r.inverse());
    CHECK(expo.num == 4);
    CHECK(expo.den == 7);
}
