#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fel/convolution.hpp"
#include "fel/quadrature.hpp"
#include "fel/util.hpp"

using namespace fel;

TEST_CASE("gaussian self-convolution matches the variance-doubling closed form") {
    auto g = builtin_filter("gaussian");
    for (double r : {0.0, 0.4, 1.0, 2.5}) {
        const double numeric = self_convolution_value(g, r);
        const double closed = std::exp(-0.5 * r * r) / two_pi;
        CHECK(numeric == Catch::Approx(closed).epsilon(1e-10));
    }
}

TEST_CASE("gaussian excess profile values") {
    auto g = builtin_filter("gaussian");
    auto H = self_convolve_radial(g);
    // H(1) = (2pi)^-1 e^{-1/2} - pi^-1 e^{-1}
    CHECK(H(1.0) == Catch::Approx(std::exp(-0.5) / two_pi - std::exp(-1.0) / pi).epsilon(1e-9));
    // H(0) = (2pi)^-1 - pi^-1 < 0
    CHECK(H(0.0) == Catch::Approx(0.5 / pi - 1.0 / pi).epsilon(1e-9));
    CHECK(H(0.0) < 0.0);
}

TEST_CASE("euler_alpha self-convolution matches r K1(r) / 4pi") {
    auto ea = builtin_filter("euler_alpha");
    for (double r : {0.3, 1.3}) {
        const double numeric = self_convolution_value(ea, r, 1e-10);
        CHECK(numeric == Catch::Approx(ea.selfconv_closed(r)).epsilon(1e-7));
    }
}

TEST_CASE("excess profile has zero net first moment") {
    // 2pi int_0^inf t H(t) dt = 0 for any unit-mass filter
    for (const char* name : {"gaussian", "algebraic_blob"}) {
        auto spec = builtin_filter(name);
        auto H = excess_profile(spec);
        auto f = [&H](double t) { return t * H(t); };
        const double total = integrate(f, 0.0, 2.0, 1e-12, 1e-10).value +
                             integrate_to_inf(f, 2.0, 1e-12, 1e-10).value;
        INFO(name);
        CHECK(two_pi * std::abs(total) < 1e-8);
    }
}

TEST_CASE("blob self-convolution sanity: positive, finite mass, heavy tail") {
    auto b = builtin_filter("algebraic_blob");
    const double at0 = self_convolution_value(b, 0.0);
    // (h*h)(0) = int h^2 = 1/(3 pi) for the blob
    CHECK(at0 == Catch::Approx(1.0 / (3.0 * pi)).epsilon(1e-9));
    const double far = self_convolution_value(b, 50.0);
    // tails of two r^-4 densities add: (h*h)(r) ~ 2 h(r)
    CHECK(far == Catch::Approx(2.0 * b.profile(50.0)).epsilon(0.05));
}
