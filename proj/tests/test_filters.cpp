#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fel/filters.hpp"
#include "fel/quadrature.hpp"
#include "fel/util.hpp"

using namespace fel;

TEST_CASE("builtin profiles and scaled values") {
    auto g = builtin_filter("gaussian");
    CHECK(scaled_profile(g, 1.0, 0.0) == Catch::Approx(1.0 / pi).epsilon(1e-15));
    CHECK(scaled_profile(g, 0.5, 0.0) == Catch::Approx(4.0 / pi).epsilon(1e-15));

    auto b = builtin_filter("algebraic_blob");
    CHECK(scaled_profile(b, 2.0, 2.0) == Catch::Approx(1.0 / (16.0 * pi)).epsilon(1e-15));

    auto ea = builtin_filter("euler_alpha");
    CHECK_THROWS_AS(scaled_profile(ea, 1.0, 0.0), std::domain_error);

    CHECK_THROWS_AS(builtin_filter("box"), std::invalid_argument);
    CHECK_THROWS_AS(builtin_filter("euler_alpha", {{"alpha", 1.5}}), std::invalid_argument);
    CHECK_THROWS_AS(builtin_filter("gaussian", {{"alpha", 0.5}}), std::invalid_argument);
}

TEST_CASE("scaling identity holds to the last ulp") {
    auto b = builtin_filter("algebraic_blob");
    for (double eps : {0.05, 0.3, 1.7}) {
        for (double r : {0.01, 0.5, 2.0, 40.0}) {
            const double lhs = scaled_profile(b, eps, r);
            const double rhs = scaled_profile(b, 1.0, r / eps) / (eps * eps);
            CHECK(lhs == rhs);
        }
    }
}

TEST_CASE("unit mass is scale invariant for every builtin") {
    for (const char* name : {"gaussian", "algebraic_blob", "euler_alpha"}) {
        auto spec = builtin_filter(name);
        for (double eps : {0.1, 0.5, 1.0, 2.0}) {
            auto f = [&](double s) { return s * scaled_profile(spec, eps, std::max(s, 1e-300)); };
            const double mass =
                two_pi * (integrate(f, 0.0, 3.0 * eps, 1e-14, 1e-12).value +
                          integrate_to_inf(f, 3.0 * eps, 1e-14, 1e-12).value);
            INFO(name << " eps=" << eps);
            CHECK(mass == Catch::Approx(1.0).margin(1e-10));
        }
    }
}

TEST_CASE("algebraic blob: sup of r^3 h attained at sqrt(3)") {
    // calculus oracle: d/dr [r^3 (1+r^2)^-2] = 0 at r = sqrt(3),
    // value 3 sqrt(3) / (16 pi)
    auto b = builtin_filter("algebraic_blob");
    double sup = 0.0;
    for (double r : log_space(1e-8, 1e8, 8192))
        sup = std::max(sup, r * r * r * b.profile(r));
    // grid sampling resolves the maximum to O(dtau^2)
    CHECK(sup == Catch::Approx(3.0 * std::sqrt(3.0) / (16.0 * pi)).epsilon(5e-5));
}

TEST_CASE("euler_alpha near-origin weighted boundedness") {
    // r^(1/2) h stays bounded (and -> 0) despite the log singularity
    auto ea = builtin_filter("euler_alpha");
    double prev = std::numeric_limits<double>::infinity();
    for (double r : {1e-2, 1e-4, 1e-6, 1e-8}) {
        const double v = std::sqrt(r) * ea.profile(r);
        CHECK(v < 1.0);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("validation: gaussian and algebraic_blob pass every condition") {
    for (const char* name : {"gaussian", "algebraic_blob"}) {
        auto rep = validate_filter(builtin_filter(name));
        INFO(name);
        CHECK(rep.all_pass);
        CHECK(rep.conditions.size() == 6);  // each condition appears exactly once
        for (const auto& c : rep.conditions) {
            INFO(c.name << " note: " << c.note);
            CHECK(c.pass);
            CHECK_FALSE(c.inconclusive);
        }
    }
}

TEST_CASE("validation: euler_alpha passes") {
    auto rep = validate_filter(builtin_filter("euler_alpha"));
    for (const auto& c : rep.conditions) {
        INFO(c.name << " measured=" << c.measured << " note: " << c.note);
        CHECK(c.pass);
    }
}

TEST_CASE("validation catches a slowly decaying tail") {
    // h ~ r^-3 at infinity, normalized to unit mass: w3 h stays bounded but
    // the first moment integral 2pi int r^2 |h| dr diverges logarithmically.
    RadialFilterSpec s;
    s.name = "cubic_tail";
    const double c = [] {
        auto f = [](double r) { return r / (1.0 + r * r * r); };
        return 1.0 / (two_pi * (integrate(f, 0.0, 1.0, 1e-13, 1e-11).value +
                                integrate_to_inf(f, 1.0, 1e-13, 1e-11).value));
    }();
    s.profile = [c](double r) { return c / (1.0 + r * r * r); };
    s.dprofile = [c](double r) {
        const double t = 1.0 + r * r * r;
        return -3.0 * c * r * r / (t * t);
    };
    auto rep = validate_filter(s);
    CHECK_FALSE(rep.all_pass);
    bool w1_failed = false;
    for (const auto& cond : rep.conditions) {
        if (cond.name == "w1_h_L1") {
            w1_failed = !cond.pass;
            CHECK_FALSE(cond.inconclusive);  // diverges decisively, not inconclusively
        }
        if (cond.name == "unit_mass") CHECK(cond.pass);
        if (cond.name == "w3_h_Linf") CHECK(cond.pass);
    }
    CHECK(w1_failed);
}

TEST_CASE("validation rejects the zero profile") {
    RadialFilterSpec s;
    s.name = "zero";
    s.profile = [](double) { return 0.0; };
    s.dprofile = [](double) { return 0.0; };
    auto rep = validate_filter(s);
    CHECK_FALSE(rep.all_pass);
    for (const auto& c : rep.conditions)
        if (c.name == "unit_mass") CHECK_FALSE(c.pass);
}

TEST_CASE("enclosed mass closed forms vs quadrature") {
    auto g = builtin_filter("gaussian");
    CHECK(enclosed_mass(g, 0.0) == 0.0);
    CHECK(enclosed_mass(g, 1.0) == Catch::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
    CHECK(enclosed_mass_quadrature(g, 1.0) ==
          Catch::Approx(1.0 - std::exp(-1.0)).epsilon(1e-11));

    auto b = builtin_filter("algebraic_blob");
    CHECK(enclosed_mass(b, 1.0) == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(enclosed_mass_quadrature(b, 1.0) == Catch::Approx(0.5).epsilon(1e-11));

    auto ea = builtin_filter("euler_alpha");
    CHECK(enclosed_mass_quadrature(ea, 0.8) ==
          Catch::Approx(enclosed_mass(ea, 0.8)).epsilon(1e-10));
}
