#include <doctest.h>

#include "regnoise/conditions.hpp"
#include "regnoise/errors.hpp"

#include <cmath>
#include <random>

using namespace regnoise;

namespace {

CoercivityProfile power_profile(double c0, double q, std::optional<double> c = std::nullopt) {
    CoercivityProfile p;
    p.g_coeff = c0;
    p.g_exponent = q;
    p.additive = c;
    return p;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
    return g;
}

} // namespace

TEST_CASE("default norm grid") {
    const auto g = default_norm_grid();
    REQUIRE(g.size() == 64);
    CHECK(g.front() == doctest::Approx(1e-3));
    CHECK(g.back() == doctest::Approx(1e6));
}

TEST_CASE("check_a5 leading-coefficient examples") {
    const auto grid = log_grid(1e-3, 100.0, 64);
    // C0 + gamma = 5 <= eta gamma = 6
    const auto ok = check_a5(power_profile(1.0, 2.0), {4.0, 1.0}, 1.5, grid);
    CHECK(ok.holds);
    CHECK(ok.margin >= 0.0);
    CHECK_FALSE(ok.witness);
    REQUIRE(ok.additive);
    CHECK(*ok.additive >= 0.0);

    // C0 + gamma = 2 > eta gamma = 1.5
    const auto bad = check_a5(power_profile(1.0, 2.0), {1.0, 1.0}, 1.5, grid);
    CHECK_FALSE(bad.holds);
    REQUIRE(bad.witness);
    CHECK(bad.witness->s > 1.0);
    CHECK(bad.witness->lhs > bad.witness->rhs);
    CHECK(bad.margin < 0.0);
}

TEST_CASE("check_a5 on the scalar superlinear profile") {
    // g = c1 x^{3/2}, c0^2 = 4, scalar power 3/2 -> family exponent 1/2; eta in (c1/c0^2 + 1, 2)
    const auto scalar = make_model(ModelKind::superlinear_sde, [] {
        ModelParameters p;
        p.c0 = 2.0;
        p.m = 1.5;
        p.c1 = 2.5;
        return p;
    }());
    const auto fam = noise_family(NoiseSpec::uniform(4.0, 1.5), scalar);
    CHECK(fam.m == doctest::Approx(0.5));
    auto prof = scalar.profile();
    prof.additive.reset();
    CHECK(check_a5(prof, fam, 1.8).holds);
    CHECK_FALSE(check_a5(prof, fam, 1.5).holds); // below c1/c0^2 + 1 = 1.625
}

TEST_CASE("check_a5 with a fixed additive constant") {
    // C = 0 and g = 0: gamma s^{2m+2}(1+s^2) <= eta gamma s^{2m+4} fails near the origin
    const auto rep = check_a5(power_profile(0.0, 1.0, 0.0), {1.0, 1.0}, 1.5);
    CHECK_FALSE(rep.holds);
    REQUIRE(rep.witness);
    CHECK(rep.witness->s < 1.0);
    CHECK_FALSE(rep.additive);
}

TEST_CASE("check_a5 validation") {
    CHECK_THROWS_AS(check_a5(power_profile(1, 2), {1, 1}, 1.0), ValidationError);
    CHECK_THROWS_AS(check_a5(power_profile(1, 2), {1, 1}, 2.0), ValidationError);
    CHECK_THROWS_AS(check_a5(power_profile(1, 2), {1, 1}, 1.5, {}), ValidationError);
    CHECK_THROWS_AS(check_a5(power_profile(1, 2), {1, 1}, 1.5, {-1.0}), ValidationError);
}

TEST_CASE("check_a5 agrees with the closed form for q = m + 1") {
    std::mt19937_64 gen(42);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    int disagreements = 0;
    for (int i = 0; i < 100; ++i) {
        const double m = 2.0 * u01(gen);
        const double c0 = 5.0 * u01(gen);
        const double gamma = 0.1 + 10.0 * u01(gen);
        const double eta = 1.0 + 1e-3 + 0.998 * u01(gen);
        const bool expected = c0 + gamma <= eta * gamma;
        const auto rep = check_a5(power_profile(c0, m + 1.0), {gamma, m}, eta);
        if (rep.holds != expected) ++disagreements;
        CHECK(rep.holds == (rep.margin >= 0.0));
        if (!rep.holds) CHECK(rep.witness);
    }
    CHECK(disagreements == 0);
}

TEST_CASE("check_a5 equality case passes") {
    // C0 + gamma == eta gamma exactly
    const auto rep = check_a5(power_profile(0.5, 2.0), {1.0, 1.0}, 1.5);
    CHECK(rep.holds);
}

TEST_CASE("check_a5_star examples") {
    for (double gamma : {1e-3, 0.5, 1.0, 7.0}) {
        for (double m : {0.0, 1.0, 2.5}) {
            const auto rep = check_a5_star(power_profile(0.0, 1.0, 0.0), {gamma, m}, 1.5);
            CHECK(rep.holds);
            CHECK(rep.symbolic);
        }
    }
    const auto eq = check_a5_star(power_profile(1.0, 2.0, 0.0), {2.0, 1.0}, 1.5);
    CHECK(eq.holds);
    CHECK(eq.margin == 0.0);
    REQUIRE(eq.symbolic);
    CHECK(eq.symbolic->find("gamma >= C0 / (alpha - 1)") != std::string::npos);

    const auto bad = check_a5_star(power_profile(1.0, 2.0, 0.0), {1.0, 1.0}, 1.5);
    CHECK_FALSE(bad.holds);
    REQUIRE(bad.witness);
    CHECK(bad.witness->s > 0.0);

    CHECK_THROWS_AS(check_a5_star(power_profile(1.0, 2.0), {1.0, 1.0}, 2.0), ValidationError);
    CoercivityProfile unset;
    unset.g_coeff.reset();
    CHECK_THROWS_AS(check_a5_star(unset, {1.0, 1.0}, 1.5), ValidationError);
}

TEST_CASE("check_a5_star with g = 0 holds for every gamma and alpha") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double gamma = std::pow(10.0, -3.0 + 6.0 * u01(gen));
        const double alpha = 1.0 + 1e-6 + (1.0 - 2e-6) * u01(gen);
        CHECK(check_a5_star(power_profile(0.0, 1.0, 0.0), {gamma, 3.0 * u01(gen)}, alpha).holds);
    }
}

TEST_CASE("check_a3_star") {
    ModelParameters p;
    p.r = 0.5;
    const auto fd = make_model(ModelKind::fast_diffusion, p, GridSpec{1.0, 16});
    CHECK(check_a3_star(fd.profile()).holds);
    const auto sc = make_model(ModelKind::superlinear_sde, {});
    const auto rep = check_a3_star(sc.profile());
    CHECK_FALSE(rep.holds);
    CHECK(rep.witness);
    REQUIRE(rep.symbolic);
    CHECK(rep.symbolic->find("alpha") != std::string::npos);
}

TEST_CASE("classify_regime") {
    CHECK(classify_regime(1.0, 2.0).verdict == RegimeVerdict::regularized_by_theorem);
    CHECK(classify_regime(2.0, 1.5).verdict == RegimeVerdict::regularized_by_theorem);
    CHECK(classify_regime(1.0, 1.0).verdict == RegimeVerdict::outside_theorem_scope);
    CHECK(classify_regime(1.0, 1.5).verdict == RegimeVerdict::outside_theorem_scope);
    CHECK(classify_regime(std::sqrt(2.0), 1.5).verdict == RegimeVerdict::outside_theorem_scope);

    // monotone in c0 and m
    for (double c0 = 0.1; c0 < 4.0; c0 += 0.13)
        for (double m = 1.0; m < 3.0; m += 0.05) {
            if (classify_regime(c0, m).verdict == RegimeVerdict::regularized_by_theorem) {
                CHECK(classify_regime(c0 + 0.2, m).verdict == RegimeVerdict::regularized_by_theorem);
                CHECK(classify_regime(c0, m + 0.05).verdict == RegimeVerdict::regularized_by_theorem);
            }
        }
}

TEST_CASE("coercivity pairing identities for heat and fast diffusion") {
    std::mt19937_64 gen(17);
    std::normal_distribution<double> nd;
    const std::size_t n = 24;
    const auto heat = make_model(ModelKind::heat_validation, {}, GridSpec{1.0, n});
    ModelParameters fp;
    fp.r = 0.5;
    const auto fd = make_model(ModelKind::fast_diffusion, fp, GridSpec{1.0, n});
    const double h = heat.grid().spacing();
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> u(n);
        for (double& x : u) x = nd(gen) * std::pow(10.0, trial % 5 - 2);

        double grad = 0.0; // summation by parts with zero ghosts
        for (std::size_t i = 0; i <= n; ++i) {
            const double left = i == 0 ? 0.0 : u[i - 1];
            const double right = i == n ? 0.0 : u[i];
            grad += (right - left) * (right - left) / (h * h);
        }
        grad *= h;
        const auto th = coercivity_terms(heat, u);
        CHECK(th.pairing == doctest::Approx(-2.0 * grad).epsilon(1e-10));
        CHECK(std::abs(th.pairing + th.dissipation) <= 1e-10 * std::abs(th.pairing));

        double mass = 0.0;
        for (double x : u) mass += std::pow(std::abs(x), 1.5);
        mass *= h;
        const auto tf = coercivity_terms(fd, u);
        CHECK(tf.pairing == doctest::Approx(-2.0 * mass).epsilon(1e-10));
        CHECK(std::abs(tf.pairing + tf.dissipation) <= 1e-10 * std::abs(tf.pairing));
    }

    const auto rh = check_generalized_coercivity(heat, 100, 1);
    CHECK(rh.holds);
    CHECK(*rh.estimated_g_coeff == 0.0);
    const auto rf = check_generalized_coercivity(fd, 100, 1);
    CHECK(rf.holds);
    CHECK(*rf.estimated_g_coeff == 0.0);
    CHECK(*rf.estimated_delta == 2.0);
}

TEST_CASE("p-Laplace with a hot source has a finite positive C0") {
    ModelParameters p;
    p.p = 1.5;
    const auto pl = make_model(ModelKind::p_laplace_hot, p, GridSpec{1.0, 64});
    const auto rep = check_generalized_coercivity(pl, 100, 7);
    CHECK(rep.holds);
    REQUIRE(rep.estimated_g_coeff);
    CHECK(*rep.estimated_g_coeff > 0.0);
    CHECK(std::isfinite(*rep.estimated_g_coeff));
    CHECK(rep.probe_count >= 200);

    const auto sc = make_model(ModelKind::superlinear_sde, {});
    CHECK_THROWS_AS(check_generalized_coercivity(sc, 100), ValidationError);
    CHECK_THROWS_AS(check_generalized_coercivity(pl, 99), ValidationError);
}
