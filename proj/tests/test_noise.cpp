#include <doctest.h>

#include "regnoise/errors.hpp"
#include "regnoise/noise.hpp"

#include <cmath>
#include <random>

using namespace regnoise;

namespace {

Model heat(std::size_t n = 16) { return make_model(ModelKind::heat_validation, {}, GridSpec{1.0, n}); }

std::vector<double> with_norm(const Model& m, std::vector<double> u, double target) {
    const double hn = h_norm(m, u);
    for (double& x : u) x *= target / hn;
    return u;
}

// sum_k |b_k |u|^m u|_H^2 evaluated channel by channel
double brute_hs(const NoiseSpec& noise, const Model& model, const std::vector<double>& u) {
    const double hn = h_norm(model, u);
    double acc = 0.0;
    for (double b : noise.coefficients()) {
        std::vector<double> col(u);
        for (double& x : col) x *= b * std::pow(hn, noise.exponent());
        const double c = h_norm(model, col);
        acc += c * c;
    }
    return acc;
}

// (B* u)_k = <u, b_k |u|^m u>_H
double brute_adjoint(const NoiseSpec& noise, const Model& model, const std::vector<double>& u) {
    const double hn = h_norm(model, u);
    double acc = 0.0;
    for (double b : noise.coefficients()) {
        std::vector<double> col(u);
        for (double& x : col) x *= b * std::pow(hn, noise.exponent());
        const double k = h_inner(model, u, col);
        acc += k * k;
    }
    return acc;
}

} // namespace

TEST_CASE("NoiseSpec invariants") {
    const NoiseSpec n({0.5, 0.5}, 1.0);
    CHECK(n.gamma() == 0.5);
    CHECK(n.channels() == 2);
    CHECK(NoiseSpec::uniform(4.0, 2.0).coefficients()[0] == 2.0);
    CHECK_THROWS_AS(NoiseSpec({}, 1.0), ValidationError);
    CHECK_THROWS_AS(NoiseSpec({1.0}, -1.0), ValidationError);
    CHECK_THROWS_AS(NoiseSpec({1e200, 1e200}, 1.0), ValidationError);
    CHECK_THROWS_AS(NoiseSpec::uniform(-1.0, 1.0), ValidationError);
}

TEST_CASE("diffusion_apply examples") {
    const auto m = heat();
    const NoiseSpec n({0.5, 0.5}, 1.0);
    const WienerIncrement w{{0.1, -0.1}, 0.01};
    for (double x : diffusion_apply(n, m, std::vector<double>(16, 0.0), w)) CHECK(x == 0.0);

    const auto scalar = make_model(ModelKind::superlinear_sde, {});
    const auto s = NoiseSpec::uniform(1.0, 2.0);
    CHECK(diffusion_apply(s, scalar, std::vector<double>{1.0}, WienerIncrement{{0.3}, 0.01})[0] ==
          doctest::Approx(0.3));
    // odd extension for non-integer powers
    const auto s15 = NoiseSpec::uniform(1.0, 1.5);
    CHECK(diffusion_apply(s15, scalar, std::vector<double>{-4.0}, WienerIncrement{{1.0}, 0.01})[0] ==
          doctest::Approx(-8.0));

    const auto u = with_norm(m, sine_mode(m.grid(), 2), 2.0);
    for (double x : diffusion_apply(n, m, u, w)) CHECK(x == doctest::Approx(0.0));

    CHECK_THROWS_AS(diffusion_apply(n, m, u, WienerIncrement{{0.1}, 0.01}), StructuralError);
}

TEST_CASE("diffusion_apply is linear in dW") {
    const auto m = heat();
    const NoiseSpec n({0.3, 1.1, -0.4}, 1.5);
    const auto u = with_norm(m, sine_mode(m.grid(), 1), 1.7);
    const WienerIncrement a{{0.1, 0.2, -0.3}, 0.01}, b{{-0.5, 0.05, 0.7}, 0.01};
    WienerIncrement ab{{0, 0, 0}, 0.01};
    for (int k = 0; k < 3; ++k) ab.dW[k] = 2.0 * a.dW[k] - 3.0 * b.dW[k];
    const auto fa = diffusion_apply(n, m, u, a), fb = diffusion_apply(n, m, u, b), fab = diffusion_apply(n, m, u, ab);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(fab[i] == doctest::Approx(2 * fa[i] - 3 * fb[i]).scale(1.0));
}

TEST_CASE("hs_norm_sq and adjoint_action_norm_sq examples") {
    const auto m = heat();
    const auto zero = std::vector<double>(16, 0.0);
    const auto n1 = NoiseSpec::uniform(0.25, 1.0);
    CHECK(hs_norm_sq(n1, m, zero) == 0.0);
    CHECK(adjoint_action_norm_sq(n1, m, zero) == 0.0);

    const auto u2 = with_norm(m, sine_mode(m.grid(), 1), 2.0);
    const auto u3 = with_norm(m, sine_mode(m.grid(), 3), 3.0);
    CHECK(hs_norm_sq(n1, m, u2) == doctest::Approx(4.0));
    CHECK(hs_norm_sq(n1, m, u2) == doctest::Approx(brute_hs(n1, m, u2)));
    const auto g1 = NoiseSpec({0.6, 0.8}, 1.0);
    CHECK(hs_norm_sq(g1, m, u3) == doctest::Approx(81.0));
    CHECK(brute_hs(g1, m, u3) == doctest::Approx(81.0));

    CHECK(adjoint_action_norm_sq(g1, m, u2) == doctest::Approx(64.0));
    CHECK(brute_adjoint(g1, m, u2) == doctest::Approx(64.0));
    const auto g2 = NoiseSpec::uniform(2.0, 0.0, 3);
    CHECK(adjoint_action_norm_sq(g2, m, u3) == doctest::Approx(162.0));
    CHECK(brute_adjoint(g2, m, u3) == doctest::Approx(162.0));
}

TEST_CASE("rank-one identity and scaling on random states") {
    std::mt19937_64 gen(8);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.0, 3.0);
    for (auto kind : {ModelKind::heat_validation, ModelKind::fast_diffusion, ModelKind::surface_growth,
                      ModelKind::p_laplace_hot}) {
        const auto m = make_model(kind, {}, GridSpec{1.0, 12});
        for (int i = 0; i < 250; ++i) {
            std::vector<double> b(1 + i % 4);
            for (double& x : b) x = nd(gen);
            const NoiseSpec n(b, ud(gen));
            std::vector<double> u(12);
            for (double& x : u) x = nd(gen);
            const double hn = h_norm(m, u);
            const double lhs = adjoint_action_norm_sq(n, m, u);
            const double rhs = hs_norm_sq(n, m, u) * hn * hn;
            CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));

            const double c = nd(gen);
            std::vector<double> cu(u);
            for (double& x : cu) x *= c;
            CHECK(hs_norm_sq(n, m, cu) ==
                  doctest::Approx(std::pow(std::abs(c), 2 * n.exponent() + 2) * hs_norm_sq(n, m, u)).epsilon(1e-11));
        }
    }
}

TEST_CASE("scalar noise uses the shifted family exponent") {
    const auto scalar = make_model(ModelKind::superlinear_sde, {});
    const auto n = NoiseSpec::uniform(1.0, 2.0);
    CHECK(family_exponent(n, scalar) == 1.0);
    // c0^2 |x|^{2m}
    CHECK(hs_norm_sq(n, scalar, std::vector<double>{3.0}) == doctest::Approx(81.0));
    CHECK(adjoint_action_norm_sq(n, scalar, std::vector<double>{3.0}) == doctest::Approx(729.0));
}
