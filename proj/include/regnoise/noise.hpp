#pragma once

#include "regnoise/models.hpp"
#include "regnoise/rng.hpp"

#include <span>
#include <vector>

namespace regnoise {

/// Nonlinear multiplicative noise  B(u) y = sum_k b_k |u|_H^m u <y, g_k>.
///
/// For the scalar model the same coefficients describe c0 sgn(u)|u|^m dW with
/// c0 = b_1, i.e. the family form with exponent m - 1 (see family_exponent()).
class NoiseSpec {
public:
    NoiseSpec() : NoiseSpec(std::vector<double>{0.0}, 0.0) {}
    /// Throws ValidationError if b is empty, m < 0, or gamma is not finite.
    NoiseSpec(std::vector<double> coefficients, double exponent);

    /// K equal channels b_k = sqrt(gamma / K).
    static NoiseSpec uniform(double gamma, double exponent, std::size_t channels = 1);

    const std::vector<double>& coefficients() const noexcept { return b_; }
    double exponent() const noexcept { return m_; }
    double gamma() const noexcept { return gamma_; }
    std::size_t channels() const noexcept { return b_.size(); }

private:
    std::vector<double> b_;
    double m_;
    double gamma_;
};

/// Exponent of the rank-one family |u|^m u equivalent to the noise on this model.
double family_exponent(const NoiseSpec& noise, const Model& model) noexcept;

std::vector<double> diffusion_apply(const NoiseSpec& noise, const Model& model, std::span<const double> u,
                                    const WienerIncrement& w);
/// |B(u)|^2_{L2(U,H)} = gamma |u|_H^{2m+2}.
double hs_norm_sq(const NoiseSpec& noise, const Model& model, std::span<const double> u);
/// |B(u)^* u|^2_U = gamma |u|_H^{2m+4}.
double adjoint_action_norm_sq(const NoiseSpec& noise, const Model& model, std::span<const double> u);

} // namespace regnoise
