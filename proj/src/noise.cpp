#include "regnoise/noise.hpp"

#include "regnoise/errors.hpp"

#include <cmath>
#include <numeric>

namespace regnoise {

NoiseSpec::NoiseSpec(std::vector<double> coefficients, double exponent)
    : b_(std::move(coefficients)), m_(exponent), gamma_(0.0) {
    if (b_.empty()) throw ValidationError("noise needs at least one channel");
    if (!(m_ >= 0.0) || !std::isfinite(m_)) throw ValidationError("noise exponent m must be >= 0");
    for (double b : b_) gamma_ += b * b;
    if (!std::isfinite(gamma_)) throw ValidationError("noise gamma must be finite");
}

NoiseSpec NoiseSpec::uniform(double gamma, double exponent, std::size_t channels) {
    if (!(gamma >= 0.0)) throw ValidationError("noise gamma must be >= 0");
    if (channels == 0) throw ValidationError("noise channels must be >= 1");
    const double b = std::sqrt(gamma / static_cast<double>(channels));
    return NoiseSpec(std::vector<double>(channels, b), exponent);
}

double family_exponent(const NoiseSpec& noise, const Model& model) noexcept {
    return model.is_scalar() ? noise.exponent() - 1.0 : noise.exponent();
}

std::vector<double> diffusion_apply(const NoiseSpec& noise, const Model& model, std::span<const double> u,
                                    const WienerIncrement& w) {
    if (w.dW.size() != noise.channels()) {
        throw StructuralError("Wiener increment has " + std::to_string(w.dW.size()) + " channels, noise expects " +
                              std::to_string(noise.channels()));
    }
    if (u.size() != model.dim()) throw StructuralError("diffusion_apply: dimension mismatch");
    const auto& b = noise.coefficients();
    const double amplitude = std::transform_reduce(b.begin(), b.end(), w.dW.begin(), 0.0);
    if (model.is_scalar()) {
        const double x = u[0];
        return {amplitude * std::copysign(std::pow(std::abs(x), noise.exponent()), x)};
    }
    const double hn = h_norm(model, u);
    const double scale = hn == 0.0 ? 0.0 : amplitude * std::pow(hn, noise.exponent());
    std::vector<double> out(u.begin(), u.end());
    for (double& x : out) x *= scale;
    return out;
}

double hs_norm_sq(const NoiseSpec& noise, const Model& model, std::span<const double> u) {
    const double hn = h_norm(model, u);
    if (hn == 0.0) return 0.0;
    return noise.gamma() * std::pow(hn, 2.0 * family_exponent(noise, model) + 2.0);
}

double adjoint_action_norm_sq(const NoiseSpec& noise, const Model& model, std::span<const double> u) {
    const double hn = h_norm(model, u);
    if (hn == 0.0) return 0.0;
    return noise.gamma() * std::pow(hn, 2.0 * family_exponent(noise, model) + 4.0);
}

} // namespace regnoise
