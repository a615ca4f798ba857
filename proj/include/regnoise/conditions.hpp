#pragma once

#include "regnoise/models.hpp"
#include "regnoise/noise.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace regnoise {

enum class ConditionId { A3, A5, A3_star, A5_star };

std::string_view to_string(ConditionId id) noexcept;

struct Witness {
    double s = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct ConditionReport {
    ConditionId id = ConditionId::A3;
    bool holds = false;
    std::optional<Witness> witness;
    /// min over probes of (rhs - lhs) / (|rhs| + |lhs|); 0 where both vanish.
    double margin = 0.0;
    std::size_t probe_count = 0;
    /// Closed-form statement, when the check reduces to one.
    std::optional<std::string> symbolic;
    /// Constant C used by (A5) when the profile left it unset.
    std::optional<double> additive;
    /// Estimates produced by the coercivity sampler.
    std::optional<double> estimated_delta;
    std::optional<double> estimated_g_coeff;
};

/// Noise as seen by the norm inequalities: |B|^2 = gamma s^(2m+2), |B*u|^2 = gamma s^(2m+4).
struct NoiseFamily {
    double gamma = 0.0;
    double m = 0.0;
};

NoiseFamily noise_family(const NoiseSpec& noise, const Model& model) noexcept;

/// 64 log-spaced values in [1e-3, 1e6].
std::vector<double> default_norm_grid();

/// (g(s^2) + gamma s^(2m+2))(1 + s^2) <= C (1 + s^2)^2 + eta gamma s^(2m+4).
/// With profile.additive unset, C is chosen as the smallest constant that
/// works (reported in `additive`). Throws ValidationError for eta outside (1, 2).
ConditionReport check_a5(const CoercivityProfile& profile, const NoiseFamily& noise, double eta,
                         const std::vector<double>& norm_grid = default_norm_grid());

/// (g(s^2) + gamma s^(2m+2)) s^2 <= alpha gamma s^(2m+4).
ConditionReport check_a5_star(const CoercivityProfile& profile, const NoiseFamily& noise, double alpha,
                              const std::vector<double>& norm_grid = default_norm_grid());

/// C = 0, g(0) = 0 and alpha in (1, 2).
ConditionReport check_a3_star(const CoercivityProfile& profile);

/// Both sides of the coercivity inequality for one state.
struct CoercivityTerms {
    double pairing = 0.0;     // 2 <A(u), u>
    double dissipation = 0.0; // delta |u|_V^alpha
};

CoercivityTerms coercivity_terms(const Model& model, std::span<const double> u);

/// Samples random sine-mode states and estimates the smallest C0 with
/// 2<A(u),u> + delta |u|_V^alpha <= C0 |u|_H^(2q) + C. Throws DiagnosticError
/// if doubling the sample count moves the estimate by 10% or more.
ConditionReport check_generalized_coercivity(const Model& model, std::size_t sample_count = 200,
                                             std::uint64_t seed = 0x5eed);

enum class RegimeVerdict { regularized_by_theorem, outside_theorem_scope };

std::string_view to_string(RegimeVerdict verdict) noexcept;

struct RegimeClass {
    RegimeVerdict verdict = RegimeVerdict::outside_theorem_scope;
};

RegimeClass classify_regime(double c0, double m) noexcept;

} // namespace regnoise
