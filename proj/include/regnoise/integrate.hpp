#pragma once

#include "regnoise/models.hpp"
#include "regnoise/noise.hpp"
#include "regnoise/rng.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace regnoise {

enum class Scheme { euler_maruyama, tamed, semi_implicit };

std::string_view to_string(Scheme scheme) noexcept;
Scheme scheme_from_string(std::string_view name);

struct SimConfig {
    double dt = 1e-3;
    double horizon = 1.0;
    Scheme scheme = Scheme::semi_implicit;
    double blowup_threshold = 1e6;
    double extinction_threshold = 1e-6;
    std::size_t record_stride = 1;

    /// Number of steps round(T / dt).
    std::size_t steps() const;
    /// Throws ValidationError unless dt < T and R_blow > 1 > eps_ext > 0.
    void validate() const;
    bool operator==(const SimConfig&) const = default;
};

enum class PathStatus { completed, blown_up, extinct };

std::string_view to_string(PathStatus status) noexcept;

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> h_norms;
    std::vector<double> v_norms;
    /// Signed state at each recorded time (scalar model only).
    std::vector<double> values;
    State terminal_state;
    PathStatus status = PathStatus::completed;
    /// t_blow or tau_e; unused for completed paths.
    double event_time = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    /// sup of h_norm over every step (not only recorded ones).
    double sup_h_norm = 0.0;
};

/// One explicit Euler-Maruyama step; entries may become non-finite (overflow).
State step_em(const Model& model, const NoiseSpec& noise, const State& s, double dt, const WienerIncrement& w);
/// s + D / (1 + |D|_H) with D the full Euler-Maruyama increment.
State step_tamed(const Model& model, const NoiseSpec& noise, const State& s, double dt, const WienerIncrement& w);
/// (I - dt A) s+ = s + dt (drift(s) - A s) + B(s) dW with A = stiff_linear_part(s).
/// A scalar step across the pole 1 - dt A <= 0 returns +inf.
State step_semi_implicit(const Model& model, const NoiseSpec& noise, const State& s, double dt,
                         const WienerIncrement& w);
State step(Scheme scheme, const Model& model, const NoiseSpec& noise, const State& s, double dt,
           const WienerIncrement& w);

/// Simulates one path from x0 on [0, T] with absorbing extinction.
TrajectoryRecord run_path(const Model& model, const NoiseSpec& noise, const SimConfig& cfg,
                          std::span<const double> x0, RngStream rng);

} // namespace regnoise
