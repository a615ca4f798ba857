#pragma once

#include "regnoise/banded.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace regnoise {

/// Uniform grid on [0, length] with `n_interior` unknowns and zero Dirichlet ghosts.
struct GridSpec {
    double length = 1.0;
    std::size_t n_interior = 32;

    double spacing() const noexcept { return length / static_cast<double>(n_interior + 1); }
    bool operator==(const GridSpec&) const = default;
};

/// Discretized solution at time t. Scalar models carry a single value.
struct State {
    std::vector<double> values;
    double t = 0.0;
};

/// Constants of the generalized coercivity inequality
///   2<A(u), u> + delta |u|_V^alpha <= g(|u|_H^2) + C,  g(x) = C0 x^q.
/// An unset C0 means the constant is unknown and has to be estimated by sampling.
struct CoercivityProfile {
    double alpha = 2.0;
    double delta = 1.0;
    std::optional<double> g_coeff = 0.0;
    double g_exponent = 1.0;
    /// C; unset means the checker may pick the smallest admissible value.
    std::optional<double> additive = 0.0;

    /// g(x); throws ValidationError if C0 is unset.
    double g(double x) const;
    /// Extinction mode: C = 0, g(0) = 0 and alpha in (1, 2).
    bool extinction_mode() const noexcept;
    bool operator==(const CoercivityProfile&) const = default;
};

enum class ModelKind { superlinear_sde, p_laplace_hot, fast_diffusion, surface_growth, heat_validation };

std::string_view to_string(ModelKind kind) noexcept;
/// Throws ValidationError for unknown names.
ModelKind model_kind_from_string(std::string_view name);

/// Raw model parameters as they appear in a configuration file. Only the
/// fields relevant to the chosen kind are read.
struct ModelParameters {
    // superlinear_sde: dX = (source X^2 - sink sgn(X)|X|^sink_exponent) dt + c0 sgn(X)|X|^m dW
    double c0 = 1.0;
    double m = 2.0;
    double source = 1.0;
    double sink = 0.0;
    double sink_exponent = 0.5;
    std::optional<double> c1;
    // p_laplace_hot
    double p = 1.5;
    double eps_reg = 1e-8;
    // fast_diffusion
    double r = 0.5;
    // overrides for the profile constants the paper leaves implicit
    std::optional<double> g_coeff;
    std::optional<double> additive;

    bool operator==(const ModelParameters&) const = default;
};

/// A discretized model with its Gelfand-triple metadata. Immutable after construction.
class Model {
public:
    ModelKind kind() const noexcept { return kind_; }
    const GridSpec& grid() const noexcept { return grid_; }
    const ModelParameters& params() const noexcept { return params_; }
    const CoercivityProfile& profile() const noexcept { return profile_; }

    bool is_scalar() const noexcept { return kind_ == ModelKind::superlinear_sde; }
    /// Number of unknowns: 1 for the scalar model, n_interior otherwise.
    std::size_t dim() const noexcept { return is_scalar() ? 1 : grid_.n_interior; }

    /// Copy with a replaced profile (used once C0 has been estimated).
    Model with_profile(const CoercivityProfile& profile) const;

private:
    friend Model make_model(ModelKind, const ModelParameters&, const GridSpec&);

    ModelKind kind_ = ModelKind::heat_validation;
    GridSpec grid_;
    ModelParameters params_;
    CoercivityProfile profile_;
};

/// Builds a model and fills its coercivity profile. Throws ValidationError
/// naming the violated invariant.
Model make_model(ModelKind kind, const ModelParameters& params, const GridSpec& grid = {});

double h_norm(const Model& model, std::span<const double> u);
double v_norm(const Model& model, std::span<const double> u);
/// Inner product of the model's H-space, consistent with h_norm.
double h_inner(const Model& model, std::span<const double> a, std::span<const double> b);
std::vector<double> drift(const Model& model, double t, std::span<const double> u);

/// Linear operator A_lin(u) with drift(u) = A_lin(u) u + remainder(u), frozen
/// at the current state; the implicit part of the semi-implicit scheme.
BandedMatrix stiff_linear_part(const Model& model, std::span<const double> u);

/// Largest c* with v_norm(u) >= c* h_norm(u) on the discrete space.
double embedding_constant(const Model& model, unsigned long long seed = 0x5eed);

/// Positive definite K = -D^2 with zero Dirichlet ghosts (n x n, tridiagonal).
BandedMatrix negative_laplacian(const GridSpec& grid);
/// Eigenvalue lambda_k = (2/h^2)(1 - cos(k pi h / L)) of K, k = 1..n.
double laplacian_eigenvalue(const GridSpec& grid, std::size_t k);
/// k-th discrete sine mode sin(k pi x_i / L) sampled on the interior nodes.
std::vector<double> sine_mode(const GridSpec& grid, std::size_t k);

} // namespace regnoise
