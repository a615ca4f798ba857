#include "regnoise/models.hpp"

#include "regnoise/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace regnoise {

namespace {

// Floor for |u| inside negative powers (fast-diffusion weight, scalar sink).
constexpr double kWeightFloor = 1e-30;

void check_dim(const Model& model, std::span<const double> u) {
    if (u.size() != model.dim()) {
        throw StructuralError("state has " + std::to_string(u.size()) + " entries, model expects " +
                              std::to_string(model.dim()));
    }
}

double signed_pow(double x, double e) { return std::copysign(std::pow(std::abs(x), e), x); }

double sum_sq(std::span<const double> u) {
    return std::transform_reduce(u.begin(), u.end(), u.begin(), 0.0);
}

// K u with K = -D^2 and zero ghosts.
std::vector<double> apply_k(std::span<const double> u, double h) {
    const std::size_t n = u.size();
    const double inv = 1.0 / (h * h);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double left = i > 0 ? u[i - 1] : 0.0;
        const double right = i + 1 < n ? u[i + 1] : 0.0;
        out[i] = (2.0 * u[i] - left - right) * inv;
    }
    return out;
}

// Forward differences on the n+1 faces, ghosts included.
std::vector<double> face_differences(std::span<const double> u, double h) {
    const std::size_t n = u.size();
    std::vector<double> d(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
        const double right = j < n ? u[j] : 0.0;
        const double left = j > 0 ? u[j - 1] : 0.0;
        d[j] = (right - left) / h;
    }
    return d;
}

// Transpose of face_differences applied to face values g.
std::vector<double> face_differences_adjoint(std::span<const double> g, double h) {
    const std::size_t n = g.size() - 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = (g[i] - g[i + 1]) / h;
    return out;
}

double p_of(const Model& model) {
    return model.kind() == ModelKind::heat_validation ? 2.0 : model.params().p;
}

std::vector<double> p_laplace_face_weights(std::span<const double> d, double p, double eps) {
    std::vector<double> w(d.size());
    for (std::size_t j = 0; j < d.size(); ++j) {
        w[j] = p == 2.0 ? 1.0 : std::pow(d[j] * d[j] + eps * eps, 0.5 * (p - 2.0));
    }
    return w;
}

std::vector<double> fast_diffusion_weights(std::span<const double> u, double r) {
    std::vector<double> w(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        w[i] = std::pow(std::max(std::abs(u[i]), kWeightFloor), r - 1.0);
    }
    return w;
}

// Gradients of the two norms, used by the embedding-constant search.
std::vector<double> h_norm_gradient(const Model& model, std::span<const double> u, double hn) {
    const double h = model.grid().spacing();
    std::vector<double> g;
    switch (model.kind()) {
    case ModelKind::superlinear_sde:
        return {u[0] >= 0 ? 1.0 : -1.0};
    case ModelKind::p_laplace_hot:
    case ModelKind::heat_validation:
        g.assign(u.begin(), u.end());
        for (double& x : g) x *= h / hn;
        return g;
    case ModelKind::fast_diffusion:
        g = negative_laplacian(model.grid()).solve(u);
        for (double& x : g) x *= h / hn;
        return g;
    case ModelKind::surface_growth:
        g = apply_k(apply_k(u, h), h);
        for (double& x : g) x *= h / hn;
        return g;
    }
    return g;
}

std::vector<double> v_norm_gradient(const Model& model, std::span<const double> u, double vn) {
    const double h = model.grid().spacing();
    std::vector<double> g;
    switch (model.kind()) {
    case ModelKind::superlinear_sde:
        return {u[0] >= 0 ? 1.0 : -1.0};
    case ModelKind::p_laplace_hot:
    case ModelKind::heat_validation: {
        const double p = p_of(model);
        auto d = face_differences(u, h);
        for (double& x : d) x = signed_pow(x, p - 1.0);
        g = face_differences_adjoint(d, h);
        const double scale = h * std::pow(vn, 1.0 - p);
        for (double& x : g) x *= scale;
        return g;
    }
    case ModelKind::fast_diffusion: {
        const double a = model.params().r + 1.0;
        const double scale = h * std::pow(vn, 1.0 - a);
        g.resize(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) g[i] = scale * signed_pow(u[i], a - 1.0);
        return g;
    }
    case ModelKind::surface_growth: {
        auto k = [&](std::span<const double> x) { return apply_k(x, h); };
        g = k(k(k(k(u))));
        for (double& x : g) x *= h / vn;
        return g;
    }
    }
    return g;
}

Eigen::MatrixXd dense_k(const GridSpec& grid) {
    const auto n = static_cast<Eigen::Index>(grid.n_interior);
    const double inv = 1.0 / (grid.spacing() * grid.spacing());
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = 2.0 * inv;
        if (i + 1 < n) k(i, i + 1) = k(i + 1, i) = -inv;
    }
    return k;
}

double exact_embedding_constant(const Model& model) {
    const Eigen::MatrixXd k = dense_k(model.grid());
    if (model.kind() == ModelKind::heat_validation) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
        return std::sqrt(es.eigenvalues().minCoeff());
    }
    // surface growth: min |K^2 u|^2 / |K u|^2 as a generalized eigenproblem.
    const Eigen::MatrixXd k2 = k * k;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(k2 * k2, k2, Eigen::EigenvaluesOnly);
    return std::sqrt(es.eigenvalues().minCoeff());
}

// Projected gradient descent on the H-unit sphere with Barzilai-Borwein steps
// and Armijo backtracking. Returns {best ratio, converged}.
std::pair<double, bool> descend(const Model& model, std::vector<double> u, int max_iter, double tol) {
    auto normalize = [&](std::vector<double>& x) {
        const double hn = h_norm(model, x);
        for (double& v : x) v /= hn;
    };
    auto tangent_gradient = [&](const std::vector<double>& x, double f) {
        auto gv = v_norm_gradient(model, x, f);
        const auto gh = h_norm_gradient(model, x, 1.0);
        for (std::size_t i = 0; i < gv.size(); ++i) gv[i] -= f * gh[i];
        return gv;
    };

    normalize(u);
    double f = v_norm(model, u);
    auto g = tangent_gradient(u, f);
    double step = 1.0 / std::max(std::sqrt(sum_sq(g)), 1e-300);
    std::vector<double> u_prev, g_prev;
    int quiet = 0;
    for (int it = 0; it < max_iter; ++it) {
        const double gg = sum_sq(g);
        if (gg == 0.0) return {f, true};
        double trial_step = step;
        std::vector<double> trial(u.size());
        double f_trial = f;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] - trial_step * g[i];
            normalize(trial);
            f_trial = v_norm(model, trial);
            if (std::isfinite(f_trial) && f_trial <= f - 1e-4 * trial_step * gg) {
                accepted = true;
                break;
            }
            trial_step *= 0.5;
        }
        if (!accepted) return {f, true}; // no descent direction left at this resolution
        const double rel = (f - f_trial) / f;
        u_prev = std::move(u);
        g_prev = std::move(g);
        u = trial;
        f = f_trial;
        g = tangent_gradient(u, f);
        double sy = 0.0, ss = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double s = u[i] - u_prev[i];
            sy += s * (g[i] - g_prev[i]);
            ss += s * s;
        }
        step = sy > 0.0 ? ss / sy : trial_step * 2.0;
        quiet = rel < tol ? quiet + 1 : 0;
        if (quiet >= 3) return {f, true};
    }
    return {f, false};
}

double scalar_sink_coefficient(const ModelParameters& p, double u) {
    return p.sink * std::pow(std::max(std::abs(u), kWeightFloor), p.sink_exponent - 1.0);
}

} // namespace

double CoercivityProfile::g(double x) const {
    if (!g_coeff) throw ValidationError("coercivity constant C0 is unset; estimate it first");
    if (*g_coeff == 0.0) return 0.0;
    return *g_coeff * std::pow(x, g_exponent);
}

bool CoercivityProfile::extinction_mode() const noexcept {
    const bool g_zero_at_origin = g_exponent > 0.0 || (g_coeff && *g_coeff == 0.0);
    return additive && *additive == 0.0 && g_zero_at_origin && alpha > 1.0 && alpha < 2.0;
}

std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
    case ModelKind::superlinear_sde: return "superlinear_sde";
    case ModelKind::p_laplace_hot: return "p_laplace_hot";
    case ModelKind::fast_diffusion: return "fast_diffusion";
    case ModelKind::surface_growth: return "surface_growth";
    case ModelKind::heat_validation: return "heat_validation";
    }
    return "unknown";
}

ModelKind model_kind_from_string(std::string_view name) {
    for (auto k : {ModelKind::superlinear_sde, ModelKind::p_laplace_hot, ModelKind::fast_diffusion,
                   ModelKind::surface_growth, ModelKind::heat_validation}) {
        if (to_string(k) == name) return k;
    }
    throw ValidationError("unknown model kind '" + std::string(name) + "'");
}

Model Model::with_profile(const CoercivityProfile& profile) const {
    Model out = *this;
    out.profile_ = profile;
    return out;
}

Model make_model(ModelKind kind, const ModelParameters& params, const GridSpec& grid) {
    if (kind != ModelKind::superlinear_sde) {
        if (!(grid.length > 0.0) || !std::isfinite(grid.length)) {
            throw ValidationError("grid.length must be positive");
        }
        if (grid.n_interior < 1) throw ValidationError("grid.n_interior must be at least 1");
    }
    if (params.g_coeff && !(*params.g_coeff >= 0.0)) throw ValidationError("g_coeff must be >= 0");
    if (params.additive && !(*params.additive >= 0.0)) throw ValidationError("additive must be >= 0");

    Model model;
    model.kind_ = kind;
    model.grid_ = kind == ModelKind::superlinear_sde ? GridSpec{1.0, 1} : grid;
    model.params_ = params;
    CoercivityProfile& prof = model.profile_;

    switch (kind) {
    case ModelKind::superlinear_sde: {
        if (!(params.c0 >= 0.0)) throw ValidationError("superlinear_sde requires c0 >= 0");
        if (!(params.m >= 1.0)) throw ValidationError("superlinear_sde requires m >= 1");
        if (!(params.source >= 0.0) || !(params.sink >= 0.0)) {
            throw ValidationError("superlinear_sde requires source >= 0 and sink >= 0");
        }
        if (!(params.sink_exponent > 0.0 && params.sink_exponent < 1.0)) {
            throw ValidationError("superlinear_sde requires sink_exponent in (0, 1)");
        }
        const double c0sq = params.c0 * params.c0;
        const double c1 = params.c1 ? *params.c1 : (c0sq > 2.0 ? 0.5 * (2.0 + c0sq) : 3.0);
        if (!(c1 > 2.0)) throw ValidationError("superlinear_sde requires c1 > 2");
        prof.alpha = 2.0;
        prof.delta = 1.0;
        prof.g_coeff = params.g_coeff ? *params.g_coeff : c1;
        prof.g_exponent = 1.5;
        prof.additive = params.additive ? *params.additive
                                        : 4.0 * std::pow(prof.delta, 3) / (27.0 * (c1 - 2.0) * (c1 - 2.0));
        model.params_.c1 = c1;
        break;
    }
    case ModelKind::p_laplace_hot:
        if (!(params.p > 1.0 && params.p < 2.0)) {
            throw ValidationError("p_laplace_hot requires 1 < p < 2 (singular case)");
        }
        if (!(params.eps_reg > 0.0)) throw ValidationError("p_laplace_hot requires eps_reg > 0");
        prof.alpha = params.p;
        prof.delta = 0.5;
        prof.g_coeff = params.g_coeff;
        prof.g_exponent = (4.0 * params.p - 3.0) / (3.0 * params.p - 3.0);
        prof.additive = params.additive.value_or(0.0);
        break;
    case ModelKind::fast_diffusion:
        if (!(params.r > 0.0 && params.r < 1.0)) {
            throw ValidationError("fast_diffusion requires r in (0, 1) for d = 1");
        }
        prof.alpha = params.r + 1.0;
        prof.delta = 2.0;
        prof.g_coeff = 0.0;
        prof.g_exponent = 1.0;
        prof.additive = 0.0;
        break;
    case ModelKind::surface_growth:
        prof.alpha = 2.0;
        prof.delta = 1.0;
        prof.g_coeff = params.g_coeff;
        prof.g_exponent = 3.0;
        prof.additive = params.additive.value_or(0.0);
        break;
    case ModelKind::heat_validation:
        prof.alpha = 2.0;
        prof.delta = 2.0;
        prof.g_coeff = 0.0;
        prof.g_exponent = 1.0;
        prof.additive = 0.0;
        break;
    }
    return model;
}

double h_norm(const Model& model, std::span<const double> u) {
    check_dim(model, u);
    const double h = model.grid().spacing();
    switch (model.kind()) {
    case ModelKind::superlinear_sde:
        return std::abs(u[0]);
    case ModelKind::p_laplace_hot:
    case ModelKind::heat_validation:
        return std::sqrt(h * sum_sq(u));
    case ModelKind::fast_diffusion: {
        const auto w = negative_laplacian(model.grid()).solve(u);
        const double q = std::transform_reduce(u.begin(), u.end(), w.begin(), 0.0);
        return std::sqrt(std::max(0.0, h * q));
    }
    case ModelKind::surface_growth:
        return std::sqrt(h * sum_sq(apply_k(u, h)));
    }
    return 0.0;
}

double v_norm(const Model& model, std::span<const double> u) {
    check_dim(model, u);
    const double h = model.grid().spacing();
    switch (model.kind()) {
    case ModelKind::superlinear_sde:
        return std::abs(u[0]);
    case ModelKind::p_laplace_hot:
    case ModelKind::heat_validation: {
        const double p = p_of(model);
        double acc = 0.0;
        for (double d : face_differences(u, h)) acc += std::pow(std::abs(d), p);
        return std::pow(h * acc, 1.0 / p);
    }
    case ModelKind::fast_diffusion: {
        const double a = model.params().r + 1.0;
        double acc = 0.0;
        for (double x : u) acc += std::pow(std::abs(x), a);
        return std::pow(h * acc, 1.0 / a);
    }
    case ModelKind::surface_growth:
        return std::sqrt(h * sum_sq(apply_k(apply_k(u, h), h)));
    }
    return 0.0;
}

double h_inner(const Model& model, std::span<const double> a, std::span<const double> b) {
    check_dim(model, a);
    check_dim(model, b);
    const double h = model.grid().spacing();
    switch (model.kind()) {
    case ModelKind::superlinear_sde:
        return a[0] * b[0];
    case ModelKind::p_laplace_hot:
    case ModelKind::heat_validation:
        return h * std::transform_reduce(a.begin(), a.end(), b.begin(), 0.0);
    case ModelKind::fast_diffusion: {
        const auto w = negative_laplacian(model.grid()).solve(b);
        return h * std::transform_reduce(a.begin(), a.end(), w.begin(), 0.0);
    }
    case ModelKind::surface_growth: {
        const auto ka = apply_k(a, h);
        const auto kb = apply_k(b, h);
        return h * std::transform_reduce(ka.begin(), ka.end(), kb.begin(), 0.0);
    }
    }
    return 0.0;
}

std::vector<double> drift(const Model& model, double /*t*/, std::span<const double> u) {
    check_dim(model, u);
    for (double x : u) {
        if (!std::isfinite(x)) throw StructuralError("drift: non-finite state entry");
    }
    const double h = model.grid().spacing();
    const auto& prm = model.params();
    switch (model.kind()) {
    case ModelKind::superlinear_sde: {
        const double x = u[0];
        double out = prm.source * x * x;
        if (prm.sink != 0.0) out -= prm.sink * signed_pow(x, prm.sink_exponent);
        return {out};
    }
    case ModelKind::p_laplace_hot:
    case ModelKind::heat_validation: {
        const double p = p_of(model);
        auto d = face_differences(u, h);
        const auto w = p_laplace_face_weights(d, p, prm.eps_reg);
        for (std::size_t j = 0; j < d.size(); ++j) d[j] *= w[j];
        std::vector<double> out(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) out[i] = (d[i + 1] - d[i]) / h;
        if (model.kind() == ModelKind::p_laplace_hot) {
            for (std::size_t i = 0; i < u.size(); ++i) out[i] += u[i] * u[i];
        }
        return out;
    }
    case ModelKind::fast_diffusion: {
        std::vector<double> phi(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) phi[i] = signed_pow(u[i], prm.r);
        auto out = apply_k(phi, h);
        for (double& x : out) x = -x;
        return out;
    }
    case ModelKind::surface_growth: {
        const std::size_t n = u.size();
        const auto ku = apply_k(u, h);
        const auto kku = apply_k(ku, h);
        std::vector<double> grad_sq(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double left = i > 0 ? u[i - 1] : 0.0;
            const double right = i + 1 < n ? u[i + 1] : 0.0;
            const double c = (right - left) / (2.0 * h);
            grad_sq[i] = c * c;
        }
        const auto kg = apply_k(grad_sq, h);
        std::vector<double> out(n);
        // -D^4 u - D^2 u + D^2 (D u)^2 with D^2 = -K, D^4 = K^2
        for (std::size_t i = 0; i < n; ++i) out[i] = -kku[i] + ku[i] - kg[i];
        return out;
    }
    }
    return {};
}

BandedMatrix negative_laplacian(const GridSpec& grid) {
    const std::size_t n = grid.n_interior;
    const double inv = 1.0 / (grid.spacing() * grid.spacing());
    BandedMatrix k(n, 1, 1);
    for (std::size_t i = 0; i < n; ++i) {
        k.at(i, i) = 2.0 * inv;
        if (i + 1 < n) {
            k.at(i, i + 1) = -inv;
            k.at(i + 1, i) = -inv;
        }
    }
    return k;
}

double laplacian_eigenvalue(const GridSpec& grid, std::size_t k) {
    const double h = grid.spacing();
    return 2.0 / (h * h) * (1.0 - std::cos(static_cast<double>(k) * std::numbers::pi * h / grid.length));
}

std::vector<double> sine_mode(const GridSpec& grid, std::size_t k) {
    const double h = grid.spacing();
    std::vector<double> u(grid.n_interior);
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = std::sin(static_cast<double>(k) * std::numbers::pi * static_cast<double>(i + 1) * h / grid.length);
    }
    return u;
}

BandedMatrix stiff_linear_part(const Model& model, std::span<const double> u) {
    check_dim(model, u);
    const double h = model.grid().spacing();
    const double inv = 1.0 / (h * h);
    const std::size_t n = model.dim();
    const auto& prm = model.params();
    switch (model.kind()) {
    case ModelKind::superlinear_sde: {
        BandedMatrix a(1, 0, 0);
        a.at(0, 0) = prm.source * u[0] - (prm.sink != 0.0 ? scalar_sink_coefficient(prm, u[0]) : 0.0);
        return a;
    }
    case ModelKind::heat_validation:
    case ModelKind::p_laplace_hot: {
        const auto w = p_laplace_face_weights(face_differences(u, h), p_of(model), prm.eps_reg);
        BandedMatrix a(n, 1, 1);
        for (std::size_t i = 0; i < n; ++i) {
            a.at(i, i) = -(w[i] + w[i + 1]) * inv;
            if (i + 1 < n) a.at(i, i + 1) = w[i + 1] * inv;
            if (i > 0) a.at(i, i - 1) = w[i] * inv;
        }
        return a;
    }
    case ModelKind::fast_diffusion: {
        const auto w = fast_diffusion_weights(u, prm.r);
        BandedMatrix a(n, 1, 1);
        for (std::size_t i = 0; i < n; ++i) {
            a.at(i, i) = -2.0 * inv * w[i];
            if (i + 1 < n) a.at(i, i + 1) = inv * w[i + 1];
            if (i > 0) a.at(i, i - 1) = inv * w[i - 1];
        }
        return a;
    }
    case ModelKind::surface_growth: {
        const BandedMatrix k = negative_laplacian(model.grid());
        BandedMatrix a(n, 2, 2);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j0 = i >= 2 ? i - 2 : 0;
            const std::size_t j1 = std::min(n - 1, i + 2);
            for (std::size_t j = j0; j <= j1; ++j) {
                double k2 = 0.0;
                for (std::size_t l = (i >= 1 ? i - 1 : 0); l <= std::min(n - 1, i + 1); ++l) {
                    k2 += k.get(i, l) * k.get(l, j);
                }
                a.at(i, j) = -k2 + k.get(i, j);
            }
        }
        return a;
    }
    }
    return {};
}

double embedding_constant(const Model& model, unsigned long long seed) {
    switch (model.kind()) {
    case ModelKind::superlinear_sde:
        return 1.0;
    case ModelKind::heat_validation:
    case ModelKind::surface_growth:
        return exact_embedding_constant(model);
    default:
        break;
    }

    constexpr int kRestarts = 50;
    constexpr int kIterations = 500;
    constexpr double kTol = 1e-8;
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t n = model.dim();
    double best = std::numeric_limits<double>::infinity();
    bool best_converged = false;
    for (int restart = 0; restart < kRestarts; ++restart) {
        std::vector<double> u(n);
        if (restart == 0) {
            u = sine_mode(model.grid(), 1);
        } else {
            for (double& x : u) x = normal(gen);
        }
        const auto [f, converged] = descend(model, u, kIterations, kTol);
        if (f < best) {
            best = f;
            best_converged = converged;
        }
    }
    if (!best_converged) {
        throw DiagnosticError("embedding constant search did not converge", best);
    }
    return best;
}

} // namespace regnoise
