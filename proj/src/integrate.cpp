#include "regnoise/integrate.hpp"

#include "regnoise/errors.hpp"

#include <cmath>
#include <limits>

namespace regnoise {

namespace {

bool all_finite(std::span<const double> u) {
    for (double x : u) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

State overflow_state(const State& s, double dt) {
    State out;
    out.values.assign(s.values.size(), std::numeric_limits<double>::infinity());
    out.t = s.t + dt;
    return out;
}

double safe_h_norm(const Model& model, std::span<const double> u) {
    if (!all_finite(u)) return std::numeric_limits<double>::infinity();
    const double hn = h_norm(model, u);
    return std::isfinite(hn) ? hn : std::numeric_limits<double>::infinity();
}

} // namespace

std::string_view to_string(Scheme scheme) noexcept {
    switch (scheme) {
    case Scheme::euler_maruyama: return "euler_maruyama";
    case Scheme::tamed: return "tamed";
    case Scheme::semi_implicit: return "semi_implicit";
    }
    return "unknown";
}

Scheme scheme_from_string(std::string_view name) {
    for (auto s : {Scheme::euler_maruyama, Scheme::tamed, Scheme::semi_implicit}) {
        if (to_string(s) == name) return s;
    }
    throw ValidationError("unknown scheme '" + std::string(name) + "'");
}

std::string_view to_string(PathStatus status) noexcept {
    switch (status) {
    case PathStatus::completed: return "completed";
    case PathStatus::blown_up: return "blown_up";
    case PathStatus::extinct: return "extinct";
    }
    return "unknown";
}

std::size_t SimConfig::steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }

void SimConfig::validate() const {
    if (!(dt > 0.0)) throw ValidationError("sim.dt must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("sim.T must be positive");
    if (!(dt < horizon)) throw ValidationError("sim.dt must be smaller than sim.T");
    if (!(blowup_threshold > 1.0)) throw ValidationError("sim.blowup_threshold must exceed 1");
    if (!(extinction_threshold > 0.0 && extinction_threshold < 1.0)) {
        throw ValidationError("sim.extinction_threshold must lie in (0, 1)");
    }
    if (record_stride < 1) throw ValidationError("sim.record_stride must be >= 1");
}

State step_em(const Model& model, const NoiseSpec& noise, const State& s, double dt, const WienerIncrement& w) {
    if (!all_finite(s.values)) throw StructuralError("step_em: non-finite state");
    const auto a = drift(model, s.t, s.values);
    const auto b = diffusion_apply(noise, model, s.values, w);
    State out{s.values, s.t + dt};
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += a[i] * dt + b[i];
    return out;
}

State step_tamed(const Model& model, const NoiseSpec& noise, const State& s, double dt, const WienerIncrement& w) {
    if (!all_finite(s.values)) throw StructuralError("step_tamed: non-finite state");
    const auto a = drift(model, s.t, s.values);
    const auto b = diffusion_apply(noise, model, s.values, w);
    std::vector<double> inc(a.size());
    for (std::size_t i = 0; i < inc.size(); ++i) inc[i] = a[i] * dt + b[i];
    const double size = safe_h_norm(model, inc);
    if (!std::isfinite(size)) return overflow_state(s, dt);
    State out{s.values, s.t + dt};
    const double scale = 1.0 / (1.0 + size);
    for (std::size_t i = 0; i < inc.size(); ++i) out.values[i] += inc[i] * scale;
    return out;
}

State step_semi_implicit(const Model& model, const NoiseSpec& noise, const State& s, double dt,
                         const WienerIncrement& w) {
    if (!all_finite(s.values)) throw StructuralError("step_semi_implicit: non-finite state");
    const BandedMatrix a_lin = stiff_linear_part(model, s.values);
    const auto f = drift(model, s.t, s.values);
    const auto lin = a_lin.multiply(s.values);
    const auto b = diffusion_apply(noise, model, s.values, w);
    std::vector<double> rhs(s.values.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = s.values[i] + dt * (f[i] - lin[i]) + b[i];

    if (model.is_scalar()) {
        const double denom = 1.0 - dt * a_lin.at(0, 0);
        if (!(denom > 0.0)) return overflow_state(s, dt);
        return State{{rhs[0] / denom}, s.t + dt};
    }
    const BandedMatrix system = a_lin.identity_plus(-dt);
    return State{system.solve(rhs), s.t + dt};
}

State step(Scheme scheme, const Model& model, const NoiseSpec& noise, const State& s, double dt,
           const WienerIncrement& w) {
    switch (scheme) {
    case Scheme::euler_maruyama: return step_em(model, noise, s, dt, w);
    case Scheme::tamed: return step_tamed(model, noise, s, dt, w);
    case Scheme::semi_implicit: return step_semi_implicit(model, noise, s, dt, w);
    }
    throw ValidationError("unknown scheme");
}

TrajectoryRecord run_path(const Model& model, const NoiseSpec& noise, const SimConfig& cfg,
                          std::span<const double> x0, RngStream rng) {
    cfg.validate();
    if (x0.size() != model.dim()) throw StructuralError("run_path: initial state dimension mismatch");

    TrajectoryRecord rec;
    rec.seed = rng.master_seed();
    rec.path_index = rng.path_index();
    const std::size_t n_steps = cfg.steps();

    State s{std::vector<double>(x0.begin(), x0.end()), 0.0};
    bool extinct = false;
    double hn = safe_h_norm(model, s.values);
    if (hn <= cfg.extinction_threshold) {
        std::fill(s.values.begin(), s.values.end(), 0.0);
        hn = 0.0;
        extinct = true;
        rec.status = PathStatus::extinct;
        rec.event_time = 0.0;
    }

    auto record = [&](double t, double h, std::span<const double> u) {
        rec.times.push_back(t);
        rec.h_norms.push_back(h);
        rec.v_norms.push_back(h == 0.0 ? 0.0 : (std::isfinite(h) ? v_norm(model, u) : h));
        if (model.is_scalar()) rec.values.push_back(u[0]);
    };
    record(0.0, hn, s.values);
    rec.sup_h_norm = hn;

    const std::vector<double> zeros(s.values.size(), 0.0);
    for (std::size_t k = 1; k <= n_steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        const bool on_grid = k % cfg.record_stride == 0 || k == n_steps;
        if (extinct) {
            // absorbed at zero: no more randomness is consumed
            if (on_grid) record(t, 0.0, zeros);
            continue;
        }
        const auto w = wiener_increments(rng, noise.channels(), cfg.dt);
        State next = step(cfg.scheme, model, noise, s, cfg.dt, w);
        next.t = t;
        hn = safe_h_norm(model, next.values);
        if (!(hn < cfg.blowup_threshold)) {
            rec.status = PathStatus::blown_up;
            rec.event_time = t;
            rec.sup_h_norm = std::numeric_limits<double>::infinity();
            rec.times.push_back(t);
            rec.h_norms.push_back(hn);
            rec.v_norms.push_back(std::isfinite(hn) ? v_norm(model, next.values) : hn);
            if (model.is_scalar()) rec.values.push_back(next.values[0]);
            rec.terminal_state = std::move(next);
            return rec;
        }
        if (hn <= cfg.extinction_threshold) {
            std::fill(next.values.begin(), next.values.end(), 0.0);
            hn = 0.0;
            extinct = true;
            rec.status = PathStatus::extinct;
            rec.event_time = t;
        }
        rec.sup_h_norm = std::max(rec.sup_h_norm, hn);
        s = std::move(next);
        if (on_grid) record(t, hn, s.values);
    }
    s.t = static_cast<double>(n_steps) * cfg.dt;
    rec.terminal_state = std::move(s);
    return rec;
}

} // namespace regnoise
